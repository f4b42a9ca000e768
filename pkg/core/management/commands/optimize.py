"""
Throughput optimization over K and the sub-codeword lengths, and the
SNR sweeps behind the throughput, gain and delay-threshold panels.

Usage:
    python manage.py optimize --snr-db 10 --k 600 -M 2 --mode variable
    python manage.py optimize --snr-db 0:20:2 -M 2 --mode fixed --df 0.05
    python manage.py optimize --snr-db 0:20:2 --k 600 -M 2 --mode fig1a --packets 100000 --out fig1a.csv
    python manage.py optimize --snr-db 0:20:2 --k 300 --k 600 -M 2 --mode fig1b
    python manage.py optimize --snr-db 0:20:0.5 --k 300 --k 600 -M 2 --mode fig1c

The panel modes also write a gnuplot script (<out>.gp) next to the CSV.
"""

from core.management.base import HarqCommand
from core.schemas.data_models import OptimizationMode
from core.services.reports import PANEL_NATS, PANELS, write_gnuplot

MODES = [m.value for m in OptimizationMode] + sorted(PANELS)


class Command(HarqCommand):
    help = 'Optimize INR HARQ or open-loop throughput, or sweep a reproduction panel'
    command = 'optimize'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--mode',
            choices=MODES,
            default=OptimizationMode.VARIABLE_LENGTH.value,
            help='variable, fixed or openloop search, or a panel sweep (fig1a, fig1b, fig1c)',
        )

    def is_panel(self, options):
        return options['mode'] in PANELS

    def report_name(self, options):
        return options['mode'] if self.is_panel(options) else 'optimize'

    def report_options(self, options):
        return {'mode': options['mode']}

    def default_nats(self, options):
        if options['mode'] in ('fig1b', 'fig1c'):
            return list(PANEL_NATS)
        return []

    def default_out(self, options):
        if self.is_panel(options):
            return f"{options['mode']}.csv"
        return None

    def check(self, sweep, options):
        mode = options['mode']
        self.require(sweep.optimize_lengths, "optimize searches the lengths; give -M instead of --lengths")
        if mode == 'fig1c':
            self.require(sweep.rounds >= 2, 'fig1c needs -M 2 or more')
            self.require(sweep.relative_delay is None, 'fig1c does not take --df')

    def after_output(self, sweep, options):
        if self.is_panel(options):
            script = write_gnuplot(options['mode'], sweep.out, sweep.nats)
            self.stderr.write(f'wrote plot script {script}')

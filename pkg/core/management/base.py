"""
Shared plumbing for the analysis commands.

Every command takes the same sweep flags, resolves them against an
optional key=value config file and the HARQFBL_* settings, evaluates its
report over the SNR axis, and writes CSV to stdout or --out.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from dotenv import dotenv_values

from core.exceptions import HarqAnalysisError
from core.schemas.data_models import OutageMethod, SweepSpec
from core.services.reports import COLUMNS, config_lines, parse_lengths, parse_snr_axis, render_csv, run_sweep

USAGE_ERROR = 1
NUMERICAL_FAILURE = 2

# Keys accepted in a --config file, mapped to option names
CONFIG_KEYS = {
    'snr_db': 'snr_db',
    'k': 'k',
    'lengths': 'lengths',
    'm': 'max_rounds',
    'max_rounds': 'max_rounds',
    'df': 'df',
    'd': 'd',
    'method': 'method',
    'packets': 'packets',
    'seed': 'seed',
    'workers': 'workers',
    'out': 'out',
}


def _parse_nats(value: Any) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(',') if v.strip()]


def read_config_file(path: str) -> Dict[str, str]:
    """key=value file (dotenv syntax); keys are case-insensitive, '-' and '_' equivalent."""
    if not Path(path).is_file():
        raise CommandError(f'config file not found: {path}', returncode=USAGE_ERROR)
    values = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lower().replace('-', '_')
        if name not in CONFIG_KEYS:
            raise CommandError(f"unknown key '{key}' in {path}", returncode=USAGE_ERROR)
        if value is not None:
            values[CONFIG_KEYS[name]] = value
    return values


class HarqCommand(BaseCommand):
    """
    Base class of the CSV-producing commands.

    Subclasses set `command` and implement `report_name` and `check`;
    `produce` and `after_output` can be overridden.
    """

    command = ''
    requires_system_checks = []
    # simulate fans out over blocks instead of sweep points
    fan_out_points = True
    default_packets = 0

    def add_arguments(self, parser):
        parser.add_argument('--snr-db', dest='snr_db', help="SNR axis in dB: '10', '0:20:1' (stop included) or '0,5,10'")
        parser.add_argument('--k', dest='k', action='append', type=float, help='information nats K; repeat for several values')
        parser.add_argument('--lengths', help="sub-codeword lengths '300,300' or 'optimize'")
        parser.add_argument('-M', dest='max_rounds', type=int, help='maximum number of HARQ rounds')
        parser.add_argument('--df', dest='df', type=float, help='relative feedback delay D^f = D / l_(M)')
        parser.add_argument('--d', dest='d', type=float, help='absolute feedback delay D in channel uses')
        parser.add_argument('--method', choices=[m.value for m in OutageMethod], help='outage estimator')
        parser.add_argument('--packets', type=int, help='Monte Carlo packets')
        parser.add_argument('--seed', type=int, help='Monte Carlo seed')
        parser.add_argument('--workers', type=int, help='parallel worker processes')
        parser.add_argument('--out', help='CSV output path (default: stdout)')
        parser.add_argument('--config', help='key=value file with defaults for the flags above')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run_from_argv(self, argv):
        self._arguments_parsed = False
        try:
            super().run_from_argv(argv)
        except SystemExit as exc:
            # argparse exits with 2 on bad flags; 2 is reserved for numerical failures
            if exc.code == 2 and not self._arguments_parsed:
                raise SystemExit(USAGE_ERROR) from None
            raise

    # -- option resolution ---------------------------------------------------

    def resolve(self, options: Dict[str, Any]) -> Dict[str, Any]:
        """Flags, then the config file, then settings defaults."""
        merged: Dict[str, Any] = {}
        if options.get('config'):
            merged.update(read_config_file(options['config']))
        for name in CONFIG_KEYS.values():
            if options.get(name) is not None:
                merged[name] = options[name]
        return merged

    def default_nats(self, options: Dict[str, Any]) -> List[float]:
        return []

    def default_out(self, options: Dict[str, Any]) -> Optional[str]:
        return None

    def build_sweep(self, options: Dict[str, Any]) -> SweepSpec:
        values = self.resolve(options)
        if 'snr_db' not in values:
            raise CommandError('--snr-db is required', returncode=USAGE_ERROR)

        nats = _parse_nats(values['k']) if 'k' in values else self.default_nats(options)
        lengths = parse_lengths(values['lengths']) if 'lengths' in values else None
        max_rounds = int(values['max_rounds']) if 'max_rounds' in values else None
        packets = int(values['packets']) if 'packets' in values else self.default_packets

        return SweepSpec(
            snr_db=parse_snr_axis(values['snr_db']),
            nats=tuple(nats),
            max_rounds=max_rounds,
            lengths=lengths,
            relative_delay=float(values['df']) if 'df' in values else None,
            feedback_delay=float(values['d']) if 'd' in values else None,
            method=OutageMethod(values.get('method', OutageMethod.ORACLE.value)),
            out=values.get('out') or self.default_out(options),
            min_subcodeword_length=settings.HARQFBL_MIN_SUBCODEWORD_LENGTH,
            oracle_tol=settings.HARQFBL_ORACLE_TOL,
            series_tol=settings.HARQFBL_SERIES_TOL,
            eps_points=settings.HARQFBL_EPS_GRID_POINTS,
            eps_range=(settings.HARQFBL_EPS_MIN, settings.HARQFBL_EPS_MAX),
            nats_range=(settings.HARQFBL_NATS_MIN, settings.HARQFBL_NATS_MAX),
            length_max=settings.HARQFBL_LENGTH_MAX,
            packets=packets,
            seed=int(values.get('seed', settings.HARQFBL_SIM_SEED)),
            workers=int(values.get('workers', settings.HARQFBL_WORKERS)),
        )

    # -- hooks -----------------------------------------------------------------

    def report_name(self, options: Dict[str, Any]) -> str:
        return self.command.replace('-', '_')

    def report_options(self, options: Dict[str, Any]) -> Dict[str, Any]:
        return {}

    def check(self, sweep: SweepSpec, options: Dict[str, Any]) -> None:
        """Raise CommandError for flag combinations the report cannot use."""

    def produce(self, sweep: SweepSpec, options: Dict[str, Any]) -> List[list]:
        return run_sweep(
            self.report_name(options),
            sweep,
            self.report_options(options),
            fan_out=self.fan_out_points,
        )

    def after_output(self, sweep: SweepSpec, options: Dict[str, Any]) -> None:
        pass

    def echoed_config(self, sweep: SweepSpec, options: Dict[str, Any]) -> Dict[str, Any]:
        # workers and out are left out so the CSV does not depend on them
        echoed = sweep.model_dump(mode='json', exclude={'workers', 'out'})
        echoed.update(self.report_options(options))
        return echoed

    def require(self, condition: bool, message: str) -> None:
        if not condition:
            raise CommandError(message, returncode=USAGE_ERROR)

    # -- entry point -------------------------------------------------------------

    def handle(self, *args, **options):
        self._arguments_parsed = True
        try:
            sweep = self.build_sweep(options)
            self.check(sweep, options)
            rows = self.produce(sweep, options)
        except CommandError:
            raise
        except HarqAnalysisError as exc:
            raise CommandError(f'numerical failure at {exc}', returncode=NUMERICAL_FAILURE)
        except ValueError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)

        report = self.report_name(options)
        text = render_csv(
            COLUMNS[report],
            rows,
            config_lines(self.command, self.echoed_config(sweep, options)),
        )
        if sweep.out:
            with open(sweep.out, 'w', newline='') as handle:
                handle.write(text)
            self.stderr.write(f'wrote {len(rows)} row(s) to {sweep.out}')
        else:
            self.stdout.write(text, ending='')
        self.after_output(sweep, options)

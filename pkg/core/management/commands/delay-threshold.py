"""
Largest relative feedback delay for which fixed-length HARQ is
guaranteed to beat open-loop transmission, with its bounds.

Usage:
    python manage.py delay-threshold --snr-db 0:20:0.5 --k 300 --k 600 -M 2
"""

from core.management.base import HarqCommand
from core.services.reports import PANEL_NATS


class Command(HarqCommand):
    help = 'Usefulness threshold r of D^f and its bounds r_lower, r_upper'
    command = 'delay-threshold'

    def default_nats(self, options):
        return list(PANEL_NATS)

    def check(self, sweep, options):
        self.require(sweep.optimize_lengths, 'the threshold uses the open-loop optimal length; drop --lengths')
        self.require(sweep.rounds >= 2, 'the delay threshold needs -M 2 or more')
        self.require(
            sweep.relative_delay is None and sweep.feedback_delay is None,
            'the delay threshold does not take a feedback delay',
        )

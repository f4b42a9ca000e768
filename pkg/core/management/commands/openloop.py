"""
Open-loop (single transmission, no feedback) throughput.

Usage:
    python manage.py openloop --snr-db 10 --k 600 --lengths 600
    python manage.py openloop --snr-db 0:20:2 --k 600 --lengths optimize
    python manage.py openloop --snr-db 10 --lengths optimize      # K optimized too
"""

from core.management.base import HarqCommand


class Command(HarqCommand):
    help = 'Open-loop throughput (K/l)(1 - Ω) for a given or optimized parent codeword'
    command = 'openloop'

    def check(self, sweep, options):
        self.require(
            sweep.optimize_lengths or bool(sweep.nats),
            'openloop with explicit --lengths needs --k',
        )
        self.require(sweep.feedback_delay is None and sweep.relative_delay is None, 'openloop has no feedback delay')

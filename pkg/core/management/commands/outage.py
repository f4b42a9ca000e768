"""
Per-round outage probabilities with every estimator.

Usage:
    python manage.py outage --snr-db 10 --k 600 --lengths 300,300
    python manage.py outage --snr-db 0:20:1 --k 600 --lengths 600
"""

from core.management.base import HarqCommand


class Command(HarqCommand):
    help = 'Tabulate Ω_m (oracle, high-SNR, linearized) and the bounds v_m, u_m per round'
    command = 'outage'

    def check(self, sweep, options):
        self.require(bool(sweep.nats), 'outage needs --k')
        self.require(not sweep.optimize_lengths, 'outage needs explicit --lengths')

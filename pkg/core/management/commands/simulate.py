"""
Monte Carlo simulation of INR HARQ next to the analytical throughput.

Usage:
    python manage.py simulate --snr-db 10 --k 600 --lengths 300,300 --packets 1000000 --seed 7
    python manage.py simulate --snr-db 0:20:5 --k 600 --lengths 300,300 --workers 8

Blocks of packets are spread over --workers; for a fixed --seed the CSV
is identical for any worker count.
"""

from django.conf import settings

from core.management.base import HarqCommand


class Command(HarqCommand):
    help = 'Simulate packet transmissions and compare with the oracle-based analysis'
    command = 'simulate'
    fan_out_points = False

    @property
    def default_packets(self):
        return settings.HARQFBL_SIM_PACKETS

    def check(self, sweep, options):
        self.require(bool(sweep.nats), 'simulate needs --k')
        self.require(not sweep.optimize_lengths, 'simulate needs explicit --lengths')
        self.require(sweep.packets >= 1, '--packets must be at least 1')

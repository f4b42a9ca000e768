"""
Renewal-reward throughput of a given INR HARQ scheme.

Usage:
    python manage.py throughput --snr-db 10 --k 600 --lengths 300,300 --df 0
    python manage.py throughput --snr-db 0:20:2 --k 600 --lengths 200,400 --d 50 --method linearized
"""

from core.management.base import HarqCommand


class Command(HarqCommand):
    help = 'Throughput η = K(1 - Ω_M)/𝒯 of an INR HARQ scheme over an SNR sweep'
    command = 'throughput'

    def check(self, sweep, options):
        self.require(bool(sweep.nats), 'throughput needs --k')
        self.require(not sweep.optimize_lengths, "throughput needs explicit --lengths (use 'optimize' for searches)")

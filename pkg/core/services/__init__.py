"""
Analysis services.

channel_fbl and outage estimate per-round outage probabilities,
harq_core turns them into throughput, optimizer searches lengths and
delays, and mc_sim checks the analysis by simulation. reports and
dispatch carry sweeps out to CSV, locally or on Celery workers.
"""

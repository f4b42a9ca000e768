from celery import shared_task
import logging

from core.services.mc_sim import simulate_block_job
from core.services.reports import sweep_point_job

logger = logging.getLogger(__name__)

# Jobs that can be fanned out; each takes and returns JSON-serializable data.
JOBS = {
    'simulate_block': simulate_block_job,
    'sweep_point': sweep_point_job,
}


@shared_task
def run_job(name, payload):
    """
    Celery entry point for core.services.dispatch.run_jobs.

    Runs one sweep point or one simulation block on a worker and returns
    its result to the dispatching command.
    """
    logger.debug(f"Running job {name}")
    return JOBS[name](payload)

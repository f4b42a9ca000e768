"""
Fan-out of independent jobs (sweep points, simulation blocks).

Jobs are looked up by name in core.tasks.JOBS and take a JSON payload, so
the same job runs inline, in a local process pool, or as a Celery group
when settings.HARQFBL_DISPATCH == 'celery'. Results always come back in
payload order.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Sequence

from django.conf import settings

logger = logging.getLogger(__name__)


def dispatch_backend() -> str:
    if not settings.configured:
        return "local"
    return getattr(settings, "HARQFBL_DISPATCH", "local")


def run_jobs(name: str, payloads: Sequence[Dict[str, Any]], workers: int = 1) -> List[Any]:
    """Run job `name` on every payload and return the results in order."""
    from core.tasks import JOBS, run_job

    if name not in JOBS:
        raise KeyError(f"unknown job: {name}")
    if not payloads:
        return []

    backend = dispatch_backend()
    if backend == "celery":
        from celery import group

        logger.info(f"dispatching {len(payloads)} '{name}' jobs to Celery")
        result = group(run_job.s(name, payload) for payload in payloads).apply_async()
        return result.get()

    job = JOBS[name]
    if workers <= 1 or len(payloads) == 1:
        return [job(payload) for payload in payloads]

    logger.debug(f"running {len(payloads)} '{name}' jobs on {workers} processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, payloads))

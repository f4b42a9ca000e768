import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'harqfbl.settings')

app = Celery('harqfbl')

# CELERY_* keys in harqfbl.settings configure the broker and serializers.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Sweep points and simulation blocks are long, CPU-bound jobs: hand them out one at a time.
app.conf.worker_prefetch_multiplier = 1
app.conf.task_acks_late = True
app.conf.task_routes = {
    'core.tasks.run_job': {'queue': os.getenv('HARQFBL_QUEUE', 'celery')},
}

app.autodiscover_tasks()

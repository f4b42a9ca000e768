import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only management commands run in this project; the key is never used to sign anything.
SECRET_KEY = os.getenv('SECRET_KEY', 'harqfbl-local-key')

DEBUG = os.getenv('DEBUG', 'False').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'core',
]

# No persistence: every result is written as CSV
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Logging: diagnostics go to stderr, CSV goes to stdout or --out
HARQFBL_LOG = os.getenv('HARQFBL_LOG', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'diagnostic': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'diagnostic',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['stderr'],
            'level': HARQFBL_LOG,
            'propagate': False,
        },
    },
}

# Channel / protocol model
HARQFBL_MIN_SUBCODEWORD_LENGTH = int(os.getenv('HARQFBL_MIN_SUBCODEWORD_LENGTH', '100'))

# Outage estimators
HARQFBL_ORACLE_TOL = float(os.getenv('HARQFBL_ORACLE_TOL', '1e-8'))
HARQFBL_SERIES_TOL = float(os.getenv('HARQFBL_SERIES_TOL', '1e-10'))
HARQFBL_EPS_GRID_POINTS = int(os.getenv('HARQFBL_EPS_GRID_POINTS', '32'))
HARQFBL_EPS_MIN = float(os.getenv('HARQFBL_EPS_MIN', '1e-6'))
HARQFBL_EPS_MAX = float(os.getenv('HARQFBL_EPS_MAX', '1.0'))

# Optimizer search bounds (K in nats, lengths in channel uses)
HARQFBL_NATS_MIN = float(os.getenv('HARQFBL_NATS_MIN', '50'))
HARQFBL_NATS_MAX = float(os.getenv('HARQFBL_NATS_MAX', '4000'))
HARQFBL_LENGTH_MAX = int(os.getenv('HARQFBL_LENGTH_MAX', '10000'))

# Monte Carlo
HARQFBL_SIM_PACKETS = int(os.getenv('HARQFBL_SIM_PACKETS', '1000000'))
HARQFBL_SIM_SEED = int(os.getenv('HARQFBL_SIM_SEED', '7'))
HARQFBL_WORKERS = int(os.getenv('HARQFBL_WORKERS', '1'))

# Fan-out backend for sweep points and simulation blocks: 'local' or 'celery'
HARQFBL_DISPATCH = os.getenv('HARQFBL_DISPATCH', 'local')

# Celery Configuration
CELERY_BROKER_URL = os.getenv('REDIS_URL', 'redis://localhost:6379/0')
CELERY_RESULT_BACKEND = os.getenv('REDIS_URL', 'redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = os.getenv('CELERY_TASK_ALWAYS_EAGER', 'False').lower() in ('true', '1', 'yes')

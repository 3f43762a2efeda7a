from pathlib import Path
import environ

env = environ.Env(
    DEBUG=(bool, False),
    DATABASE_URL=(str, ''),
    CHEMOSCHED_THREADS=(int, 1),
    CHEMOSCHED_DATA_DIR=(str, ''),
    CHEMOSCHED_LOG_LEVEL=(str, 'INFO'),
    CHEMOSCHED_LOG_FILE=(str, ''),
)

BASE_DIR = Path(__file__).resolve().parent.parent

environ.Env.read_env(BASE_DIR / '.env')

SECRET_KEY = env('SECRET_KEY', default='chemosched-local-only-secret-key')
DEBUG = env('DEBUG')
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'scheduling',
]

if env('DATABASE_URL'):
    DATABASES = {
        'default': env.db()
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'chemosched.sqlite3',
        }
    }

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

LOG_LEVEL = env('CHEMOSCHED_LOG_LEVEL').upper()
LOG_FILE = env('CHEMOSCHED_LOG_FILE')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'scheduling': {
            'handlers': [],
            'level': LOG_LEVEL,
            'propagate': True,
        },
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': 'DEBUG',
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
    }
    LOGGING['loggers']['scheduling']['handlers'].append('file')

CHEMOSCHED = {
    'THREADS': env('CHEMOSCHED_THREADS'),
    'DATA_DIR': Path(env('CHEMOSCHED_DATA_DIR') or BASE_DIR / 'data'),
    'SHIFT_LENGTH': 240,
    'OVERTIME_LIMIT': 180,
    'WEIGHTS': (0.3, 0.3, 0.4),
    'HEDGING_LEVELS': (0.40, 0.45, 0.50, 0.55, 0.60, 0.65),
    'LPHA': {
        'alpha': 2.0,
        'rho0': 0.0001,
        'rho_u1': 0.1,
        'rho_u2': 1.0,
        'iterlimit': 100,
        'fix_start_iter': 50,
        'fix_fraction': 0.8,
        'cycle_window': 3,
        'cycle_threshold': 0.0001,
        'max_iterations': 500,
    },
}

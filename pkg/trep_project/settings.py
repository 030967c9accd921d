"""
Django settings for trep_project project.

The project has no web surface: everything runs through management commands
(train, encode, evaluate, synth). Settings hold the database used for the run
registry, logging, and the default hyperparameters of every run config section.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

import os
from dotenv import load_dotenv
from pathlib import Path
import dj_database_url

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "trep-local-only")

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    # 3rd party
    "django_extensions",
    # local apps
    "series",
    "representations",
    "evaluation",
]


# Database
# https://docs.djangoproject.com/en/5.1/ref/settings/#databases

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}

db_from_env = dj_database_url.config(conn_max_age=500)
DATABASES["default"].update(db_from_env)


# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# Default primary key field type

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging

TREP_LOG_LEVEL = os.getenv("TREP_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "series": {"handlers": ["console"], "level": TREP_LOG_LEVEL},
        "representations": {"handlers": ["console"], "level": TREP_LOG_LEVEL},
        "evaluation": {"handlers": ["console"], "level": TREP_LOG_LEVEL},
    },
}


# T-Rep run defaults
# Every value below is the default a run config section falls back to.

TREP_SEED = os.getenv("TREP_SEED")

TREP = {
    "train": {
        "batch_size": 16,
        "lr": 0.001,
        "max_epochs": 200,
        "seed": None,
    },
    "encoder": {
        "output_dims": 128,
        "hidden_dims": 128,
        "depth": 10,
        "kernel_size": 3,
        "mask_prob": 0.5,
        "te_kind": "time2vec",
        "te_dims": 16,
        "te_hidden": 32,
    },
    "tasks": {
        "alpha_inst": 0.25,
        "alpha_temp": 0.25,
        "alpha_div": 0.25,
        "alpha_pred": 0.25,
        "delta_max": 10,
        "n_div_pairs": None,
        "n_pred_instances": None,
        "n_pred_timesteps": None,
        "head_hidden": 128,
        "ablation": "none",
    },
    "forecast": {
        "horizons": [1, 5],
        "lookback": 64,
        "ridge_alphas": [0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100, 500, 1000],
        "valid_fraction": 0.2,
        "test_fraction": 0.2,
    },
    "classify": {
        "window": 10,
        "c_grid": [0.0001, 0.001, 0.01, 0.1, 1, 10, 100, 1000, 10000],
        "folds": 5,
        "test_fraction": 0.3,
    },
    "anomaly": {
        "trailing_window": 21,
        "beta": 4.0,
        "delay": 7,
        "diff_order": 0,
        "lookback": 64,
        "zscore": True,
        "valid_fraction": 0.3,
        "beta_grid": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0],
        "features": "representation",
    },
    "windowed": {
        "window": 6,
        "c_grid": [0.0001, 0.001, 0.01, 0.1, 1, 10, 100, 1000, 10000],
        "folds": 5,
        "test_fraction": 0.3,
        "features": "representation",
    },
}

from pathlib import Path
import os

import dj_database_url

BASE_DIR = Path(__file__).resolve().parent.parent

# =========================
# Core
# =========================
SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "dev-only-change-me")
DEBUG = os.environ.get("DJANGO_DEBUG", "0") == "1"
ALLOWED_HOSTS: list[str] = []

# =========================
# Apps
# =========================
INSTALLED_APPS = [
    "raga.apps.RagaConfig",
]

# =========================
# Database
# =========================
# - Locally: sqlite works (no DATABASE_URL set)
# - Shared results: set DATABASE_URL to a Postgres URL
DATABASES = {
    "default": dj_database_url.config(
        default=os.environ.get("DATABASE_URL", f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
        conn_max_age=600,
    )
}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# =========================
# i18n / tz
# =========================
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

# =========================
# Pipeline defaults
# =========================
# Every value can be overridden per run by a --config file or a command flag.
SPD_RELAXATION = int(os.environ.get("SPD_RELAXATION", "4"))
SPD_NEIGHBOURS = int(os.environ.get("SPD_NEIGHBOURS", "5"))
SPD_METRIC = os.environ.get("SPD_METRIC", "db")
SPD_FEATURES = os.environ.get("SPD_FEATURES", "all")

# Absolute bin 0 of the 720-bin grid: C2 with A4 = 440 Hz.
SPD_REF_FREQ = float(os.environ.get("SPD_REF_FREQ", "65.40639"))
SPD_CONF_THRESHOLD = float(os.environ.get("SPD_CONF_THRESHOLD", "0"))

# Extracted SPD tensors, keyed by content hash of pitch file + tonic + r.
SPD_CACHE_DIR = Path(os.environ.get("SPD_CACHE_DIR", str(BASE_DIR / ".spd_cache")))

SPD_JOBS = int(os.environ.get("SPD_JOBS", "1"))
SPD_SEED = int(os.environ.get("SPD_SEED", "0"))

# Hop of the CompMusic pitch tracks; used when writing synthetic corpora.
SPD_HOP_SECONDS = float(os.environ.get("SPD_HOP_SECONDS", "0.00444"))

# =========================
# Logging
# =========================
# Library modules log under "raga"; commands print results on stdout.
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "raga": {
            "handlers": ["console"],
            "level": os.environ.get("SPD_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}

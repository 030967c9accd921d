"""Run configs: a JSON document of sections on top of ``settings.TREP``.

Top-level keys are the paths (``data``, ``ckpt``, ``output_dir``, ``name``)
plus one object per section. Command flags are passed as ``overrides`` in the
same shape and win over the file.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from django.conf import settings

from evaluation.forms import AnomalyConfigForm, ClassifyConfigForm, ForecastConfigForm, WindowedConfigForm
from representations.exceptions import ConfigError
from representations.forms import EncoderConfigForm, TaskConfigForm, TrainConfigForm
from representations.losses import TaskConfig
from representations.trep import TrainConfig

logger = logging.getLogger(__name__)

RESOLVED_CONFIG = "resolved_config.json"
PATH_KEYS = ("data", "ckpt", "output_dir", "name")
SECTION_FORMS = {
    "train": TrainConfigForm,
    "encoder": EncoderConfigForm,
    "tasks": TaskConfigForm,
    "forecast": ForecastConfigForm,
    "classify": ClassifyConfigForm,
    "anomaly": AnomalyConfigForm,
    "windowed": WindowedConfigForm,
}


def read_config(path):
    try:
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: a run config must be a JSON object")
    return document


def resolve_seed(flag=None, configured=None):
    """``--seed`` flag, then the config's ``train.seed``, then ``TREP_SEED``, then 0."""
    for candidate in (flag, configured):
        if candidate is not None:
            return int(candidate)
    if settings.TREP_SEED not in (None, ""):
        try:
            return int(settings.TREP_SEED)
        except ValueError as exc:
            raise ConfigError(f"TREP_SEED must be an integer, got {settings.TREP_SEED!r}") from exc
    return 0


@dataclass
class RunConfig:
    seed: int
    sections: dict
    data: Optional[str] = None
    ckpt: Optional[str] = None
    output_dir: Optional[str] = None
    name: Optional[str] = None

    def train_config(self):
        train = {**self.sections["train"], "seed": self.seed}
        return TrainConfig(
            encoder=dict(self.sections["encoder"]),
            tasks=TaskConfig(**{k: v for k, v in self.sections["tasks"].items() if k != "ablation"}),
            **train,
        )

    def as_dict(self):
        return {
            **{key: getattr(self, key) for key in PATH_KEYS},
            "seed": self.seed,
            **self.sections,
        }


def resolve_run_config(document=None, overrides=None, seed=None):
    document = dict(document or {})
    overrides = overrides or {}
    unknown = set(document) - set(PATH_KEYS) - set(SECTION_FORMS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {', '.join(sorted(unknown))}")

    sections = {}
    for section, form_class in SECTION_FORMS.items():
        values = document.get(section, {})
        if not isinstance(values, dict):
            raise ConfigError(f"config section [{section}] must be a JSON object")
        values = {**values, **{k: v for k, v in overrides.get(section, {}).items() if v is not None}}
        sections[section] = form_class(values).resolve()

    sections["train"]["seed"] = resolve_seed(seed, sections["train"]["seed"])
    paths = {key: overrides.get(key) or document.get(key) for key in PATH_KEYS}
    paths = {key: None if value is None else str(value) for key, value in paths.items()}
    return RunConfig(seed=sections["train"]["seed"], sections=sections, **paths)


def write_resolved_config(config, output_dir):
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / RESOLVED_CONFIG
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config.as_dict(), f, sort_keys=True, indent=2)
        f.write("\n")
    logger.debug("resolved config written to %s", path)
    return path

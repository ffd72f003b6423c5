"""Run configuration: one YAML key-value document per run, with a stable digest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .classifier import TrainConfig
from .errors import StorageError, UsageError

# keys that only steer where/how fast things run; excluded from the digest
_NON_SEMANTIC = ("out_dir", "jobs")
CACHE_MAX_SITES = 12

# keys that determine the generated dataset
_DATA_KEYS = ("N", "J", "seed", "tau_s", "tau_a", "grid")


def _sha(doc):
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class GridConfig:
    h1_range: tuple = (0.0, 1.6)
    h2_range: tuple = (-1.6, 1.6)
    shape: tuple = (50, 50)


@dataclass(frozen=True)
class AnalysisConfig:
    sweep_h1: float = 0.39
    sweep_h2_range: tuple = (-1.6, 1.6)
    sweep_h2_step: float = 0.05
    accuracy_sizes: tuple = (5, 10, 20, 50, 100)
    accuracy_repeats: int = 10
    representative_h2: tuple = (-1.3, -0.3, 1.3)


@dataclass(frozen=True)
class RunConfig:
    N: int = 9
    J: float = 1.0
    seed: int = 0
    layers: int = 1
    train_size: int = 20
    tau_s: float = 0.5
    tau_a: float = 0.3
    cache_states: bool | None = None  # None: cache up to CACHE_MAX_SITES sites
    grid: GridConfig = field(default_factory=GridConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    out_dir: str = "runs/default"
    jobs: int = 1

    def __post_init__(self):
        if self.train_size < 1:
            raise UsageError("train_size must be at least 1")
        if self.layers < 1:
            raise UsageError("layers must be at least 1")

    @property
    def caches_states(self):
        if self.cache_states is None:
            return self.N <= CACHE_MAX_SITES
        return bool(self.cache_states)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        doc = self.to_dict()
        for key in _NON_SEMANTIC:
            doc.pop(key, None)
        return _sha(doc)

    def data_digest(self):
        """Digest of the dataset-defining keys only; shared by gen and every later step."""
        doc = self.to_dict()
        return _sha({k: doc[k] for k in _DATA_KEYS})

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "seed" in kw:
            kw["train"] = replace(self.train, seed=kw["seed"])
        return replace(self, **kw)


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise UsageError(f"{where} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise UsageError(f"unknown keys in {where}: {sorted(unknown)}")
    kw = {}
    for key, val in data.items():
        if isinstance(val, list):
            val = tuple(val)
        kw[key] = val
    return cls(**kw)


def config_from_dict(data):
    data = dict(data or {})
    nested = {
        "grid": _build(GridConfig, data.pop("grid", None), "grid"),
        "train": _build(TrainConfig, data.pop("train", None), "train"),
        "analysis": _build(AnalysisConfig, data.pop("analysis", None), "analysis"),
    }
    base = _build(RunConfig, data, "config")
    return replace(base, **nested)


def load_config(path=None):
    """Read a YAML run config; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise StorageError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg, path, portable=False):
    """Write ``cfg`` as YAML; ``portable`` drops the location and job-count keys."""
    doc = json.loads(json.dumps(cfg.to_dict()))
    if portable:
        for key in _NON_SEMANTIC:
            doc.pop(key, None)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))

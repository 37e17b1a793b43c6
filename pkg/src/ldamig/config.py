"""Experiment configuration: TOML files layered over named presets.

A configuration file holds top-level run parameters plus one table per
model, for example::

    master_seed = 7
    K = 16
    scr_grid_db = [10.0, 20.0, 30.0]
    detectors = ["amf", "mig:airm", "lda_mig:airm:4"]

    [clutter]
    cnr_db = 25.0

    [training]
    m = 300
    n = 300

Values missing from the file come from the chosen preset (``desk`` or
``paper``), and values missing there from the dataclass defaults.
"""
import copy
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .means import MeanOptions
from .measures import MEASURES
from .signal import ClutterModel, CutModel, InterferenceModel, TargetModel
from .stiefel import RgdOptions

EXPERIMENTS = ("robustness", "pd_sim", "learn", "discriminate")


@dataclass
class TrainingConfig:
    m: int = 1000
    n: int = 1000
    train_scr_db: float = 25.0
    nu_w: int = 15
    nu_b: int = 20
    measures: list = field(default_factory=lambda: [m.value for m in MEASURES])
    max_iter: int = 300
    grad_tol: float = 1e-6
    init_step: float = 1.0
    seed: int | None = None

    def rgd_options(self, master_seed):
        seed = self.seed if self.seed is not None else master_seed
        return RgdOptions(max_iter=self.max_iter, grad_tol=self.grad_tol,
                          init_step=self.init_step, seed=seed)


@dataclass
class RobustnessConfig:
    K: int = 50
    L_values: list = field(default_factory=lambda: list(range(1, 41)))
    trials: int = 2000
    epsilon: float = 1e-4


@dataclass
class DiscriminateConfig:
    samples: int = 200
    scr_db: list = field(default_factory=lambda: [5.0, 10.0])
    projection: str | None = None


@dataclass
class MeansConfig:
    max_iter: int = 200
    rel_tol: float = 1e-10

    def options(self):
        return MeanOptions(max_iter=self.max_iter, rel_tol=self.rel_tol)


@dataclass
class ExperimentConfig:
    experiment: str = "pd_sim"
    master_seed: int = 0
    N: int = 8
    M: list = field(default_factory=lambda: [6, 4, 2, 1])
    K: int = 8
    L: int = 2
    pfa: float = 1e-5
    trials: int = 2000
    calibration_trials: int | None = None
    scr_grid_db: list = field(default_factory=lambda: [float(x) for x in range(0, 55, 5)])
    detectors: list | None = None
    projection_dir: str = "projections"
    threads: int = 1
    clutter: ClutterModel = field(default_factory=ClutterModel)
    interference: InterferenceModel = field(default_factory=InterferenceModel)
    cut: CutModel = field(default_factory=CutModel)
    target: TargetModel = field(default_factory=TargetModel)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    robustness: RobustnessConfig = field(default_factory=RobustnessConfig)
    discriminate: DiscriminateConfig = field(default_factory=DiscriminateConfig)
    means: MeansConfig = field(default_factory=MeansConfig)

    def __post_init__(self):
        self.experiment = self.experiment.replace("-", "_")
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if isinstance(self.M, int):
            self.M = [self.M]
        if any(not 1 <= m < self.N for m in self.M):
            raise ValueError(f"every M must satisfy 1 <= M < N={self.N}, got {self.M}")
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.clutter.N != self.N:
            raise ValueError(f"clutter.N={self.clutter.N} disagrees with N={self.N}")
        if self.interference.count != self.L:
            raise ValueError(f"interference.count={self.interference.count} disagrees with L={self.L}")
        if self.detectors is None:
            self.detectors = default_detectors(self.training.measures, self.M)

    def to_dict(self):
        return asdict(self)


def default_detectors(measures, Ms):
    out = ["amf", "ace", "mtd"]
    for m in measures:
        out.append(f"mig:{m}")
        out.extend(f"lda_mig:{m}:{M}" for M in Ms)
    return out


PRESETS = {
    "paper": {},
    "desk": {
        "pfa": 1e-3,
        "trials": 500,
        "M": [4],
        "scr_grid_db": [20.0, 25.0, 30.0, 35.0, 40.0],
        "training": {"m": 200, "n": 200, "max_iter": 150},
        "robustness": {"trials": 200},
        "discriminate": {"samples": 150},
    },
}

_SUBTABLES = {
    "clutter": ClutterModel,
    "interference": InterferenceModel,
    "cut": CutModel,
    "target": TargetModel,
    "training": TrainingConfig,
    "robustness": RobustnessConfig,
    "discriminate": DiscriminateConfig,
    "means": MeansConfig,
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_keys(cls, table, where):
    known = {f.name for f in fields(cls)}
    extra = set(table) - known
    if extra:
        raise ValueError(f"unknown key(s) in {where}: {sorted(extra)}")


def from_dict(raw):
    """Build an :class:`ExperimentConfig` from nested plain values."""
    raw = copy.deepcopy(raw)
    _check_keys(ExperimentConfig, raw, "top level")
    N = raw.get("N", 8)
    L = raw.get("L", 2)
    raw.setdefault("clutter", {}).setdefault("N", N)
    raw.setdefault("interference", {}).setdefault("count", L)
    kwargs = {}
    for k, v in raw.items():
        if k in _SUBTABLES:
            cls = _SUBTABLES[k]
            _check_keys(cls, v, f"[{k}]")
            kwargs[k] = cls(**v)
        else:
            kwargs[k] = v
    return ExperimentConfig(**kwargs)


def load_config(path=None, preset="desk", overrides=None):
    """Preset, then the TOML file at ``path``, then ``overrides``."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}")
    raw = copy.deepcopy(PRESETS[preset])
    if path is not None:
        with open(path, "rb") as fh:
            raw = _merge(raw, tomllib.load(fh))
    if overrides:
        raw = _merge(raw, overrides)
    return from_dict(raw)


def describe(cfg):
    """Flat ``key = value`` lines of every parameter, for run metadata."""
    lines = []

    def walk(prefix, obj):
        for k, v in obj.items():
            key = f"{prefix}{k}"
            if isinstance(v, dict):
                walk(key + ".", v)
            else:
                lines.append(f"{key} = {v}")
    walk("", cfg.to_dict())
    return lines

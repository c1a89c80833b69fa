"""Run configuration and the flat ``section.key = value`` file format.

Example::

    # Kawahara, small Gaussian datum
    grid.n = 8192
    grid.length = 400
    evolution.m = 1
    evolution.dt = 1e-3
    evolution.snapshots = geom:1:50:40
    data.family = GAUSSIAN
    data.epsilon = 0.05
    data.width = 1
    verify.tail_threshold = 1e-6
    run.output_dir = runs/kw-eps005
    run.seed = 7

Blank lines and ``#`` comments are ignored.  Unknown keys are rejected.
Snapshot times are written either as a comma-separated list, as
``lin:a:b:count`` (evenly spaced), or as ``geom:a:b:count`` (geometric;
``t = 0`` is prepended when ``evolution.t_start = 0``).
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..evolution import EvolutionConfig
from ..norms import SQRT2, RegionThresholds
from ..spectral import Grid1D


class DataFamily(enum.Enum):
    GAUSSIAN = "GAUSSIAN"
    WAVE_PACKET = "WAVE_PACKET"


@dataclass(frozen=True)
class DataParams:
    family: DataFamily = DataFamily.GAUSSIAN
    epsilon: float = 0.05
    width: float = 1.0
    center: float = 0.0
    zero_mean: bool = False
    k0: float = 1.0
    band_limit: float | None = None
    """If set, the profile is projected onto frequencies ``|xi| <~ band_limit``
    (Littlewood-Paley ``<=`` projection) before normalization."""


@dataclass(frozen=True)
class VerifyParams:
    K_s: float = 4.0
    K_c: float = 1.0
    band_ratio: float = SQRT2
    tail_threshold: float = 1e-6
    breakdown_theta: float = 3.0
    early_fraction: float = 0.2
    """Fraction of the snapshots (from the start) forming the early window
    whose median of C_0 is the breakdown reference."""

    @property
    def thresholds(self) -> RegionThresholds:
        return RegionThresholds(self.K_s, self.band_ratio)


@dataclass(frozen=True)
class RunConfig:
    grid_n: int = 8192
    grid_length: float = 400.0
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    data: DataParams = field(default_factory=DataParams)
    verify: VerifyParams = field(default_factory=VerifyParams)
    output_dir: str = "runs/default"
    seed: int = 0
    snapshots_spec: str = ""

    def __post_init__(self):
        if not self.data.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.data.epsilon}")
        if not self.data.width > 0:
            raise ValidationError(f"width must be positive, got {self.data.width}")
        if abs(self.data.center) >= self.grid_length / 8:
            raise ValidationError("data.center must satisfy |center| < L/8")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        self.grid  # validates n and L

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.grid_n, self.grid_length)

    def to_text(self) -> str:
        return dump_config(self)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def with_epsilon(self, eps: float, output_dir: str | None = None) -> "RunConfig":
        return replace(self, data=replace(self.data, epsilon=eps),
                       output_dir=self.output_dir if output_dir is None else output_dir)


# -- snapshot specifications --------------------------------------------------

def parse_times(spec: str, t_start: float | None = None) -> tuple[float, ...]:
    spec = spec.strip()
    if not spec:
        raise ValidationError("empty snapshot specification")
    if spec.startswith(("lin:", "geom:")):
        kind, *parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"bad snapshot spec {spec!r}; expected {kind}:a:b:count")
        a, b, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 2 or not b > a:
            raise ValidationError(f"bad snapshot spec {spec!r}")
        if kind == "lin":
            ts = np.linspace(a, b, count)
        else:
            if not a > 0:
                raise ValidationError("geom snapshot spacing needs a > 0")
            ts = np.geomspace(a, b, count)
            if t_start is not None and t_start < a:
                ts = np.concatenate([[t_start], ts])
        return tuple(float(t) for t in ts)
    try:
        return tuple(float(v) for v in spec.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad snapshot list {spec!r}") from exc


# -- flat key/value format ----------------------------------------------------

def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {v!r}")


def _opt_float(v: str):
    return None if v.strip().lower() in ("", "none") else float(v)


_SCHEMA = {
    "grid.n": ("grid", "n", int),
    "grid.length": ("grid", "length", float),
    "evolution.m": ("evolution", "m", int),
    "evolution.sign": ("evolution", "sign", int),
    "evolution.dt": ("evolution", "dt", float),
    "evolution.t_start": ("evolution", "t_start", float),
    "evolution.t_end": ("evolution", "t_end", float),
    "evolution.snapshots": ("evolution", "snapshots", str),
    "evolution.dealias_fraction": ("evolution", "dealias_fraction", _opt_float),
    "evolution.integrator": ("evolution", "integrator", str),
    "evolution.nonlinear_scale": ("evolution", "nonlinear_scale", float),
    "data.family": ("data", "family", lambda v: DataFamily(v.strip().upper())),
    "data.epsilon": ("data", "epsilon", float),
    "data.width": ("data", "width", float),
    "data.center": ("data", "center", float),
    "data.zero_mean": ("data", "zero_mean", _bool),
    "data.k0": ("data", "k0", float),
    "data.band_limit": ("data", "band_limit", _opt_float),
    "verify.K_s": ("verify", "K_s", float),
    "verify.K_c": ("verify", "K_c", float),
    "verify.band_ratio": ("verify", "band_ratio", float),
    "verify.tail_threshold": ("verify", "tail_threshold", float),
    "verify.breakdown_theta": ("verify", "breakdown_theta", float),
    "verify.early_fraction": ("verify", "early_fraction", float),
    "run.output_dir": ("run", "output_dir", str),
    "run.seed": ("run", "seed", int),
}


def parse_config_text(text: str) -> RunConfig:
    sections: dict[str, dict] = {"grid": {}, "evolution": {}, "data": {}, "verify": {}, "run": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ValidationError(f"line {lineno}: unknown key {key!r}")
        section, name, conv = _SCHEMA[key]
        try:
            sections[section][name] = conv(value)
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return _build(sections)


def _build(s: dict) -> RunConfig:
    ev = dict(s["evolution"])
    spec = ev.pop("snapshots", "")
    t_start = ev.get("t_start", 0.0)
    if spec:
        times = parse_times(spec, t_start)
        ev.setdefault("t_start", times[0])
        ev.setdefault("t_end", times[-1])
        ev["snapshot_times"] = times
    evo = EvolutionConfig(**ev)
    grid = s["grid"]
    run = s["run"]
    return RunConfig(
        grid_n=grid.get("n", 8192), grid_length=grid.get("length", 400.0),
        evolution=evo, data=DataParams(**s["data"]), verify=VerifyParams(**s["verify"]),
        output_dir=run.get("output_dir", "runs/default"), seed=run.get("seed", 0),
        snapshots_spec=spec)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text)


def _fmt(v) -> str:
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form (also the input of the config hash)."""
    ev = cfg.evolution
    lines = [f"grid.n = {cfg.grid_n}", f"grid.length = {_fmt(cfg.grid_length)}"]
    for f in ("m", "sign", "dt", "t_start", "t_end", "dealias_fraction",
              "integrator", "nonlinear_scale"):
        lines.append(f"evolution.{f} = {_fmt(getattr(ev, f))}")
    lines.append("evolution.snapshots = " + ",".join(repr(float(t)) for t in ev.snapshot_times))
    for f in fields(DataParams):
        lines.append(f"data.{f.name} = {_fmt(getattr(cfg.data, f.name))}")
    for f in fields(VerifyParams):
        lines.append(f"verify.{f.name} = {_fmt(getattr(cfg.verify, f.name))}")
    lines.append(f"run.output_dir = {cfg.output_dir}")
    lines.append(f"run.seed = {cfg.seed}")
    return "\n".join(lines) + "\n"

"""Time integration of ``u_t - u_5x = sign * u^m u_x`` on the periodic box.

The linear part is stiff like ``xi^5``, so it is never stepped explicitly.
With ``v = exp(-i xi^5 t) u_hat`` the equation becomes a non-stiff ODE for
``v``, which is advanced with classical RK4 (the Lawson / integrating-factor
scheme).  Internally everything works on ``rfft`` coefficients.  Multipliers
do not depend on the box offset, so the unitary phase used in
:mod:`dispersa.spectral` can be skipped here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import BlowUpError, TailOverflowError, ValidationError
from .norms import tail_mass
from .spectral import Grid1D, RealField

DEFAULT_DEALIAS = {1: 2.0 / 3.0, 2: 0.5}


@dataclass(frozen=True)
class EvolutionConfig:
    """Parameters of one run.

    ``nonlinear_scale`` multiplies the nonlinearity (0 switches it off and
    leaves the exact linear flow).  ``tail_threshold`` turns on the
    tail-overflow abort; ``None`` disables it.  ``stability_limit`` bounds
    ``dt * xi_keep * max|u|^m``, the phase the nonlinearity can add per step.
    """

    m: int = 1
    sign: int = 1
    dt: float = 1e-2
    t_start: float = 0.0
    t_end: float = 1.0
    snapshot_times: tuple = ()
    dealias_fraction: float | None = None
    integrator: str = "IFRK4"
    nonlinear_scale: float = 1.0
    tail_threshold: float | None = None
    stability_limit: float = 0.5

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ValidationError(f"m must be 1 or 2, got {self.m}")
        if self.sign not in (1, -1):
            raise ValidationError(f"sign must be +1 or -1, got {self.sign}")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not self.t_start < self.t_end:
            raise ValidationError("t_start must be smaller than t_end")
        if self.t_start < 0:
            raise ValidationError("t_start must be >= 0")
        if self.integrator != "IFRK4":
            raise ValidationError(f"unknown integrator {self.integrator!r}")
        times = tuple(float(t) for t in self.snapshot_times) or (self.t_start, self.t_end)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("snapshot_times must be strictly increasing")
        if times[0] < self.t_start or times[-1] > self.t_end:
            raise ValidationError("snapshot_times must lie in [t_start, t_end]")
        object.__setattr__(self, "snapshot_times", times)
        if self.dealias_fraction is None:
            object.__setattr__(self, "dealias_fraction", DEFAULT_DEALIAS[self.m])
        if not 0 < self.dealias_fraction <= 1:
            raise ValidationError("dealias_fraction must lie in (0, 1]")
        if self.tail_threshold is not None and not self.tail_threshold > 0:
            raise ValidationError("tail_threshold must be positive")


@dataclass(frozen=True)
class Diagnostics:
    time: float
    mass: float
    l2: float
    hamiltonian: float
    tail_mass: float


@dataclass
class Trajectory:
    config: EvolutionConfig
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    aborted: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def grid(self) -> Grid1D:
        return self.snapshots[0].grid

    def _frame(self, j: int) -> np.ndarray:
        """rfft coefficients of snapshot ``j`` with the linear flow undone."""
        cache = self.__dict__.setdefault("_frames", {})
        if j not in cache:
            s = self.snapshots[j]
            k = 2 * np.pi * np.fft.rfftfreq(s.grid.n, d=s.grid.dx)
            cache[j] = np.exp(-1j * k ** 5 * s.time) * np.fft.rfft(s.values)
        return cache[j]

    def at(self, t: float) -> np.ndarray:
        """Background values at ``t``.

        Interpolation is linear in time in the interaction picture
        ``exp(-t d^5) u``, which varies only on the nonlinear time scale.
        Interpolating ``u`` itself would have to resolve the ``xi^5`` phases.
        """
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValidationError(
                f"t={t} outside the stored background range [{ts[0]}, {ts[-1]}]")
        j = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        t0, t1 = ts[j], ts[j + 1]
        w = (t - t0) / (t1 - t0)
        V = (1 - w) * self._frame(j) + w * self._frame(j + 1)
        g = self.snapshots[j].grid
        k = 2 * np.pi * np.fft.rfftfreq(g.n, d=g.dx)
        return np.fft.irfft(np.exp(1j * k ** 5 * t) * V, g.n)


@dataclass
class LinearizedTrajectory:
    background: Trajectory
    snapshots: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])


# -- spectral helpers on rfft coefficients --------------------------------

class _Workspace:
    """Per-run FFT helpers: wavenumbers, dealias mask and cached phases."""

    def __init__(self, grid: Grid1D, keep_fraction: float):
        self.grid = grid
        self.k = 2 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)
        self.ik = 1j * self.k
        self.ik[-1] = 0.0  # odd derivative: drop the unpaired Nyquist mode
        self.mask = (np.abs(self.k) <= keep_fraction * grid.nyquist + 1e-12)
        self.mask[-1] = False
        self.xi_keep = float(self.k[self.mask].max()) if self.mask.any() else 0.0
        self._phases = {}

    def phase(self, h: float) -> np.ndarray:
        key = float(h)
        if key not in self._phases:
            self._phases[key] = np.exp(1j * self.k ** 5 * h)
        return self._phases[key]

    def fwd(self, u):
        return np.fft.rfft(u)

    def inv(self, U):
        return np.fft.irfft(U, self.grid.n)


def _product(ws: _Workspace, coeff_phys: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Dealiased ``coeff * z_x`` given physical ``coeff`` and spectral ``Z``."""
    zx = ws.inv(ws.mask * ws.ik * Z)
    return ws.mask * ws.fwd(coeff_phys * zx)


def _power_dealiased(ws: _Workspace, U: np.ndarray, m: int) -> np.ndarray:
    return ws.inv(ws.mask * U) ** m


def nonlinearity(u: RealField, m: int, sign: int) -> RealField:
    """``sign * u^m u_x`` with dealiased factors and product."""
    if m not in (1, 2):
        raise ValidationError(f"m must be 1 or 2, got {m}")
    ws = _Workspace(u.grid, DEFAULT_DEALIAS[m])
    U = ws.fwd(u.values)
    out = sign * _product(ws, _power_dealiased(ws, U, m), U)
    return u.with_values(ws.inv(out))


def hamiltonian(u: RealField, m: int, sign: int) -> float:
    """``int u_xx^2 / 2 + sign u^(m+2) / ((m+1)(m+2)) dx``."""
    g = u.grid
    k = 2 * np.pi * np.fft.rfftfreq(g.n, d=g.dx)
    uxx = np.fft.irfft(-(k ** 2) * np.fft.rfft(u.values), g.n)
    dens = 0.5 * uxx ** 2 + sign * u.values ** (m + 2) / ((m + 1) * (m + 2))
    return float(g.dx * np.sum(dens))


def diagnostics(u: RealField, m: int, sign: int) -> Diagnostics:
    v = u.values
    dx = u.grid.dx
    return Diagnostics(u.time, float(dx * v.sum()), float(math.sqrt(dx * np.dot(v, v))),
                       hamiltonian(u, m, sign), tail_mass(u))


# -- the integrator --------------------------------------------------------

def _ifrk4(ws: _Workspace, U: np.ndarray, t: float, h: float,
           rhs: Callable[[np.ndarray, float], np.ndarray]) -> np.ndarray:
    """One Lawson-RK4 step of ``U' = i k^5 U + rhs(U, t)`` of size ``h``."""
    Eh = ws.phase(0.5 * h)
    E = ws.phase(h)
    k1 = rhs(U, t)
    k2 = rhs(Eh * (U + 0.5 * h * k1), t + 0.5 * h)
    k3 = rhs(Eh * U + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(E * U + h * Eh * k3, t + h)
    return E * U + (h / 6.0) * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)


def _nonlinear_rhs(ws: _Workspace, cfg: EvolutionConfig):
    scale = cfg.sign * cfg.nonlinear_scale
    if scale == 0:
        return lambda U, t: np.zeros_like(U)
    return lambda U, t: scale * _product(ws, _power_dealiased(ws, U, cfg.m), U)


def stability_number(u: RealField, cfg: EvolutionConfig) -> float:
    """``dt * xi_keep * max|u|^m``: the nonlinear phase added per step."""
    xi_keep = cfg.dealias_fraction * u.grid.nyquist
    return cfg.dt * xi_keep * float(np.max(np.abs(u.values))) ** cfg.m * abs(cfg.nonlinear_scale)


def _check_stability(u: RealField, cfg: EvolutionConfig):
    s = stability_number(u, cfg)
    if s > cfg.stability_limit:
        raise ValidationError(
            f"dt={cfg.dt} too large: dt*xi_keep*max|u|^m = {s:.3g} > {cfg.stability_limit}")


def step(u: RealField, cfg: EvolutionConfig, dt: float | None = None) -> RealField:
    """Advance ``u`` by one step (``cfg.dt`` unless ``dt`` is given; may be negative)."""
    h = cfg.dt if dt is None else dt
    ws = _Workspace(u.grid, cfg.dealias_fraction)
    U = _ifrk4(ws, ws.fwd(u.values), u.time, h, _nonlinear_rhs(ws, cfg))
    vals = ws.inv(U)
    if not np.all(np.isfinite(vals)):
        raise BlowUpError(f"non-finite values after step to t={u.time + h}", u.time, u)
    t_new = u.time + h
    if -1e-12 * max(abs(h), 1.0) < t_new < 0:   # backward stepping onto t = 0
        t_new = 0.0
    return u.with_values(vals, time=t_new)


def _substeps(t0: float, t1: float, dt: float) -> tuple[int, float]:
    n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    return n, (t1 - t0) / n


def evolve(u0: RealField, cfg: EvolutionConfig) -> Trajectory:
    """Integrate from ``cfg.t_start`` and record every snapshot time.

    The step is shortened as needed so every snapshot time is hit exactly.
    On blow-up or tail overflow the exception carries the partial trajectory.
    """
    _check_stability(u0, cfg)
    ws = _Workspace(u0.grid, cfg.dealias_fraction)
    rhs = _nonlinear_rhs(ws, cfg)
    traj = Trajectory(cfg)
    t = cfg.t_start
    U = ws.fwd(u0.values)
    current = u0.with_values(u0.values, time=t)

    def record(field_):
        traj.snapshots.append(field_)
        d = diagnostics(field_, cfg.m, cfg.sign)
        traj.diagnostics.append(d)
        if cfg.tail_threshold is not None and d.tail_mass > cfg.tail_threshold:
            traj.aborted = "tail_overflow"
            raise TailOverflowError(
                f"tail mass {d.tail_mass:.2e} > {cfg.tail_threshold:.0e} at t={field_.time}",
                field_.time, d.tail_mass, partial=traj)

    for target in cfg.snapshot_times:
        if target > t:
            n, h = _substeps(t, target, cfg.dt)
            for _ in range(n):
                with np.errstate(over="ignore", invalid="ignore"):
                    U_new = _ifrk4(ws, U, t, h, rhs)  # finiteness is checked below
                if not np.all(np.isfinite(U_new)):
                    traj.aborted = "blow_up"
                    raise BlowUpError(f"non-finite values after t={t}", t,
                                      u0.with_values(ws.inv(U), time=t))
                U = U_new
                t += h
            t = target
            current = u0.with_values(ws.inv(U), time=t)
        record(current)
    return traj


def linearized_evolve(z0: RealField, bg: Trajectory, m: int | None = None,
                      max_gap_steps: float = 10.0) -> LinearizedTrajectory:
    """Integrate ``z_t - z_5x = sign * u^m z_x`` along the stored background.

    ``u`` is interpolated linearly in time between background snapshots,
    which must be spaced at most ``max_gap_steps * dt`` apart.  ``z`` is the
    antiderivative of the usual linearization: ``w = z_x`` solves
    ``w_t - w_5x = sign * (u^m w)_x``.
    """
    cfg = bg.config
    m = cfg.m if m is None else m
    if z0.grid != bg.grid:
        raise ValidationError("z0 grid differs from the background grid")
    ts = bg.times
    if np.any(np.diff(ts) > max_gap_steps * cfg.dt * (1 + 1e-9)):
        raise ValidationError(
            f"background snapshots are more than {max_gap_steps:g} steps apart")
    ws = _Workspace(z0.grid, cfg.dealias_fraction)
    scale = cfg.sign * cfg.nonlinear_scale

    def rhs(Z, t):
        u = bg.at(t)
        if m == 1:
            coeff = ws.inv(ws.mask * ws.fwd(u))
        else:
            coeff = _power_dealiased(ws, ws.fwd(u), m)
        return scale * _product(ws, coeff, Z)

    out = LinearizedTrajectory(bg)
    t = ts[0]
    Z = ws.fwd(z0.values)
    out.snapshots.append(z0.with_values(z0.values, time=t))
    for target in ts[1:]:
        n, h = _substeps(t, target, cfg.dt)
        for _ in range(n):
            Z = _ifrk4(ws, Z, t, h, rhs)
            t += h
        t = target
        vals = ws.inv(Z)
        if not np.all(np.isfinite(vals)):
            raise BlowUpError(f"linearized flow non-finite at t={t}", t)
        out.snapshots.append(z0.with_values(vals, time=t))
    return out


def with_times(cfg: EvolutionConfig, times, **changes) -> EvolutionConfig:
    """Copy of ``cfg`` with new snapshot times (and window fitted to them)."""
    times = tuple(float(t) for t in times)
    return replace(cfg, snapshot_times=times, t_start=times[0], t_end=times[-1], **changes)

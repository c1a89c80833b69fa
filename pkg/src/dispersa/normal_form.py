"""Normal-form bilinear multiplier and the corrected energy.

The bilinear operator with symbol ``B(xi, eta) = 1 / (xi^2 + xi eta + eta^2)``
removes the quadratic resonance because

    ((xi + eta)^5 - xi^5 - eta^5) / (xi^2 + xi eta + eta^2) = 5 xi eta (xi + eta).

The symbol does not factor, so :func:`bilinear_apply` sums directly over
mode pairs (O(n^2)).  The normalization makes ``B == 1`` reproduce the
pointwise product of band-limited fields:

    out_hat(zeta) = (2 pi)^(-1/2) * dxi * sum_{xi + eta = zeta} B(xi, eta) f_hat(xi) g_hat(eta).

Pairs whose sum falls outside the grid's frequency range are dropped rather
than wrapped.  The same goes for the unpaired Nyquist modes, which keeps the
output Hermitian.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .evolution import LinearizedTrajectory, Trajectory
from .spectral import (
    LP,
    Grid1D,
    RealField,
    SQRT_2PI,
    antiderivative,
    forward_transform,
    fractional_derivative,
    hilbert_transform,
    inverse_transform,
    lp_project,
)
from .vector_fields import OperatorParams, apply_LNL

DEFAULT_MAX_MODES = 4096


def normal_form_symbol(xi, eta):
    return 1.0 / (xi * xi + xi * eta + eta * eta)


@dataclass(frozen=True)
class BilinearSpec:
    """Symbol and the frequency threshold below which modes are discarded."""

    symbol: Callable = normal_form_symbol
    hi_cutoff: float = 0.0

    def __post_init__(self):
        if self.hi_cutoff < 0:
            raise ValidationError("hi_cutoff must be >= 0")

    @classmethod
    def at_time(cls, t: float, K_c: float = 1.0) -> "BilinearSpec":
        if not t > 0:
            raise ValidationError(f"cutoff time must be positive, got {t}")
        return cls(normal_form_symbol, K_c * t ** -0.2)


def symbol_identity(xi, eta):
    """Both sides of the resonance identity; raises at the origin."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any((xi == 0) & (eta == 0)):
        raise ValidationError("the symbol identity is undefined at xi = eta = 0")
    lhs = ((xi + eta) ** 5 - xi ** 5 - eta ** 5) / (xi * xi + xi * eta + eta * eta)
    rhs = 5.0 * xi * eta * (xi + eta)
    return lhs, rhs


def _centered(grid: Grid1D, coeffs: np.ndarray):
    """Wavenumber indices -n/2..n/2-1 and coefficients in that order."""
    k = np.fft.fftshift(np.fft.fftfreq(grid.n, d=1.0 / grid.n)).astype(int)
    return k, np.fft.fftshift(coeffs)


def _retained(grid: Grid1D, k: np.ndarray, spec: BilinearSpec) -> np.ndarray:
    xi = k * grid.dxi
    keep = (np.abs(xi) >= spec.hi_cutoff) & (k != -grid.n // 2)
    if spec.hi_cutoff == 0:
        keep &= k != 0
    return keep


def bilinear_apply(f: RealField, g: RealField, spec: BilinearSpec = BilinearSpec(),
                   chunk: int = 256) -> RealField:
    """Direct O(n^2) evaluation of the bilinear multiplier."""
    if f.grid != g.grid:
        raise ValidationError("bilinear_apply needs fields on the same grid")
    grid = f.grid
    n = grid.n
    k, F = _centered(grid, forward_transform(f).coefficients)
    _, G = _centered(grid, forward_transform(g).coefficients)
    keep = _retained(grid, k, spec)
    kk, Fk, Gk = k[keep], F[keep], G[keep]
    xi = kk * grid.dxi
    out = np.zeros(n, dtype=complex)  # indexed by zeta index + n/2
    lo, hi = -n // 2 + 1, n // 2 - 1  # Nyquist output dropped for symmetry
    for s in range(0, kk.size, chunk):
        a = slice(s, s + chunk)
        zeta = kk[a, None] + kk[None, :]
        vals = spec.symbol(xi[a, None], xi[None, :]) * Fk[a, None] * Gk[None, :]
        ok = (zeta >= lo) & (zeta <= hi)
        np.add.at(out, zeta[ok] + n // 2, vals[ok])
    out *= grid.dxi / SQRT_2PI
    coeffs = np.fft.ifftshift(out)
    F0 = forward_transform(f)
    return inverse_transform(F0.with_coefficients(coeffs))


def bilinear_bruteforce(f: RealField, g: RealField, spec: BilinearSpec = BilinearSpec()) -> np.ndarray:
    """Reference evaluation with explicit DFT sums and a double loop.

    Returns output values on the grid.  Intended for small grids only.
    """
    grid = f.grid
    n, L = grid.n, grid.length
    x = grid.x
    ks = list(range(-n // 2, n // 2))
    xi = {kk: 2 * np.pi * kk / L for kk in ks}

    def dft(v):
        return {kk: grid.dx / SQRT_2PI * sum(v[j] * np.exp(-1j * xi[kk] * x[j]) for j in range(n))
                for kk in ks}

    Fh, Gh = dft(f.values), dft(g.values)
    out = {kk: 0j for kk in ks}
    for a in ks:
        if a == -n // 2 or abs(xi[a]) < spec.hi_cutoff or (spec.hi_cutoff == 0 and a == 0):
            continue
        for b in ks:
            if b == -n // 2 or abs(xi[b]) < spec.hi_cutoff or (spec.hi_cutoff == 0 and b == 0):
                continue
            z = a + b
            if -n // 2 < z < n // 2:
                out[z] += spec.symbol(xi[a], xi[b]) * Fh[a] * Gh[b]
    vals = np.zeros(n, dtype=complex)
    for z in ks:
        coeff = out[z] * grid.dxi / SQRT_2PI
        vals += coeff * np.exp(1j * xi[z] * x) / SQRT_2PI * grid.dxi
    return vals.real


# -- corrected energy ---------------------------------------------------------

def coarsen(f: RealField, n: int) -> RealField:
    """Spectral down-sampling to ``n`` points on the same box."""
    if n >= f.grid.n:
        return f
    coarse = Grid1D(n, f.grid.length)
    F = np.fft.fft(f.values)
    keep = np.zeros(n, dtype=complex)
    h = n // 2
    keep[:h] = F[:h]
    keep[-h + 1:] = F[-h + 1:]
    vals = np.fft.ifft(keep).real * (n / f.grid.n)
    return RealField(coarse, vals, f.time)


def energy_correction(y: RealField, u: RealField, t: float, K_c: float = 1.0,
                      max_modes: int = DEFAULT_MAX_MODES) -> float:
    """``(1/10) int |D|^(-1/2) y_hi * B(d^(-1) u_hi, H |D|^(-1/2) y_hi) dx``."""
    if not t > 0:
        raise ValidationError(f"corrected_energy needs t > 0, got {t}")
    y, u = coarsen(y, max_modes), coarsen(u, max_modes)
    cut = K_c * t ** -0.2
    y_hi = lp_project(y, cut, LP.GE)
    u_hi = lp_project(u, cut, LP.GE)
    a = antiderivative(_zero_mean(u_hi))
    yh = fractional_derivative(_zero_mean(y_hi), -0.5)
    b = hilbert_transform(yh)
    B = bilinear_apply(a, b, BilinearSpec(normal_form_symbol, cut))
    return float(0.1 * y.grid.dx * np.dot(yh.values, B.values))


def _zero_mean(f: RealField) -> RealField:
    # LP-GE outputs are mean-zero up to rounding; remove that rounding.
    return f.with_values(f.values - f.values.mean())


def corrected_energy(y: RealField, u: RealField, t: float, K_c: float = 1.0,
                     max_modes: int = DEFAULT_MAX_MODES) -> float:
    plain = 0.5 * y.grid.dx * float(np.dot(y.values, y.values))
    return plain + energy_correction(y, u, t, K_c, max_modes)


@dataclass
class EnergySeries:
    times: np.ndarray
    e_corrected: np.ndarray
    e_plain: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.e_corrected / np.where(self.e_plain > 0, self.e_plain, np.nan)

    @property
    def drift_rate(self) -> np.ndarray:
        """``|dE/dt| / ||y||^2`` by finite differences over the snapshots."""
        if self.times.size < 2:
            return np.zeros_like(self.times)
        dE = np.gradient(self.e_corrected, self.times)
        return np.abs(dE) / (2.0 * self.e_plain)

    def relative_drift(self, corrected: bool = True) -> float:
        e = self.e_corrected if corrected else self.e_plain
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "E", "E_plain", "ratio", "drift_rate"])
            for row in zip(self.times, self.e_corrected, self.e_plain, self.ratio, self.drift_rate):
                wr.writerow([repr(float(v)) for v in row])


def _series(pairs, K_c, max_modes) -> EnergySeries:
    ts, ec, ep = [], [], []
    for y, u, t in pairs:
        plain = 0.5 * y.grid.dx * float(np.dot(y.values, y.values))
        ts.append(t)
        ep.append(plain)
        ec.append(plain + energy_correction(y, u, t, K_c, max_modes))
    return EnergySeries(np.array(ts), np.array(ec), np.array(ep))


def track_linearized_energy(lin: LinearizedTrajectory, K_c: float = 1.0,
                            max_modes: int = DEFAULT_MAX_MODES) -> EnergySeries:
    """``E[y]`` with ``y = |D|^(1/2) z`` along a linearized trajectory (t > 0 only)."""
    bg = lin.background
    pairs = []
    for z in lin.snapshots:
        if z.time <= 0:
            continue
        y = fractional_derivative(z, 0.5)
        u = z.with_values(bg.at(z.time))
        pairs.append((y, u, z.time))
    return _series(pairs, K_c, max_modes)


def lnl_energy_field(u: RealField, m: int = 1, sign: int = 1) -> RealField:
    """``z = |D|^(1/2) L^NL u`` at the snapshot's own time."""
    return fractional_derivative(apply_LNL(u, OperatorParams(u.time, m, sign)), 0.5)


def track_lnl_energy(traj: Trajectory, K_c: float = 1.0,
                     max_modes: int = DEFAULT_MAX_MODES) -> EnergySeries:
    cfg = traj.config
    pairs = [(lnl_energy_field(u, cfg.m, cfg.sign), u, u.time)
             for u in traj.snapshots if u.time > 0]
    return _series(pairs, K_c, max_modes)

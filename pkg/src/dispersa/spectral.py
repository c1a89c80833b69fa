"""Fourier representation of fields on a centered periodic box.

The line is modeled by the box ``[-L/2, L/2)`` with ``n`` equispaced points.
Spectral coefficients approximate the unitary transform

    f_hat(xi) = (2 pi)^(-1/2) * integral f(x) exp(-i x xi) dx

by the Riemann sum ``dx * sum_j f(x_j) exp(-i xi x_j) / sqrt(2 pi)``.  With this
normalization Parseval reads ``dx * sum |f|^2 == dxi * sum |f_hat|^2`` where
``dxi = 2 pi / L`` (see :func:`parseval_constant`).

Coefficient arrays are stored in FFT order (``numpy.fft.fftfreq``), so index
``n/2`` is the unpaired Nyquist mode ``xi = -pi n / L``.  Multipliers are
evaluated there as the even part ``(m(xi_N) + m(-xi_N)) / 2`` which keeps real
fields real; odd symbols such as ``i xi`` therefore vanish on the Nyquist mode.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import SpectralSymmetryError, ValidationError

SQRT_2PI = np.sqrt(2.0 * np.pi)
SYMMETRY_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid1D:
    """Centered periodic grid ``x_j = -L/2 + j L / n``."""

    n: int
    length: float

    def __post_init__(self):
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise ValidationError(f"n must be a power of two >= 16, got {self.n}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValidationError(f"box length must be positive, got {self.length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def x0(self) -> float:
        return -0.5 * self.length

    @property
    def nyquist(self) -> float:
        """Largest represented |xi| (the Nyquist frequency)."""
        return np.pi * self.n / self.length

    @cached_property
    def x(self) -> np.ndarray:
        return _readonly(self.x0 + self.dx * np.arange(self.n))

    @cached_property
    def xi(self) -> np.ndarray:
        return _readonly(2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx))

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i xi x0) accounts for the box not starting at the origin.
        return _readonly(np.exp(-1j * self.xi * self.x0))

    def field(self, values, time: float = 0.0) -> "RealField":
        return RealField(self, values, time)

    def zeros(self, time: float = 0.0) -> "RealField":
        return RealField(self, np.zeros(self.n), time)

    def scaled(self, factor: float) -> "Grid1D":
        """Same number of points, box length multiplied by ``factor``."""
        return Grid1D(self.n, self.length * factor)


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n,):
            raise ValidationError(
                f"field has shape {v.shape}, grid expects ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise ValidationError("field values must be finite")
        if self.time < 0 or not np.isfinite(self.time):
            raise ValidationError(f"field time must be finite and >= 0, got {self.time}")
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "time", float(self.time))

    def with_values(self, values, time: float | None = None) -> "RealField":
        return RealField(self.grid, values, self.time if time is None else time)

    def __add__(self, other: "RealField") -> "RealField":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "RealField":
        return self.with_values(c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid1D
    coefficients: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex, copy=True)
        if c.shape != (self.grid.n,):
            raise ValidationError(
                f"coefficients have shape {c.shape}, grid expects ({self.grid.n},)")
        object.__setattr__(self, "coefficients", _readonly(c))

    def with_coefficients(self, coefficients) -> "SpectralField":
        return SpectralField(self.grid, coefficients, self.time)


@dataclass(frozen=True)
class MultiplierSpec:
    """A Fourier multiplier given by its symbol ``xi -> m(xi)``."""

    symbol: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __mul__(self, other: "MultiplierSpec") -> "MultiplierSpec":
        a, b = self.symbol, other.symbol
        return MultiplierSpec(lambda xi: a(xi) * b(xi),
                              f"({self.description})*({other.description})")

    def evaluate(self, grid: Grid1D) -> np.ndarray:
        xi = grid.xi
        with np.errstate(all="ignore"):
            vals = np.asarray(self.symbol(xi), dtype=complex)
            if vals.shape != xi.shape:
                vals = np.broadcast_to(vals, xi.shape).astype(complex)
            else:
                vals = vals.copy()
            k = grid.n // 2
            vals[k] = 0.5 * (vals[k] + np.asarray(self.symbol(-xi[k:k + 1]),
                                                  dtype=complex)[0])
        bad = ~np.isfinite(vals)
        if bad.any():
            where = xi[np.argmax(bad)]
            raise ValidationError(
                f"multiplier {self.description!r} is not finite at xi={where:g}")
        return vals


def parseval_constant(grid: Grid1D) -> float:
    """Factor ``c`` with ``dx*sum|f|^2 == c*sum|f_hat|^2`` (equals ``dxi``)."""
    return grid.dxi


def forward_transform(f: RealField) -> SpectralField:
    g = f.grid
    coeffs = (g.dx / SQRT_2PI) * np.fft.fft(f.values) * g._phase
    return SpectralField(g, coeffs, f.time)


def hermitian_defect(F: SpectralField) -> float:
    """Relative size of the anti-Hermitian part of the coefficients."""
    c = F.coefficients
    mirrored = np.roll(c[::-1], 1)  # c(-xi)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(mirrored - np.conj(c))) / scale)


def _check_hermitian(c: np.ndarray, what: str):
    mirrored = np.roll(c[::-1], 1)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale > 0:
        defect = float(np.max(np.abs(mirrored - np.conj(c))) / scale)
        if defect > SYMMETRY_TOL:
            raise SpectralSymmetryError(
                f"{what} is not Hermitian (relative defect {defect:.3e}); "
                "it does not represent a real field")


def _to_physical(F: SpectralField) -> RealField:
    g = F.grid
    vals = np.fft.ifft(F.coefficients / g._phase) * (SQRT_2PI / g.dx)
    return RealField(g, vals.real, max(F.time, 0.0))


def inverse_transform(F: SpectralField) -> RealField:
    _check_hermitian(F.coefficients, "spectral state")
    return _to_physical(F)


def apply_multiplier(F: SpectralField, m: MultiplierSpec) -> SpectralField:
    return F.with_coefficients(m.evaluate(F.grid) * F.coefficients)


def apply_real(f: RealField, m: MultiplierSpec) -> RealField:
    """Apply a real-preserving multiplier to a real field.

    The symmetry check is made on the symbol rather than on the product
    coefficients: rounding in modes that are tiny but multiplied by a large
    symbol (``xi^4`` near Nyquist) would otherwise look like a defect.
    """
    sym = m.evaluate(f.grid)
    _check_hermitian(sym, f"multiplier {m.description!r}")
    F = forward_transform(f)
    return _to_physical(F.with_coefficients(sym * F.coefficients))


# -- common symbols -------------------------------------------------------

def derivative_symbol(k: int) -> MultiplierSpec:
    return MultiplierSpec(lambda xi: (1j * xi) ** k, f"(i xi)^{k}")


def abs_power_symbol(s: float) -> MultiplierSpec:
    """``|xi|^s`` with the value 0 at ``xi = 0`` for every ``s != 0``."""
    if s == 0:
        return MultiplierSpec(lambda xi: np.ones_like(xi), "1")

    def sym(xi):
        a = np.abs(xi)
        out = np.zeros_like(a)
        nz = a > 0
        out[nz] = a[nz] ** s
        return out

    return MultiplierSpec(sym, f"|xi|^{s:g}")


HILBERT = MultiplierSpec(lambda xi: -1j * np.sign(xi), "-i sgn(xi)")


def _antiderivative_symbol(xi):
    out = np.zeros(np.shape(xi), dtype=complex)
    nz = xi != 0
    out[nz] = 1.0 / (1j * xi[nz])
    return out


ANTIDERIVATIVE = MultiplierSpec(_antiderivative_symbol, "1/(i xi), 0 at xi=0")


def propagator_symbol(dt: float, sign: float = 1.0) -> MultiplierSpec:
    """``exp(i sign xi^5 dt)``; sign=+1 is the flow of ``u_t = u_5x``."""
    return MultiplierSpec(lambda xi: np.exp(1j * sign * dt * xi ** 5),
                          f"exp(i xi^5 {sign * dt:g})")


# -- operations -----------------------------------------------------------

def derivative(f: RealField, k: int) -> RealField:
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= 5):
        raise ValidationError(f"derivative order must be an integer in 0..5, got {k}")
    if k == 0:
        return f
    return apply_real(f, derivative_symbol(int(k)))


def mean_mode(f: RealField) -> float:
    """The zero mode ``f_hat(0)`` (``sqrt(2pi)^-1 * integral f``)."""
    return float(f.grid.dx * np.sum(f.values) / SQRT_2PI)


def _require_mean_zero(f: RealField, what: str, tol: float = 1e-10):
    scale = f.grid.dx * np.sum(np.abs(f.values))
    if abs(f.grid.dx * np.sum(f.values)) > tol * max(scale, 1e-300):
        raise ValidationError(f"{what} requires a mean-zero field")


def fractional_derivative(f: RealField, s: float) -> RealField:
    """``|D|^s f``.  Negative ``s`` requires mean-zero input."""
    if s == 0:
        return f
    if s < 0:
        _require_mean_zero(f, f"|D|^{s:g}")
    return apply_real(f, abs_power_symbol(s))


def hilbert_transform(f: RealField) -> RealField:
    return apply_real(f, HILBERT)


def antiderivative(f: RealField) -> RealField:
    """Mean-zero antiderivative via the symbol ``1/(i xi)``."""
    _require_mean_zero(f, "the antiderivative")
    return apply_real(f, ANTIDERIVATIVE)


# -- Littlewood-Paley -----------------------------------------------------

def _smooth_step(s):
    # C-infinity step: 0 for s <= 0, 1 for s >= 1.
    s = np.asarray(s, dtype=float)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def lp_bump(xi):
    """Even C-infinity bump: 1 on [-1, 1], 0 outside [-2, 2]."""
    a = np.abs(np.asarray(xi, dtype=float))
    return _smooth_step(2.0 - a)


class LP(enum.Enum):
    AT = "AT"
    LE = "LE"
    LT = "LT"
    GE = "GE"
    GT = "GT"


def lp_symbol(N: float, kind: LP | str) -> MultiplierSpec:
    if not N > 0:
        raise ValidationError(f"Littlewood-Paley scale must be positive, got {N}")
    kind = LP(kind)
    if kind is LP.LE:
        sym = lambda xi: lp_bump(xi / N)
    elif kind is LP.AT:
        sym = lambda xi: lp_bump(xi / N) - lp_bump(2.0 * xi / N)
    elif kind is LP.LT:
        sym = lambda xi: lp_bump(2.0 * xi / N)
    elif kind is LP.GE:
        sym = lambda xi: 1.0 - lp_bump(2.0 * xi / N)
    else:
        sym = lambda xi: 1.0 - lp_bump(xi / N)
    return MultiplierSpec(sym, f"P[{kind.value} {N:g}]")


def lp_project(f: RealField, N: float, kind: LP | str = LP.AT) -> RealField:
    return apply_real(f, lp_symbol(N, kind))


def dyadic_shells(grid: Grid1D) -> list[int]:
    """Indices j whose shell support [2^(j-1), 2^(j+1)] fits on the grid.

    The support must lie above the box frequency ``2 pi / L`` and below the
    Nyquist frequency.
    """
    lo = int(np.ceil(np.log2(grid.dxi))) + 1
    hi = int(np.floor(np.log2(grid.nyquist))) - 1
    return list(range(lo, hi + 1))


# -- dynamics and aliasing control ----------------------------------------

def linear_propagate(f: RealField, dt: float) -> RealField:
    """Exact flow of ``u_t - u_5x = 0`` over ``dt``."""
    F = apply_multiplier(forward_transform(f), propagator_symbol(dt))
    out = inverse_transform(F)
    return out.with_values(out.values, time=f.time + dt)


def dealias_mask(grid: Grid1D, keep_fraction: float) -> np.ndarray:
    if not 0 < keep_fraction <= 1:
        raise ValidationError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    if keep_fraction == 1:
        return np.ones(grid.n, dtype=bool)
    return np.abs(grid.xi) <= keep_fraction * grid.nyquist


def dealias(F: SpectralField, keep_fraction: float) -> SpectralField:
    mask = dealias_mask(F.grid, keep_fraction)
    return F.with_coefficients(np.where(mask, F.coefficients, 0.0))

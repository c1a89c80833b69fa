"""Norms, weights and region decompositions used by the decay diagnostics.

All spatial integrals are Riemann sums on the box; frequency-side norms use
the unitary coefficients from :mod:`dispersa.spectral`, so
``sobolev_norm(f, 0) == lp_norm(f, 2)`` up to rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRegionError, ValidationError
from .spectral import (
    LP,
    Grid1D,
    RealField,
    abs_power_symbol,
    derivative,
    dyadic_shells,
    forward_transform,
    lp_symbol,
)

SQRT2 = math.sqrt(2.0)


def japanese_bracket(x, t: float):
    """Time-adapted weight ``(x^2 + t^(2/5))^(1/2)``."""
    if t < 0:
        raise ValidationError(f"japanese_bracket needs t >= 0, got {t}")
    return np.sqrt(np.square(x) + t ** 0.4)


def lp_norm(f: RealField, p: float = 2.0) -> float:
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValidationError(f"L^p norms need p >= 1, got {p}")
    a = np.abs(f.values)
    if p == 2:
        return float(np.sqrt(f.grid.dx * np.dot(a, a)))
    return float((f.grid.dx * np.sum(a ** p)) ** (1.0 / p))


def _spectral_l2(coeffs: np.ndarray, grid: Grid1D) -> float:
    return float(np.sqrt(grid.dxi * np.sum(np.abs(coeffs) ** 2)))


def sobolev_norm(f: RealField, s: float) -> float:
    """Homogeneous ``||f||_{H^s dot}`` computed on the frequency side."""
    F = forward_transform(f)
    if s < 0:
        scale = np.max(np.abs(F.coefficients))
        if abs(F.coefficients[0]) > 1e-10 * max(scale, 1e-300):
            raise ValidationError(f"H^{s:g} norm requires a mean-zero field")
    w = abs_power_symbol(s).evaluate(f.grid).real if s != 0 else 1.0
    return _spectral_l2(w * F.coefficients, f.grid)


@dataclass
class NormReport:
    lp: dict = field(default_factory=dict)
    hs_half: float = 0.0
    besov: float = 0.0
    shells: dict = field(default_factory=dict)


def besov_shells(f: RealField) -> dict[int, float]:
    """Per-shell values ``2^(-j/2) ||P_j f||_2`` over representable shells."""
    F = forward_transform(f)
    out = {}
    for j in dyadic_shells(f.grid):
        sym = lp_symbol(2.0 ** j, LP.AT).evaluate(f.grid).real
        out[j] = 2.0 ** (-0.5 * j) * _spectral_l2(sym * F.coefficients, f.grid)
    return out


def besov_norm(f: RealField, with_shells: bool = False):
    """``||f||`` in homogeneous B^{-1/2}_{2,inf}: sup over shells of the table."""
    shells = besov_shells(f)
    value = max(shells.values()) if shells else 0.0
    if with_shells:
        return value, shells
    return value


def norm_report(f: RealField, ps=(1, 2, np.inf)) -> NormReport:
    value, shells = besov_norm(f, with_shells=True)
    return NormReport(lp={p: lp_norm(f, p) for p in ps},
                      hs_half=sobolev_norm(f, 0.5), besov=value, shells=shells)


# -- regions --------------------------------------------------------------

class Region(enum.Enum):
    SELF_SIMILAR = "SELF_SIMILAR"
    ELLIPTIC = "ELLIPTIC"
    HYPERBOLIC = "HYPERBOLIC"
    DYADIC = "DYADIC"
    DYADIC_E = "DYADIC_E"
    DYADIC_H = "DYADIC_H"


@dataclass(frozen=True)
class RegionThresholds:
    """``K_s`` realizes "|x| >> t^(1/5)"; dyadic bands are [R/ratio, R*ratio)."""

    self_similar: float = 4.0
    band_ratio: float = SQRT2


@dataclass(frozen=True, eq=False)
class RegionMask:
    grid: Grid1D
    indicator: np.ndarray
    label: Region
    t: float
    R: float | None = None

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.indicator))


def region_masks(grid: Grid1D, t: float,
                 thresholds: RegionThresholds = RegionThresholds()) -> list[RegionMask]:
    """Self-similar/elliptic/hyperbolic split plus dyadic bands A_R.

    Dyadic scales are ``R = 2^m t^(1/5)`` for ``m = 0, 1, ...`` until the band
    passes the box edge; since ``<x> >= t^(1/5)`` the bands cover the grid.
    For every dyadic band the elliptic and hyperbolic
    intersections are returned as well.
    """
    if not t > 0:
        raise ValidationError(f"region_masks needs t > 0, got {t}")
    x = grid.x
    scale = t ** 0.2
    ks = thresholds.self_similar * scale
    masks = [
        RegionMask(grid, np.abs(x) <= ks, Region.SELF_SIMILAR, t),
        RegionMask(grid, x > ks, Region.ELLIPTIC, t),
        RegionMask(grid, -x > ks, Region.HYPERBOLIC, t),
    ]
    br = japanese_bracket(x, t)
    ratio = thresholds.band_ratio
    top = float(br.max())
    m = 0
    while True:
        R = 2.0 ** m * scale
        band = (br >= R / ratio) & (br < R * ratio)
        masks.append(RegionMask(grid, band, Region.DYADIC, t, R))
        masks.append(RegionMask(grid, band & (x > ks), Region.DYADIC_E, t, R))
        masks.append(RegionMask(grid, band & (-x > ks), Region.DYADIC_H, t, R))
        if R * ratio > top:
            break
        m += 1
    return masks


def dyadic_masks(masks, label: Region = Region.DYADIC) -> list[RegionMask]:
    return [mk for mk in masks if mk.label is label]


def weighted_sup(f: RealField, t: float, alpha: float, beta: float,
                 mask: RegionMask | None = None) -> float:
    """``sup t^alpha <x>^beta |f|`` over the mask (whole grid if None)."""
    if not t > 0:
        raise ValidationError(f"weighted_sup needs t > 0, got {t}")
    w = t ** alpha * japanese_bracket(f.grid.x, t) ** beta * np.abs(f.values)
    if mask is not None:
        if mask.count == 0:
            raise EmptyRegionError(f"region {mask.label.value} has no grid points")
        w = w[mask.indicator]
    return float(np.max(w))


def elliptic_log_sup(f: RealField, t: float, k: int,
                     thresholds: RegionThresholds = RegionThresholds()) -> float | None:
    """Log-weighted elliptic constant for the k-th derivative.

    Returns None when no elliptic point has ``t^(-1/5) <x> >= e``.
    """
    if not t > 0:
        raise ValidationError(f"elliptic_log_sup needs t > 0, got {t}")
    x = f.grid.x
    br = japanese_bracket(x, t)
    ratio = br / t ** 0.2
    admissible = (x > thresholds.self_similar * t ** 0.2) & (ratio >= math.e)
    if not admissible.any():
        return None
    dk = derivative(f, k).values[admissible]
    b = br[admissible]
    vals = t ** (k / 4) * b ** (1 - k / 4) * np.abs(dk) / np.log(ratio[admissible])
    return float(np.max(vals))


def localized_l2(f: RealField, mask: RegionMask) -> float:
    v = f.values[mask.indicator]
    return float(np.sqrt(f.grid.dx * np.dot(v, v)))


def tail_mass(f: RealField) -> float:
    """Relative L^2 mass in the outer quarter ``|x| > L/4`` of the box."""
    total = np.dot(f.values, f.values)
    if total == 0:
        return 0.0
    out = np.abs(f.grid.x) > 0.25 * f.grid.length
    return float(np.dot(f.values[out], f.values[out]) / total)


def maximal_function(f: RealField) -> RealField:
    """Centered periodic discrete Hardy-Littlewood maximal function.

    Windows have half-widths ``r = k dx`` for ``k = 0 .. n/2`` (``k = 0`` is the
    ``r -> 0`` limit and returns ``|f(x)|``); each average is the mean of the
    ``2k+1`` samples in the window.
    """
    a = np.abs(f.values)
    n = a.size
    ext = np.concatenate([a, a, a])
    cs = np.concatenate([[0.0], np.cumsum(ext)])
    idx = np.arange(n) + n
    best = a.copy()
    for k in range(1, n // 2 + 1):
        avg = (cs[idx + k + 1] - cs[idx - k]) / (2 * k + 1)
        np.maximum(best, avg, out=best)
    return f.with_values(best)

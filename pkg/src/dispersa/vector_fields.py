"""Structural operators: ``L(t) = x + 5t d^4``, ``L^NL``, ``Lambda = d^(-1) S``.

``S = 5t d_t + x d_x + a`` generates the scaling symmetry.  For ``m = 1``,
``a = 4``; for ``m = 2``, ``a = 2``.  For a solution ``u``,

    Lambda u = L^NL u + c_m d^(-1) u,      c_1 = 3,  c_2 = 1,

and ``Lambda u`` solves the linearized equation ``z_t - z_5x = sign u^m z_x``.
Subtracting the antiderivative term, ``w = L^NL u`` solves it with a
source.  Expanding ``w_t`` directly with the equation, without going through
``d^(-1)``, gives the pointwise identity

    w_t - w_5x - sign u^m w_x = sign * C_m * u^(m+1),

where ``C_1 = 5/2 - 1 = 3/2`` and ``C_2 = 5/3 - 1 = 2/3``.

x-weighted operators use the centered box coordinate.  They are meaningful
only while the field mass stays well inside ``|x| < L/4``; callers check this
with :func:`dispersa.norms.tail_mass`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spectral import (
    Grid1D,
    RealField,
    antiderivative,
    derivative,
    linear_propagate,
)

LAMBDA_COEFFICIENT = {1: 3.0, 2: 1.0}
SOURCE_COEFFICIENT = {1: 1.5, 2: 2.0 / 3.0}


@dataclass(frozen=True)
class OperatorParams:
    t: float
    m: int = 1
    sign: int = 1

    def __post_init__(self):
        if not self.t > 0:
            raise ValidationError(f"operator time must be positive, got {self.t}")
        if self.m not in (1, 2):
            raise ValidationError(f"m must be 1 or 2, got {self.m}")
        if self.sign not in (1, -1):
            raise ValidationError(f"sign must be +1 or -1, got {self.sign}")


def apply_L(u: RealField, t: float) -> RealField:
    """``x u + 5 t u_4x``."""
    if t < 0:
        raise ValidationError(f"apply_L needs t >= 0, got {t}")
    out = u.grid.x * u.values
    if t > 0:
        out = out + 5.0 * t * derivative(u, 4).values
    return u.with_values(out)


def power_term(u: RealField, params: OperatorParams) -> np.ndarray:
    """``sign * 5 t / (m+1) * u^(m+1)``, the difference ``L^NL - L``."""
    m = params.m
    return params.sign * 5.0 * params.t / (m + 1) * u.values ** (m + 1)


def apply_LNL(u: RealField, params: OperatorParams) -> RealField:
    return u.with_values(apply_L(u, params.t).values + power_term(u, params))


def lambda_field(u: RealField, params: OperatorParams) -> RealField:
    """``L^NL u + c_m d^(-1) u``; requires mean-zero ``u``."""
    anti = antiderivative(u)
    return u.with_values(apply_LNL(u, params).values
                         + LAMBDA_COEFFICIENT[params.m] * anti.values)


def commutation_check(u0: RealField, t: float) -> float:
    """Relative L^2 gap between ``L(t) S(t) u0`` and ``S(t)(x u0)``."""
    if t == 0:
        return 0.0
    xu0 = u0.with_values(u0.grid.x * u0.values)
    lhs = apply_L(linear_propagate(u0, t), t).values
    rhs = linear_propagate(xu0, t).values
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(xu0.values))


def rescale_to_unit_time(u: RealField) -> RealField:
    """``t^(4/5) u(t, x t^(1/5))`` sampled on the box shrunk by ``t^(-1/5)``.

    The samples are reused unchanged; only the box length and the amplitude
    change, so no interpolation is involved.
    """
    t = u.time
    if not t > 0:
        raise ValidationError("rescaling needs a snapshot with t > 0")
    grid = u.grid.scaled(t ** -0.2)
    return RealField(grid, t ** 0.8 * u.values, 1.0)


# -- residual of the inhomogeneous linearized equation ---------------------

@dataclass
class ResidualSeries:
    """Per-time residuals of ``w = L^NL u`` against the linearized equation.

    ``residual`` uses the reference source coefficient.  ``fitted`` holds the
    least-squares coefficient at each time, and ``fitted_global`` is the
    fit over all interior times.
    """

    times: np.ndarray
    residual: np.ndarray
    fitted: np.ndarray
    fitted_global: float
    coefficient: float
    m: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "residual", "fitted_coefficient"])
            for row in zip(self.times, self.residual, self.fitted):
                wr.writerow([repr(float(v)) for v in row])


def _interaction_frame(w: RealField, t: float) -> np.ndarray:
    """Fourier coefficients of ``exp(-t d^5) w`` (linear flow undone)."""
    W = np.fft.fft(w.values)
    xi = w.grid.xi
    return np.exp(-1j * xi ** 5 * t) * W


def _dispersive_time_derivative(ws: list[RealField], ts: np.ndarray, i: int) -> np.ndarray:
    """``w_t - w_5x`` at ``ts[i]`` by centered differences in the interaction frame.

    Writing ``w = exp(t d^5) W`` gives ``w_t - w_5x = exp(t d^5) W_t``.  ``W``
    varies only on the slow nonlinear time scale, so the finite difference
    does not have to resolve the fifth-order phase.
    """
    h0, h1 = ts[i] - ts[i - 1], ts[i + 1] - ts[i]
    Wm = _interaction_frame(ws[i - 1], ts[i - 1])
    W0 = _interaction_frame(ws[i], ts[i])
    Wp = _interaction_frame(ws[i + 1], ts[i + 1])
    # three-point derivative on a possibly non-uniform stencil
    dW = (-(h1 / (h0 * (h0 + h1))) * Wm + ((h1 - h0) / (h0 * h1)) * W0
          + (h0 / (h1 * (h0 + h1))) * Wp)
    xi = ws[i].grid.xi
    return np.fft.ifft(np.exp(1j * xi ** 5 * ts[i]) * dW).real


def lnl_residual(snapshots, m: int = 1, sign: int = 1,
                 coefficient: float | None = None) -> ResidualSeries:
    """Residual series for ``w = L^NL u`` along stored snapshots.

    ``snapshots`` is a sequence of RealFields (or a Trajectory).  With
    ``coefficient=None`` the reference value for ``m`` is used.
    """
    snaps = list(getattr(snapshots, "snapshots", snapshots))
    if len(snaps) < 3:
        raise ValidationError("lnl_residual needs at least 3 snapshots")
    if snaps[0].time <= 0:
        snaps = snaps[1:]
        if len(snaps) < 3:
            raise ValidationError("lnl_residual needs 3 snapshots with t > 0")
    c = SOURCE_COEFFICIENT[m] if coefficient is None else coefficient
    ts = np.array([s.time for s in snaps])
    ws = [apply_LNL(s, OperatorParams(s.time, m, sign)) for s in snaps]
    times, res, fits = [], [], []
    num = den = 0.0
    for i in range(1, len(snaps) - 1):
        u, w = snaps[i], ws[i]
        lhs = _dispersive_time_derivative(ws, ts, i) - sign * u.values ** m * derivative(w, 1).values
        basis = sign * u.values ** (m + 1)
        wn = np.linalg.norm(w.values)
        times.append(ts[i])
        res.append(np.linalg.norm(lhs - c * basis) / wn if wn > 0 else 0.0)
        bb = float(np.dot(basis, basis))
        fits.append(float(np.dot(lhs, basis) / bb) if bb > 0 else 0.0)
        num += float(np.dot(lhs, basis))
        den += bb
    return ResidualSeries(np.array(times), np.array(res), np.array(fits),
                          num / den if den > 0 else 0.0, c, m)


def coefficient_discrimination(snapshots, m: int, sign: int = 1,
                               candidates=None) -> dict[float, float]:
    """Median residual for each candidate source coefficient."""
    if candidates is None:
        ref = SOURCE_COEFFICIENT[m]
        candidates = (ref, -ref, 1.5, -1.5, 0.0)
    return {float(c): float(np.median(lnl_residual(snapshots, m, sign, c).residual))
            for c in dict.fromkeys(candidates)}


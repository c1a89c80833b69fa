"""Initial-data families normalized to a prescribed smallness."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..norms import besov_norm, sobolev_norm
from ..spectral import LP, Grid1D, RealField, lp_project
from .config import DataFamily, DataParams, RunConfig

ZERO_MEAN_LOBE = 4.0  # width of the compensating lobe relative to the datum


def smallness_norm(u: RealField) -> float:
    """``||u||_{B^{-1/2}_{2,inf}} + ||x u||_{H^{1/2}}``."""
    xu = u.with_values(u.grid.x * u.values)
    return besov_norm(u) + sobolev_norm(xu, 0.5)


def profile(grid: Grid1D, p: DataParams) -> np.ndarray:
    if p.width < 4 * grid.dx:
        raise ValidationError(
            f"width {p.width} is not resolved by the grid (dx = {grid.dx:.3g})")
    x = grid.x - p.center
    bump = np.exp(-(x / p.width) ** 2)
    if p.family is DataFamily.WAVE_PACKET:
        bump = np.cos(p.k0 * grid.x) * bump
    if p.zero_mean:
        lobe = np.exp(-(x / (ZERO_MEAN_LOBE * p.width)) ** 2)
        bump = bump - (bump.sum() / lobe.sum()) * lobe
    return bump


def make_initial_data(cfg: RunConfig | DataParams, grid: Grid1D | None = None) -> RealField:
    """Profile rescaled so that :func:`smallness_norm` equals ``epsilon``.

    Both norms are 1-homogeneous, so one division fixes the amplitude.
    """
    if isinstance(cfg, RunConfig):
        p, grid = cfg.data, cfg.grid
    else:
        p = cfg
        if grid is None:
            raise ValidationError("a grid is needed with bare DataParams")
    u = grid.field(profile(grid, p), time=0.0)
    if p.band_limit is not None:
        u = lp_project(u, p.band_limit, LP.LE)
        if p.zero_mean:
            u = u.with_values(u.values - u.values.mean())
    size = smallness_norm(u)
    if not size > 0:
        raise ValidationError("degenerate datum (zero smallness norm)")
    return u * (p.epsilon / size)


def dominant_frequency(u: RealField) -> float:
    """Frequency ``|xi|`` carrying the most spectral energy."""
    F = np.abs(np.fft.rfft(u.values))
    xi = 2 * np.pi * np.fft.rfftfreq(u.grid.n, d=u.grid.dx)
    return float(xi[int(np.argmax(F))])


def recommended_box(xi_eff: float, t_end: float) -> float:
    """Rule of thumb ``L >= 8 * 5 xi_eff^4 t_end`` (group velocity ``-5 xi^4``)."""
    return 8.0 * 5.0 * xi_eff ** 4 * t_end

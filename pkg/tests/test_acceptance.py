"""Acceptance suite: one recorded PASS/FAIL line per criterion (1-12).

Each test measures the quantities of its criterion, records a summary line
(printed in the terminal summary under "acceptance criteria") and asserts the
pass condition.  Tolerances are the fixed acceptance values; they are never
adjusted to a measurement.
"""

import numpy as np
import pytest

from dispersa.evolution import EvolutionConfig, LinearizedTrajectory, evolve, linearized_evolve
from dispersa.harness.config import DataParams, RunConfig
from dispersa.harness.data import make_initial_data
from dispersa.harness.report import build_report, parse_report
from dispersa.harness.runner import (
    compact_bump,
    free_decay_kernel,
    last_decade,
    run,
    sweep,
    variation,
)
from dispersa.kernel import (
    airy5,
    airy5_at_zero,
    airy5_ode_residual,
    airy5_oracle,
    uniform_table,
)
from dispersa.normal_form import (
    BilinearSpec,
    bilinear_apply,
    bilinear_bruteforce,
    symbol_identity,
    track_linearized_energy,
)
from dispersa.spectral import (
    LP,
    Grid1D,
    derivative,
    forward_transform,
    fractional_derivative,
    hilbert_transform,
    inverse_transform,
    linear_propagate,
    lp_project,
)
from dispersa.vector_fields import (
    SOURCE_COEFFICIENT,
    coefficient_discrimination,
    commutation_check,
    lnl_residual,
)

pytestmark = pytest.mark.acceptance

# Nonlinear-window data: epsilon-normalized, band-limited Gaussian on a wide box.
WINDOW_GRID = dict(grid_n=2 ** 13, grid_length=2048.0)
WINDOW_DATA = dict(width=1.0, band_limit=0.5)


def window_end(eps: float) -> float:
    """``0.1 eps^(-5/3)``, the end of the small-data window (m = 1)."""
    return 0.1 * eps ** (-5.0 / 3.0)


def window_config(eps: float, times, out: str = "unused") -> RunConfig:
    evo = EvolutionConfig(m=1, dt=0.01, t_end=times[-1], snapshot_times=tuple(times))
    return RunConfig(**WINDOW_GRID, evolution=evo,
                     data=DataParams(epsilon=eps, **WINDOW_DATA), output_dir=out)


# -- 1. spectral exactness ------------------------------------------------------

def test_criterion_01_spectral_exactness(criterion, rng):
    g = Grid1D(256, 2 * np.pi * 4)
    worst = 0.0
    for k in (3, 17, 60):
        xi = k * g.dxi
        f = g.field(np.cos(xi * g.x + 0.4))
        z = np.exp(1j * (xi * g.x + 0.4))
        checks = [(derivative(f, j).values, np.real((1j * xi) ** j * z), g.nyquist ** j)
                  for j in range(1, 6)]
        checks.append((fractional_derivative(f, 0.5).values, np.sqrt(xi) * f.values,
                       np.sqrt(g.nyquist)))
        checks.append((hilbert_transform(f).values, np.sin(xi * g.x + 0.4), 1.0))
        # errors relative to the multiplier's operator norm on the grid
        worst = max(worst, max(np.max(np.abs(a - b)) / s for a, b, s in checks))
    f = g.field(rng.standard_normal(g.n))
    round_trip = np.max(np.abs(inverse_transform(forward_transform(f)).values - f.values))
    total = lp_project(f, g.dxi, LP.LT).values.copy()
    N = g.dxi
    while N < 4 * g.nyquist:
        total += lp_project(f, N, LP.AT).values
        N *= 2
    pou = np.max(np.abs(total - f.values))
    criterion(1, worst < 1e-12 and round_trip < 1e-12 and pou < 1e-10,
              f"tone multipliers {worst:.1e} (<1e-12), round trip {round_trip:.1e} "
              f"(<1e-12), LP partition {pou:.1e} (<1e-10)")


# -- 2. kernel correctness --------------------------------------------------------

def test_criterion_02_kernel(criterion):
    a0 = airy5(0.0)
    zero_err = max(abs(a0 - airy5_at_zero()), abs(airy5_oracle(0.0) - airy5_at_zero()))
    probes = np.random.default_rng(5).uniform(-200.0, 30.0, 100)
    agree = float(np.max(np.abs(airy5(probes) - airy5_oracle(probes))))
    ode = airy5_ode_residual(uniform_table(50.0, 0.05))
    res = [airy5_ode_residual(uniform_table(20.0, dx)) for dx in (0.1, 0.05, 0.025)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    ok = (zero_err < 1e-8 and agree < 1e-7 and ode < 1e-3
          and np.all((orders > 3.5) & (orders < 4.5)))
    criterion(2, ok,
              f"A(0)={a0:.10f} err {zero_err:.1e} (<1e-8); contour vs oracle {agree:.1e} "
              f"on 100 probes (<1e-7); ODE residual {ode:.1e} at dx=0.05 (<1e-3); "
              f"observed orders {np.round(orders, 2).tolist()} (~4)")


# -- 3. free decay t^(-1/5) --------------------------------------------------------

def test_criterion_03_free_decay(criterion):
    g = Grid1D(1024, 64.0)
    ratios = free_decay_kernel(compact_bump(g), np.geomspace(1e3, 1e4, 6))
    v = variation(ratios)
    criterion(3, v < 0.2,
              f"t^(1/5)|u|_inf / |u0|_L1 in [{ratios.min():.4f}, {ratios.max():.4f}] over "
              f"t in [1e3, 1e4], variation {v:.2%} (<20%)")


# -- 4. linear decay-constant shape --------------------------------------------------

def test_criterion_04_linear_shape(criterion):
    g = Grid1D(2 ** 19, 2.0 ** 16)
    u0 = make_initial_data(DataParams(epsilon=1.0, width=1.0, band_limit=0.5), g)
    ts = np.geomspace(1.0, 1e3, 10)
    rep = build_report([linear_propagate(u0, t) for t in ts], nonlinear=False)
    var_c, var_e, worst_max = [], [], 0.0
    for k in range(4):
        c = rep.column("C_k", k)
        e = rep.column("C_k_elliptic", k)
        var_c.append(variation(last_decade(ts, c)))
        var_e.append(variation(last_decade(ts, e)))
        worst_max = max(worst_max, np.nanmax(c), np.nanmax(e))
    M = rep.rho_L_matrix()
    populated = int(np.sum(np.all(np.isfinite(M), axis=0)))
    sup_series = [np.nanmax(M, axis=1)]
    for k in range(4):
        sup_series.append(np.array([max(r.rho_k for r in rep.rho_k if r.k == k and r.t == t)
                                    for t in ts]))
    # uniform bound: finite, and no growth of the sup over R from t <= 10 to the last decade
    early = ts <= 10.0
    growth = max(float(np.max(last_decade(ts, s)) / np.max(s[early])) for s in sup_series)
    ok = (not rep.flagged and np.isfinite(worst_max) and max(var_c) < 0.25
          and max(var_e) < 0.25 and populated >= 5
          and all(np.all(np.isfinite(s)) for s in sup_series) and growth <= 1.0)
    criterion(4, ok,
              f"last-decade variation C_k {max(var_c):.1%}, elliptic {max(var_e):.1%} (<25%); "
              f"{populated} dyadic bands (>=5); sup_R rho last-decade/early {growth:.2f} (<=1)")


# -- 5. commutation of L with the free flow ---------------------------------------------

def test_criterion_05_commutation(criterion):
    g = Grid1D(2048, 400.0)
    errs = [commutation_check(g.field(np.exp(-((g.x - c) / 8.0) ** 2)), t)
            for c in (-16.0, -8.0, 0.0, 8.0, 16.0) for t in (0.5, 1.0, 2.0, 5.0, 10.0)]
    worst = max(errs)
    criterion(5, worst < 1e-8, f"max relative error {worst:.1e} over 25 probes (<1e-8)")


# -- 6. conservation ---------------------------------------------------------------

_CONSERVATION: dict = {}   # m -> (passed, detail); criterion 6 is recorded once both ran


@pytest.mark.slow
@pytest.mark.parametrize("m", [1, 2])
def test_criterion_06_conservation(criterion, m):
    g = Grid1D(2 ** 13, 400.0)
    u0 = make_initial_data(DataParams(epsilon=0.05, width=1.0), g)
    cfg = EvolutionConfig(m=m, dt=8e-4, t_end=50.0, snapshot_times=(0.0, 10.0, 25.0, 50.0))
    diags = evolve(u0, cfg).diagnostics
    d0 = diags[0]
    mass = max(abs(d.mass - d0.mass) for d in diags)
    l2 = max(abs(d.l2 - d0.l2) for d in diags) / d0.l2
    ham = max(abs(d.hamiltonian - d0.hamiltonian) for d in diags) / abs(d0.hamiltonian)
    ok = mass < 1e-10 and l2 < 1e-8 and ham < 1e-6
    line = (f"m={m}: mass {mass:.1e} (<1e-10), L2 {l2:.1e} (<1e-8), "
            f"Hamiltonian {ham:.1e} (<1e-6) to t=50")
    _CONSERVATION[m] = (ok, line)
    if len(_CONSERVATION) == 2:
        criterion(6, all(v[0] for v in _CONSERVATION.values()),
                  "; ".join(v[1] for _, v in sorted(_CONSERVATION.items())))
    else:
        assert ok, line



# -- 7. symbol identity --------------------------------------------------------------

def test_criterion_07_symbol_identity(criterion, rng):
    xi, eta = rng.uniform(-100.0, 100.0, (2, 10 ** 6))
    lhs, rhs = symbol_identity(xi, eta)
    dev = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    criterion(7, dev < 1e-10, f"max relative deviation {dev:.1e} over 1e6 pairs (<1e-10)")


# -- 8. bilinear oracle --------------------------------------------------------------

def test_criterion_08_bilinear_oracle(criterion, rng):
    worst = 0.0
    for n, L, cut in ((32, 10.0, 0.0), (64, 30.0, 1.0), (128, 50.0, 0.0)):
        g = Grid1D(n, L)
        f = g.field(rng.standard_normal(n))
        h = g.field(rng.standard_normal(n))
        spec = BilinearSpec(hi_cutoff=cut)
        ref = bilinear_bruteforce(f, h, spec)
        out = bilinear_apply(f, h, spec).values
        worst = max(worst, float(np.max(np.abs(out - ref)) / max(1.0, np.max(np.abs(ref)))))
    criterion(8, worst < 1e-12, f"max deviation {worst:.1e} on n = 32, 64, 128 (<1e-12)")


# -- 9. corrected energy along the linearized flow ----------------------------------------

@pytest.mark.slow
def test_criterion_09_corrected_energy(criterion):
    eps = 0.05
    T = window_end(eps)
    times = tuple(np.round(np.arange(0.0, T, 0.1), 10)) + (T,)
    cfg = window_config(eps, times)
    u0 = make_initial_data(cfg)
    bg = evolve(u0, cfg.evolution)
    z0 = u0.with_values(u0.grid.x * u0.values)
    lin = linearized_evolve(z0, bg)
    hs = np.array([np.linalg.norm(fractional_derivative(z, 0.5).values) for z in lin.snapshots])
    hs_ratio = hs / hs[0]
    sub = [z for z in lin.snapshots[::10] if z.time >= 1.0]
    series = track_linearized_energy(LinearizedTrajectory(bg, sub), K_c=1.0, max_modes=2048)
    r = series.ratio
    dc, dp = series.relative_drift(True), series.relative_drift(False)
    ok = (np.all((r >= 0.8) & (r <= 1.2)) and np.all((hs_ratio >= 0.8) & (hs_ratio <= 1.25))
          and dc <= dp)
    criterion(9, ok,
              f"E/(|y|^2/2) - 1 in [{r.min() - 1:.1e}, {r.max() - 1:.1e}] (ratio in [0.8, 1.2]); "
              f"H^1/2 ratio in [{hs_ratio.min():.4f}, {hs_ratio.max():.4f}] (in [0.8, 1.25]); "
              f"drift corrected {dc:.4e} <= plain {dp:.4e} over t in [1, {T:.2f}]")


# -- 10 and 11. nonlinear window -----------------------------------------------------

@pytest.fixture(scope="module")
def window_reports():
    out = {}
    for eps in (0.1, 0.05):
        T = window_end(eps)
        times = (0.0,) + tuple(np.geomspace(1.0, T, 12))
        _, rep = run(window_config(eps, times), persist=False)
        out[eps] = rep
    return out


def _stable(a: float, b: float) -> float:
    return max(a / b, b / a)


def test_criterion_10_nonlinear_norms(criterion, window_reports):
    besov = {e: float(np.max(r.column("besov"))) / e for e, r in window_reports.items()}
    lnl = {e: float(np.max(r.column("lnl_sobolev"))) / e for e, r in window_reports.items()}
    sb, sl = _stable(*besov.values()), _stable(*lnl.values())
    flagged = any(r.flagged for r in window_reports.values())
    ok = (not flagged and max(besov.values()) <= 3 and max(lnl.values()) <= 5
          and sb < 2 and sl < 2)
    criterion(10, ok,
              f"besov/eps max {max(besov.values()):.3f} (<=3), |D|^1/2 L^NL u/eps max "
              f"{max(lnl.values()):.3f} (<=5); eps-halving factors {sb:.3f}, {sl:.3f} (<2); "
              f"tail exclusions: {'yes' if flagged else 'none'}")


@pytest.fixture(scope="module")
def strong_runs():
    """Dense snapshots of an amplitude-0.3 Gaussian for the L^NL residual."""
    g = Grid1D(1024, 400.0)
    times = tuple(np.round(1.0 + 0.02 * np.arange(51), 10))
    runs = {}
    for m in (1, 2):
        cfg = EvolutionConfig(m=m, dt=2e-3, t_end=times[-1], snapshot_times=(0.0,) + times)
        runs[m] = evolve(g.field(0.3 * np.exp(-(g.x / 6.0) ** 2)), cfg)
    return runs


def test_criterion_11_pointwise_bounds(criterion, window_reports, strong_runs):
    per_eps = {e: max(float(np.max(r.column("C_k", k))) for k in range(4)) / e
               for e, r in window_reports.items()}
    bound = max(per_eps.values())
    stab = _stable(*per_eps.values())
    res = {m: float(np.max(lnl_residual(strong_runs[m], m).residual)) for m in (1, 2)}
    fit = lnl_residual(strong_runs[2], 2).fitted_global
    disc = coefficient_discrimination(strong_runs[2], 2)
    best = disc[SOURCE_COEFFICIENT[2]]
    factor = min(v for c, v in disc.items() if c != SOURCE_COEFFICIENT[2]) / best
    ok = (np.isfinite(bound) and stab < 2 and max(res.values()) < 1e-3
          and abs(fit - 2 / 3) < 1e-3 and factor >= 10)
    criterion(11, ok,
              f"C_k/eps <= {bound:.3f} for k=0..3, eps-halving factor {stab:.3f} (<2); "
              f"residual m=1 {res[1]:.1e}, m=2 {res[2]:.1e} (<1e-3); fitted coefficient "
              f"{fit:.6f} (2/3); discrimination x{factor:.0f} (>=10)")


# -- 12. breakdown-time sweep (soft) ---------------------------------------------------

MARKER = "scaling not observable at desk scale"


@pytest.mark.slow
def test_criterion_12_sweep(criterion, tmp_path, monkeypatch):
    monkeypatch.setenv("DISPERSA_THREADS", "1")
    times = (0.0,) + tuple(np.geomspace(1.0, 40.0, 30))
    base = window_config(0.1, times, str(tmp_path))
    res = sweep(base, [0.4, 0.2, 0.1])
    c0 = {e: float(np.nanmax(parse_report(tmp_path / f"eps_{e:g}").column("C_k", 0))) / e
          for e in res.epsilons}
    bounded = all(np.isfinite(v) for v in c0.values())
    statuses = ", ".join(f"eps={e:g}: {s}" for e, s in zip(res.epsilons, res.statuses))
    if res.usable >= 2:
        lo, hi = -5 / 3 - 0.5, -5 / 3 + 0.5
        ok = lo <= res.fitted_exponent <= hi
        detail = f"{res.summary()} (band [{lo:.3f}, {hi:.3f}])"
    else:
        summary = res.summary()
        ok = bounded and MARKER in summary
        detail = (f"breakdown detected for {res.usable} of 3; {summary}; "
                  f"max C_0/eps {max(c0.values()):.3f}")
    criterion(12, ok, f"{detail}; runs: {statuses}")

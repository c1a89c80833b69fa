import numpy as np
import pytest

from dispersa.errors import BlowUpError, TailOverflowError, ValidationError
from dispersa.evolution import (
    EvolutionConfig,
    Trajectory,
    diagnostics,
    evolve,
    hamiltonian,
    linearized_evolve,
    nonlinearity,
    stability_number,
    step,
    with_times,
)
from dispersa.spectral import Grid1D, derivative, linear_propagate

from conftest import gaussian

GRID = Grid1D(512, 100.0)


def _bump(amp=0.3, width=3.0):
    return gaussian(GRID, width=width, amp=amp)


class TestConfig:
    def test_defaults(self):
        cfg = EvolutionConfig(m=2, t_end=2.0)
        assert cfg.snapshot_times == (0.0, 2.0)
        assert cfg.dealias_fraction == pytest.approx(0.5)
        assert EvolutionConfig().dealias_fraction == pytest.approx(2 / 3)

    @pytest.mark.parametrize("kw", [
        {"m": 3}, {"sign": 0}, {"dt": 0.0}, {"t_end": 0.0},
        {"snapshot_times": (0.5, 0.2)}, {"snapshot_times": (0.0, 5.0)},
        {"integrator": "Euler"}, {"tail_threshold": -1.0}, {"dealias_fraction": 1.5},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            EvolutionConfig(**kw)

    def test_with_times(self):
        cfg = with_times(EvolutionConfig(), [1.0, 2.0, 3.0], m=2)
        assert (cfg.t_start, cfg.t_end, cfg.m) == (1.0, 3.0, 2)


class TestNonlinearity:
    def test_burgers_term(self):
        u = _bump()
        expected = u.values * derivative(u, 1).values
        assert np.max(np.abs(nonlinearity(u, 1, 1).values - expected)) < 1e-10

    def test_cubic_term_sign(self):
        u = _bump()
        expected = -u.values ** 2 * derivative(u, 1).values
        assert np.max(np.abs(nonlinearity(u, 2, -1).values - expected)) < 1e-10

    def test_hamiltonian_of_gaussian(self):
        # int (u'')^2/2 for exp(-x^2) equals (3/2) sqrt(pi/2)
        u = gaussian(GRID)
        lin = 1.5 * np.sqrt(np.pi / 2)
        cubic = np.sqrt(np.pi / 3) / 6
        assert hamiltonian(u, 1, 1) == pytest.approx(lin + cubic, rel=1e-10)


class TestEvolve:
    def test_linear_limit_is_exact_flow(self):
        cfg = EvolutionConfig(dt=0.05, t_end=1.0, nonlinear_scale=0.0)
        traj = evolve(_bump(), cfg)
        exact = linear_propagate(_bump(), 1.0)
        assert np.max(np.abs(traj.snapshots[-1].values - exact.values)) < 1e-12

    def test_snapshot_times_hit_exactly(self):
        cfg = EvolutionConfig(dt=0.03, t_end=0.5, snapshot_times=(0.0, 0.1, 0.37, 0.5))
        traj = evolve(_bump(), cfg)
        assert np.array_equal(traj.times, [0.0, 0.1, 0.37, 0.5])
        assert len(traj.diagnostics) == 4

    @pytest.mark.parametrize("m", [1, 2])
    def test_conservation_short(self, m):
        cfg = EvolutionConfig(m=m, dt=2e-3, t_end=1.0)
        traj = evolve(_bump(), cfg)
        d0, d1 = traj.diagnostics
        assert abs(d1.mass - d0.mass) < 1e-12
        assert abs(d1.l2 - d0.l2) / d0.l2 < 1e-9
        assert abs(d1.hamiltonian - d0.hamiltonian) / abs(d0.hamiltonian) < 1e-7

    def test_time_reversal(self):
        cfg = EvolutionConfig(dt=5e-3, t_end=0.5)
        u0 = _bump()
        u = evolve(u0, cfg).snapshots[-1]
        for _ in range(100):
            u = step(u, cfg, dt=-5e-3)
        assert u.time == pytest.approx(0.0, abs=1e-12)
        assert np.max(np.abs(u.values - u0.values)) < 1e-9

    def test_stability_guard(self):
        cfg = EvolutionConfig(dt=0.5, t_end=1.0)
        assert stability_number(_bump(amp=5.0), cfg) > cfg.stability_limit
        with pytest.raises(ValidationError):
            evolve(_bump(amp=5.0), cfg)

    def test_tail_overflow_aborts_with_partial(self):
        cfg = EvolutionConfig(dt=0.01, t_end=2.0, snapshot_times=(0.0, 1.0, 2.0),
                              tail_threshold=1e-12)
        u0 = gaussian(GRID, width=3.0, center=30.0, amp=0.1)
        with pytest.raises(TailOverflowError) as info:
            evolve(u0, cfg)
        exc = info.value
        assert exc.partial.aborted == "tail_overflow"
        assert len(exc.partial.snapshots) == 1

    def test_blow_up_detected(self):
        cfg = EvolutionConfig(dt=0.4, t_end=200.0, stability_limit=1e9)
        with pytest.raises(BlowUpError) as info:
            evolve(_bump(amp=40.0, width=1.0), cfg)
        assert info.value.last_state is not None


class TestInterpolation:
    def test_interaction_picture_exact_for_linear_flow(self):
        cfg = EvolutionConfig(dt=0.05, t_end=1.0, snapshot_times=(0.0, 0.5, 1.0),
                              nonlinear_scale=0.0)
        traj = evolve(_bump(), cfg)
        exact = linear_propagate(_bump(), 0.73)
        assert np.max(np.abs(traj.at(0.73) - exact.values)) < 1e-12

    def test_out_of_range(self):
        traj = evolve(_bump(), EvolutionConfig(dt=0.05, t_end=0.5, nonlinear_scale=0.0))
        with pytest.raises(ValidationError):
            traj.at(0.6)


class TestLinearized:
    def _background(self, m=1, amp=0.3):
        times = tuple(np.round(np.arange(0, 1.0001, 0.02), 10))
        cfg = EvolutionConfig(m=m, dt=5e-3, t_end=1.0, snapshot_times=times)
        return cfg, evolve(_bump(amp), cfg)

    def test_linearity(self):
        _, bg = self._background()
        z1 = gaussian(GRID, width=2.0, center=-5.0)
        z2 = gaussian(GRID, width=4.0, center=3.0)
        a = linearized_evolve(z1 + 2.0 * z2, bg).snapshots[-1]
        b = linearized_evolve(z1, bg).snapshots[-1]
        c = linearized_evolve(z2, bg).snapshots[-1]
        assert np.max(np.abs(a.values - b.values - 2.0 * c.values)) < 1e-12

    @pytest.mark.parametrize("m", [1, 2])
    def test_difference_quotient(self, m):
        # d/dx z(t) must match (u[u0 + h z0_x] - u[u0]) / h to O(h)
        cfg, bg = self._background(m)
        z0 = gaussian(GRID, width=2.0, center=4.0)
        zx = linearized_evolve(z0, bg).snapshots[-1]
        zx = derivative(zx, 1).values
        errs = []
        for h in (1e-3, 5e-4):
            pert = evolve(bg.snapshots[0] + h * derivative(z0, 1), cfg).snapshots[-1]
            dq = (pert.values - bg.snapshots[-1].values) / h
            errs.append(np.max(np.abs(dq - zx)) / np.max(np.abs(zx)))
        assert errs[1] < 1e-3
        assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.2)

    def test_gap_enforced(self):
        cfg = EvolutionConfig(dt=1e-3, t_end=1.0)
        bg = evolve(_bump(), cfg)
        with pytest.raises(ValidationError):
            linearized_evolve(_bump(), bg)

    def test_diagnostics_fields(self):
        d = diagnostics(_bump(), 1, 1)
        assert d.time == 0.0 and d.tail_mass < 1e-20 and d.l2 > 0

"""Decay functional, structural-condition fitting, and pattern metrics."""

import numpy as np
import pytest

from phtaxis.analysis import (
    LyapunovParams,
    a_of_s,
    check_assg,
    convergence_metrics,
    detect_blowup,
    lyapunov,
    lyapunov_params,
    pattern_metrics,
)
from phtaxis.core import Domain1D, GrowthSpec, ModelParams, SourceSpec, State, build_grid
from phtaxis.kernels import KernelSpec
from phtaxis.solver import Event, Trajectory

from conftest import make_params


def lp_of(h_star=1.0, C_eqh=1.0):
    return LyapunovParams(
        h_star=h_star,
        C_H=1.0,
        C_U=0.0,
        U=1.1,
        C_B=0.5,
        C_A=-2.0,
        epsilon=0.7,
        C_eqh=C_eqh,
        applicable=True,
    )


class TestEntropyDensity:
    def test_minimum_at_one(self):
        for beta in (1.0, 2.0, 20.0):
            assert a_of_s(1.0, beta) == 0.0

    def test_reference_values(self):
        assert a_of_s(np.e, 1.0) == pytest.approx(np.e - 2.0, rel=1e-12)
        assert a_of_s(0.5, 2.0) == pytest.approx((0.5 - np.log(0.5) - 1.0) / 2.0, rel=1e-12)
        assert a_of_s(0.5, 2.0) == pytest.approx(0.09657359, abs=1e-8)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            a_of_s(0.0, 1.0)
        with pytest.raises(ValueError):
            a_of_s(-1.0, 2.0)

    def test_nonnegative_with_unique_zero(self, rng):
        s = rng.uniform(1e-6, 10.0, size=500)
        vals = a_of_s(s, 3.0)
        assert np.all(vals >= 0.0)
        assert np.all(vals[np.abs(s - 1.0) > 1e-3] > 0.0)

    def test_convexity_midpoint(self, rng):
        for _ in range(200):
            s1, s2 = rng.uniform(0.01, 20.0, size=2)
            lam = rng.uniform(0, 1)
            mid = a_of_s(lam * s1 + (1 - lam) * s2, 2.0)
            chord = lam * a_of_s(s1, 2.0) + (1 - lam) * a_of_s(s2, 2.0)
            assert mid <= chord + 1e-12


class TestLyapunov:
    def test_global_minimum_is_zero(self, grid_small):
        state = State(u=np.ones(64), h=np.ones(64), t=0.0)
        assert lyapunov(state, lp_of(h_star=1.0), beta=1.0, grid=grid_small) == pytest.approx(
            0.0, abs=1e-14
        )

    def test_constant_offset_value(self, grid_small):
        # u = 1, h = h* + 1, C_eqh = 2: integrand is 1, value is |domain| = 2a
        state = State(u=np.ones(64), h=np.full(64, 2.0), t=0.0)
        val = lyapunov(state, lp_of(h_star=1.0, C_eqh=2.0), beta=1.0, grid=grid_small)
        assert val == pytest.approx(10.0, rel=1e-12)

    def test_nonnegative(self, grid_small, rng):
        for _ in range(20):
            state = State(
                u=rng.uniform(0.01, 3.0, size=64), h=rng.uniform(0, 1, size=64), t=0.0
            )
            assert lyapunov(state, lp_of(), beta=2.0, grid=grid_small) >= 0.0

    def test_floor_clamp_counted(self, grid_small):
        lp = lp_of()
        u = np.ones(64)
        u[:3] = 0.0
        state = State(u=u, h=np.ones(64), t=0.0)
        with pytest.warns(UserWarning, match="clamped"):
            val = lyapunov(state, lp, beta=1.0, grid=grid_small)
        assert lp.clamp_count == 3
        assert np.isfinite(val)

    def test_large_beta_no_underflow(self, grid_small):
        # a(u^beta) via beta*ln(u): finite even when u^beta underflows
        lp = lp_of()
        state = State(u=np.full(64, 1e-20), h=np.ones(64), t=0.0)
        val = lyapunov(state, lp, beta=40.0, grid=grid_small)
        assert np.isfinite(val) and val > 0.0


class TestCheckAssg:
    def test_pure_relaxation_holds(self):
        src = SourceSpec(form="tabulated", func=lambda u, h: -(h - 0.3))
        fit = check_assg(src, h_star=0.3, H=1.0, U=2.0, alpha=2.0, beta=1.0)
        assert fit.holds
        assert fit.C_U == 0.0
        assert fit.C_H == pytest.approx(1.0, rel=1e-6)

    def test_antirelaxation_fails(self):
        src = SourceSpec(form="tabulated", func=lambda u, h: +(h - 0.3))
        fit = check_assg(src, h_star=0.3, H=1.0, U=2.0, alpha=2.0, beta=1.0)
        assert not fit.holds

    def test_logistic_acid_fit_verified_on_denser_grid(self):
        src = SourceSpec(form="logistic_acid")
        U, H, alpha, beta = 1.5, 1.0, 2.0, 1.0
        fit = check_assg(src, h_star=1.0, H=H, U=U, alpha=alpha, beta=beta, n_u=200, n_h=201)
        assert fit.holds and fit.C_H >= 1e-6 and fit.C_U >= 0.0
        # oracle: dense re-evaluation on a finer grid with the same u floor
        us = np.linspace(U / 200, U, 799)
        hs = np.linspace(0.0, H, 801)
        uu, hh = np.meshgrid(us, hs, indexing="ij")
        from phtaxis.core import eval_g

        lhs = np.asarray(eval_g(src, uu, hh)) * (hh - 1.0)
        rhs = -fit.C_H * (hh - 1.0) ** 2 + fit.C_U * uu ** (alpha - 1) * (uu**beta - 1) ** 2
        assert np.all(lhs <= rhs + 1e-10)


class TestLyapunovParams:
    def small_parameter_model(self):
        growth = GrowthSpec(form="constant", mu0=0.01)
        source = SourceSpec(form="tabulated", func=lambda u, h: -(h - 0.3))
        kernel = KernelSpec("uniform", rho=1.0)
        return ModelParams(
            alpha=1.0, beta=1.0, d=5.0, D_H=1.0, growth=growth, source=source, kernel=kernel
        )

    def test_applicable_in_small_parameter_regime(self):
        params = self.small_parameter_model()
        grid = build_grid(Domain1D(0.5), 32)
        lp = lyapunov_params(params, grid, U=1.05)
        assert lp.applicable, lp.reasons
        assert 0.0 < lp.C_B < 1.0
        assert lp.C_A < 0.0
        assert lp.C_B < lp.epsilon < 1.0
        assert lp.C_eqh > 0.0
        assert lp.h_star == pytest.approx(0.3, abs=1e-10)

    def test_not_applicable_reports_reasons(self, grid400):
        params = make_params()  # the standard invasion configuration
        lp = lyapunov_params(params, grid400, U=1.1)
        assert not lp.applicable
        assert any("C_B" in r for r in lp.reasons)
        assert lp.C_eqh == 1.0  # fallback weight keeps the functional evaluable


class TestMetrics:
    def test_convergence_metrics_values(self, grid_small):
        state = State(u=np.ones(64), h=np.ones(64), t=0.0)
        assert convergence_metrics(state, 1.0, 1.0) == (0.0, 0.0)
        state2 = State(u=np.full(64, 1.1), h=np.ones(64), t=0.0)
        du, dh = convergence_metrics(state2, 1.0, 1.0)
        assert du == pytest.approx(0.1) and dh == 0.0

    def test_pattern_metrics_constant_field(self, grid_small):
        rep = pattern_metrics(np.full(64, 0.7), grid_small)
        assert rep.spatial_variance == pytest.approx(0.0, abs=1e-30)
        assert rep.dominant_wavenumber is None
        assert rep.front_position == grid_small.x[-1]

    def test_pattern_metrics_single_mode(self, grid400):
        a = grid400.half_length
        u = 1.0 + 0.5 * np.cos(3 * np.pi * grid400.x / a)
        rep = pattern_metrics(u, grid400)
        assert rep.dominant_wavenumber == 3
        assert rep.spatial_variance == pytest.approx(0.125, rel=1e-3)

    def test_pattern_metrics_mode_exact_below_aliasing(self, grid_small, rng):
        a = grid_small.half_length
        for z in (1, 2, 7, 15, 31):  # up to n/2 - 1 for n = 64
            u = 2.0 + 0.3 * np.cos(z * np.pi * grid_small.x / a)
            assert pattern_metrics(u, grid_small).dominant_wavenumber == z

    def test_front_position(self, grid_small):
        u = np.where(grid_small.x < 1.0, 1.0, 0.2)
        rep = pattern_metrics(u, grid_small)
        assert rep.front_position == pytest.approx(grid_small.x[grid_small.x < 1.0][-1])
        assert pattern_metrics(np.full(64, 0.1), grid_small).front_position is None


class TestDetectBlowup:
    def _traj(self, states, events=()):
        t = Trajectory()
        t.snapshots = states
        t.events = list(events)
        return t

    def test_constant_trajectory_none(self, grid_small):
        states = [State(u=np.ones(64), h=np.ones(64), t=float(k)) for k in range(3)]
        assert detect_blowup(self._traj(states)) is None

    def test_threshold_crossing_time(self, grid_small):
        s0 = State(u=np.ones(64), h=np.ones(64), t=0.0)
        s1 = State(u=np.full(64, 2e3), h=np.ones(64), t=1.5)
        assert detect_blowup(self._traj([s0, s1])) == 1.5

    def test_solver_event_fallback(self, grid_small):
        s0 = State(u=np.ones(64), h=np.ones(64), t=0.0)
        ev = Event("blow_up", 0.75, "dt collapsed")
        assert detect_blowup(self._traj([s0], [ev])) == 0.75

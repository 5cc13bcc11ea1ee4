"""Grid construction, coefficient functions, and their validation."""

import numpy as np
import pytest

from phtaxis.core import (
    ConfigurationError,
    Domain1D,
    Grid1D,
    GrowthSpec,
    InitialCondition,
    ModelParams,
    SourceSpec,
    State,
    build_grid,
    eval_dh_g,
    eval_du_g,
    eval_g,
    eval_initial_h,
    eval_initial_u,
    eval_mu,
    sample_growth_bounds,
    validate_growth,
    validate_source,
)
from phtaxis.kernels import KernelSpec

from conftest import make_params


class TestGrid:
    def test_standard_grid(self):
        g = build_grid(Domain1D(20.0), 400)
        assert g.dx == pytest.approx(0.1, abs=0)
        assert g.x[0] == pytest.approx(-19.95, rel=1e-14)

    def test_smallest_grid(self):
        g = build_grid(Domain1D(1.0), 8)
        assert g.dx == pytest.approx(0.25)

    def test_too_few_cells(self):
        with pytest.raises(ConfigurationError):
            build_grid(Domain1D(20.0), 7)

    def test_nonpositive_half_length(self):
        with pytest.raises(ConfigurationError):
            Domain1D(0.0)

    @pytest.mark.parametrize("a,n", [(20.0, 400), (1.0, 8), (7.3, 123), (0.5, 64)])
    def test_cell_widths_tile_domain(self, a, n):
        g = build_grid(Domain1D(a), n)
        assert n * g.dx == pytest.approx(2 * a, rel=1e-12)
        assert np.all(np.diff(g.x) > 0)
        # cell centers: first/last half a cell inside the walls
        assert g.x[0] == pytest.approx(-a + g.dx / 2, rel=1e-12)
        assert g.x[-1] == pytest.approx(a - g.dx / 2, rel=1e-12)


class TestInitialCondition:
    def test_zero_at_right_edge(self):
        # grid with a node exactly on x_r
        g = build_grid(Domain1D(5.0), 10)  # nodes at +-4.5, +-3.5, ...
        ic = InitialCondition(x_l=-4.5, x_r=4.5)
        u0 = eval_initial_u(ic, g)
        assert u0[-1] == 0.0  # node at x = x_r: ramp hits zero
        assert np.all(u0 >= 0)

    def test_continuity_at_zero(self):
        # both one-sided branch values at x = 0 must agree
        x_l = -5.0
        left = np.exp(-((0.0 - x_l) ** 2))
        right = np.exp(-(x_l**2)) * (1.0 - 0.0 / 5.0)
        assert abs(left - right) < 1e-12

    def test_bump_value_near_left_edge(self):
        # a node just right of x_l evaluates the bump branch near its max
        dom = Domain1D(20.0)
        x = np.array([-5.0 + 1e-9, -1.0, 0.5, 6.0])
        g = Grid1D(domain=dom, n_cells=4, dx=0.1, x=x)
        u0 = eval_initial_u(InitialCondition(), g)
        assert u0[0] == pytest.approx(1.0, abs=1e-12)
        assert u0[3] == 0.0  # beyond x_r

    def test_branch_values_on_fine_grid(self, grid400):
        u0 = eval_initial_u(InitialCondition(), grid400)
        x = grid400.x
        left = (x > -5.0) & (x <= 0.0)
        np.testing.assert_allclose(u0[left], np.exp(-((x[left] + 5.0) ** 2)), rtol=0, atol=0)
        right = (x > 0.0) & (x <= 5.0)
        np.testing.assert_allclose(u0[right], np.exp(-25.0) * (1 - x[right] / 5.0))
        assert np.all(u0[x > 5.0] == 0.0)
        assert np.all(u0[x <= -5.0] == 0.0)

    def test_bad_interval_rejected(self, grid400):
        with pytest.raises(ConfigurationError):
            eval_initial_u(InitialCondition(x_l=0.5), grid400)
        with pytest.raises(ConfigurationError):
            eval_initial_u(InitialCondition(x_r=-1.0), grid400)
        with pytest.raises(ConfigurationError):
            eval_initial_u(InitialCondition(x_l=-30.0), grid400)

    def test_identically_zero_rejected(self, grid400):
        ic = InitialCondition(form="constant", u0_value=0.0)
        with pytest.raises(ConfigurationError):
            eval_initial_u(ic, grid400)

    def test_h0_bounds(self, grid400):
        ic = InitialCondition(h0_value=0.5)
        h0 = eval_initial_h(ic, grid400, H=1.0)
        assert np.all(h0 == 0.5)
        with pytest.raises(ConfigurationError):
            eval_initial_h(InitialCondition(h0_value=1.5), grid400, H=1.0)
        with pytest.raises(ConfigurationError):
            eval_initial_h(InitialCondition(h0_value=1.0), grid400, H=1.0)  # h0 == H


class TestGrowth:
    def test_rational_values(self):
        spec = GrowthSpec(form="rational", mu0=1.0)
        assert eval_mu(spec, 1.0) == pytest.approx(0.5)
        assert eval_mu(GrowthSpec(form="rational", mu0=100.0), 0.0) == pytest.approx(100.0)

    def test_constant(self):
        spec = GrowthSpec(form="constant", mu0=1.0)
        for h in (0.0, 0.3, 7.0):
            assert eval_mu(spec, h) == 1.0

    def test_negative_h_rejected(self):
        with pytest.raises(ValueError):
            eval_mu(GrowthSpec(), -0.1)

    def test_sampled_lower_bound(self):
        spec = GrowthSpec(form="rational", mu0=1.0, delta=0.5)
        bounds = validate_growth(spec, H=1.0)  # min on [0,1] is 0.5
        hs = np.linspace(0.0, 1.0, 1000)
        assert np.all(np.asarray(eval_mu(spec, hs)) >= spec.delta)
        assert bounds.lipschitz == pytest.approx(1.0, rel=1e-2)

    def test_declared_delta_violation(self):
        spec = GrowthSpec(form="rational", mu0=1.0, delta=0.6)
        with pytest.raises(ConfigurationError):
            validate_growth(spec, H=1.0)  # mu(1) = 0.5 < 0.6

    def test_zero_growth_allowed_but_not_positive(self):
        bounds = sample_growth_bounds(GrowthSpec(form="constant", mu0=0.0), H=1.0)
        assert bounds.mu_min == 0.0 and not bounds.positive


class TestSource:
    def test_logistic_acid_values(self):
        s = SourceSpec(form="logistic_acid")
        assert eval_g(s, 1.0, 1.0) == 0.0
        assert eval_g(s, 2.0, 0.5) == pytest.approx(1.0)

    def test_destabilizing_value(self):
        s = SourceSpec(form="destabilizing", gamma=0.5)
        assert eval_g(s, 1.0, 0.0) == pytest.approx(1.0)
        assert s.instability_permitted

    def test_negative_arguments_rejected(self):
        with pytest.raises(ValueError):
            eval_g(SourceSpec(), -1.0, 0.0)
        with pytest.raises(ValueError):
            eval_g(SourceSpec(), 1.0, -0.5)

    def test_derivatives_closed_forms(self):
        s = SourceSpec(form="logistic_acid")
        assert eval_du_g(s, 1.0, 0.3) == pytest.approx(0.7)
        assert eval_dh_g(s, 2.0, 0.3) == pytest.approx(-2.0)
        d = SourceSpec(form="destabilizing", gamma=0.8)
        assert eval_du_g(d, 1.0, 2.0) == pytest.approx(3.0)
        assert eval_dh_g(d, 1.0, 2.0) == pytest.approx(1.0 - 2 * 0.8 * 2.0)

    def test_tabulated_derivatives_match_finite_difference(self):
        s = SourceSpec(form="tabulated", func=lambda u, h: u * (1.0 - h))
        assert eval_du_g(s, 1.5, 0.25) == pytest.approx(0.75, rel=1e-5)
        assert eval_dh_g(s, 1.5, 0.25) == pytest.approx(-1.5, rel=1e-5)

    def test_compliant_sign_structure(self):
        assert validate_source(SourceSpec(form="logistic_acid", H=1.0))
        # sampling g(u, H) over u must be <= 0 and g(u, 0) within [0, G]
        us = np.linspace(0.0, 10.0, 1000)
        s = SourceSpec(form="logistic_acid", H=1.0)
        assert np.all(np.asarray(eval_g(s, us, np.full_like(us, 1.0))) <= 0.0)
        g0 = np.asarray(eval_g(s, us, np.zeros_like(us)))
        assert np.all((g0 >= 0.0) & (g0 <= g0.max()))

    def test_noncompliant_ceiling_is_config_error(self):
        with pytest.raises(ConfigurationError):
            validate_source(SourceSpec(form="logistic_acid", H=0.5))

    def test_destabilizing_exempt(self):
        # violates g(u, H) <= 0 yet passes with the instability flag
        assert validate_source(SourceSpec(form="destabilizing", gamma=0.8, H=1.0)) is False


class TestModelParams:
    def test_exponent_domain(self):
        with pytest.raises(ConfigurationError):
            make_params(alpha=0.5)
        with pytest.raises(ConfigurationError):
            make_params(beta=0.9)

    def test_wellposedness_condition(self):
        make_params(alpha=2.0, beta=1.0)  # the boundary value is accepted
        with pytest.raises(ConfigurationError, match="blow_up_study"):
            make_params(alpha=3.0, beta=1.0)
        make_params(alpha=8.15, beta=1.0, blow_up_study=True)

    def test_motility_positive(self):
        with pytest.raises(ConfigurationError):
            make_params(d=0.0)
        with pytest.raises(ConfigurationError):
            make_params(d=np.array([1.0, -0.5, 1.0]))

    def test_d_field_broadcast_and_bounds(self, grid_small):
        p = make_params(d=2.5)
        field = p.d_field(grid_small)
        assert field.shape == (grid_small.n_cells,)
        assert np.all(field == 2.5)
        assert p.d_bounds() == (2.5, 2.5)

        d_var = 1.0 + 0.1 * grid_small.x
        p2 = make_params(d=d_var)
        np.testing.assert_array_equal(p2.d_field(grid_small), d_var)
        with pytest.raises(ConfigurationError):
            p2.d_field(build_grid(Domain1D(5.0), 32))

    def test_state_shape_check(self):
        with pytest.raises(ValueError):
            State(u=np.zeros(4), h=np.zeros(5), t=0.0)

    def test_kernel_attached(self):
        p = make_params(kernel=KernelSpec("uniform", rho=2.0))
        assert p.kernel.family == "uniform"

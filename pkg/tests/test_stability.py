"""Equilibria, dispersion relations, and instability classification."""

import numpy as np
import pytest

from phtaxis.core import GrowthSpec, SourceSpec
from phtaxis.kernels import KernelSpec, fourier_factor
from phtaxis.stability import (
    DispersionPoint,
    Equilibrium,
    NoEquilibriumError,
    classify,
    dispersion_local,
    dispersion_nonlocal,
    equilibrium_from_model,
    find_h_star,
    local_eigenvalues,
    zero_state_stable,
)

from conftest import make_params


def eq_of(du_g=0.0, dh_g=-1.0, mu_star=0.5, h_star=1.0):
    return Equilibrium(
        u_star=1.0, h_star=h_star, du_g=du_g, dh_g=dh_g, mu_star=mu_star, dmu_star=0.0
    )


class TestEquilibrium:
    def test_logistic_acid_root(self):
        assert find_h_star(SourceSpec(form="logistic_acid")) == pytest.approx(1.0, abs=1e-12)

    def test_destabilizing_root_closed_form(self):
        # positive root of 0.5 h^2 - h - 1 = 0
        h = find_h_star(SourceSpec(form="destabilizing", gamma=0.5))
        assert h == pytest.approx(1.0 + np.sqrt(3.0), abs=1e-10)

    def test_no_equilibrium(self):
        always_positive = SourceSpec(form="tabulated", func=lambda u, h: np.ones_like(h))
        with pytest.raises(NoEquilibriumError):
            find_h_star(always_positive)

    def test_multiple_roots_warn(self):
        cubic = SourceSpec(
            form="tabulated", func=lambda u, h: -(h - 0.3) * (h - 0.6) * (h - 0.9)
        )
        with pytest.warns(UserWarning, match="not unique"):
            find_h_star(cubic)

    def test_equilibrium_from_model(self):
        params = make_params()  # rational growth, logistic-acid source
        eq = equilibrium_from_model(params)
        assert eq.u_star == 1.0
        assert eq.h_star == pytest.approx(1.0, abs=1e-12)
        assert eq.du_g == pytest.approx(0.0, abs=1e-12)  # 1 - h* = 0
        assert eq.dh_g == pytest.approx(-1.0, abs=1e-12)
        assert eq.mu_star == pytest.approx(0.5, abs=1e-12)
        assert eq.dmu_star == pytest.approx(-0.25, abs=1e-12)
        # the residual at the located equilibrium is tiny
        from phtaxis.core import eval_g

        assert abs(eval_g(params.source, 1.0, eq.h_star)) <= 1e-10


class TestLocalEigenvalues:
    def test_reference_values(self):
        lam1, lam2 = local_eigenvalues(eq_of(mu_star=0.5, dh_g=-1.0), beta=1.0)
        assert lam1 == -0.5 and lam2 == -1.0

    def test_stiff_values(self):
        # mu0 = 100 rational at h* = 1 gives mu* = 50
        lam1, lam2 = local_eigenvalues(eq_of(mu_star=50.0, dh_g=-1.0), beta=20.0)
        assert lam1 == -1000.0 and lam2 == -1.0

    def test_destabilizing_branch_sign(self):
        src = SourceSpec(form="destabilizing", gamma=0.5)
        h_star = find_h_star(src)
        from phtaxis.core import eval_dh_g

        dh = eval_dh_g(src, 1.0, h_star)
        assert dh == pytest.approx(-np.sqrt(3.0), abs=1e-9)  # stable despite the mechanism
        lam1, lam2 = local_eigenvalues(
            eq_of(mu_star=0.5, dh_g=dh, h_star=h_star), beta=1.0
        )
        assert lam2 < 0.0


class TestDispersionLocal:
    def test_reduces_to_nonspatial_at_k0(self):
        eq = eq_of(du_g=0.3, dh_g=-0.7, mu_star=2.0)
        p = dispersion_local(eq, d=1.3, D_H=0.8, beta=2.0, k=0.0)
        lam1, lam2 = local_eigenvalues(eq, beta=2.0)
        roots = sorted([p.lambda1.real, p.lambda2.real])
        assert roots == pytest.approx(sorted([lam1, lam2]), rel=1e-12)
        assert p.lambda1.imag == 0.0 and p.lambda2.imag == 0.0

    def test_reference_point(self):
        p = dispersion_local(eq_of(du_g=0.0, dh_g=-1.0, mu_star=0.5), 1.0, 1.0, 1.0, k=1.0)
        assert p.trace == pytest.approx(-3.5, abs=1e-12)
        assert p.determinant == pytest.approx(3.0, abs=1e-12)
        assert p.classification == "stable"

    def test_never_turing_under_sign_assumptions(self, rng):
        # du_g >= 0, dh_g < 0, mu* > 0: stable at every wavenumber
        for _ in range(50):
            eq = eq_of(
                du_g=rng.uniform(0, 5),
                dh_g=-rng.uniform(0.01, 5),
                mu_star=rng.uniform(0.01, 10),
            )
            d = rng.uniform(0.05, 10)
            D_H = rng.uniform(0.05, 10)
            beta = rng.uniform(1, 20)
            for k in rng.uniform(0, 30, size=20):
                p = dispersion_local(eq, d, D_H, beta, k)
                assert p.classification == "stable"
                assert p.trace < 0.0 and p.determinant > 0.0

    def test_eigenvalue_coefficient_consistency(self, rng):
        for _ in range(100):
            eq = eq_of(
                du_g=rng.uniform(-3, 5),
                dh_g=rng.uniform(-5, 2),
                mu_star=rng.uniform(0.01, 10),
            )
            p = dispersion_local(eq, rng.uniform(0.1, 5), rng.uniform(0.1, 5), 2.0, rng.uniform(0, 10))
            s = p.lambda1 + p.lambda2
            pr = p.lambda1 * p.lambda2
            assert abs(s - p.trace) <= 1e-10 * max(1.0, abs(p.trace))
            assert abs(pr - p.determinant) <= 1e-10 * max(1.0, abs(p.determinant))


class TestDispersionNonlocal:
    def test_dirac_reduces_to_local(self):
        eq = eq_of(du_g=0.4, dh_g=-1.2, mu_star=3.0)
        F = lambda k: fourier_factor(KernelSpec("dirac"), k)
        for k in np.linspace(0.0, 12.0, 25):
            pl = dispersion_local(eq, 0.7, 1.9, 4.0, k)
            pn = dispersion_nonlocal(eq, 0.7, 1.9, 4.0, k, F)
            assert pn.trace == pytest.approx(pl.trace, abs=1e-12)
            assert pn.determinant == pytest.approx(pl.determinant, abs=1e-12)

    def test_unit_mass_kernel_at_k0_matches_nonspatial(self):
        eq = eq_of()
        F = lambda k: fourier_factor(KernelSpec("gaussian", sigma=1.0), k)
        p = dispersion_nonlocal(eq, 1.0, 1.0, 1.0, 0.0, F)
        lam1, lam2 = local_eigenvalues(eq, 1.0)
        assert sorted([p.lambda1.real, p.lambda2.real]) == pytest.approx(
            sorted([lam1, lam2]), abs=1e-9
        )

    def test_turing_boundary_identity(self, rng):
        # det(k) = 0 exactly when F(k) sits on the critical curve
        for _ in range(100):
            d = rng.uniform(0.1, 5)
            D_H = rng.uniform(0.1, 5)
            beta = rng.uniform(1, 20)
            mu_star = rng.uniform(0.05, 10)
            du_g = rng.uniform(0, 4)
            dh_g = -rng.uniform(0.05, 4)
            k = rng.uniform(0.1, 10)
            eq = eq_of(du_g=du_g, dh_g=dh_g, mu_star=mu_star)
            f_crit = -d * k**2 / (beta * mu_star) * (1.0 + du_g / (D_H * k**2 - dh_g))
            p0 = dispersion_nonlocal(eq, d, D_H, beta, k, lambda _: f_crit)
            assert abs(p0.determinant) <= 1e-10 * (1 + abs(p0.trace) ** 2)
            below = dispersion_nonlocal(eq, d, D_H, beta, k, lambda _: f_crit - 1e-3)
            above = dispersion_nonlocal(eq, d, D_H, beta, k, lambda _: f_crit + 1e-3)
            assert below.determinant < 0.0 < above.determinant

    def test_negative_fourier_factor_opens_turing_band(self):
        # uniform kernel, strong competition: det < 0 where F(k) < 0
        eq = eq_of(du_g=0.0, dh_g=-1.0, mu_star=50.0)
        F = lambda k: fourier_factor(KernelSpec("uniform", rho=1.0), k)
        p = dispersion_nonlocal(eq, 1.0, 1.0, 20.0, 4.5, F)
        assert p.determinant < 0.0
        assert p.classification == "turing"
        assert p.lambda1.imag == 0.0 and p.lambda1.real > 0.0


class TestClassify:
    def test_dirac_stable_everywhere(self):
        report = classify(eq_of(), 1.0, 1.0, 1.0, KernelSpec("dirac"), 20.0, 100)
        assert report.verdict == "stable"
        assert report.critical_ks == []
        assert all(p.classification == "stable" for p in report.points)

    def test_single_turing_mode_with_eigensolve_oracle(self):
        # frozen configuration: exactly one unstable lattice mode on a = 2
        eq = eq_of(du_g=0.0, dh_g=-1.0, mu_star=50.0)
        d, D_H, beta, a = 1.0, 1.0, 3.0, 2.0
        kernel = KernelSpec("uniform", rho=1.0)
        report = classify(eq, d, D_H, beta, kernel, a, 40)
        unstable = report.unstable_modes
        assert report.verdict == "unstable"
        assert len(unstable) == 1
        assert unstable[0].classification == "turing"
        assert unstable[0].k == pytest.approx(3 * np.pi / 2, rel=1e-12)
        # oracle: eigenvalues of the per-mode 2x2 Jacobian
        for p in report.points:
            bmf = beta * eq.mu_star * fourier_factor(kernel, p.k)
            J = np.array(
                [
                    [-d * p.k**2 - bmf, -d * p.k**2],
                    [eq.du_g, -D_H * p.k**2 + eq.dh_g],
                ]
            )
            lams = np.linalg.eigvals(J)
            oracle_stable = np.max(lams.real) < 0.0
            assert (p.classification == "stable") == oracle_stable

    def test_verdict_invariant_under_mode_refinement(self):
        eq = eq_of(du_g=0.0, dh_g=-1.0, mu_star=50.0)
        kernel = KernelSpec("uniform", rho=1.0)
        r1 = classify(eq, 1.0, 1.0, 3.0, kernel, 2.0, 40)
        r2 = classify(eq, 1.0, 1.0, 3.0, kernel, 2.0, 120)
        assert r1.verdict == r2.verdict
        assert len(r1.unstable_modes) == len(r2.unstable_modes)

    def test_modes_sorted_and_lattice(self):
        report = classify(eq_of(), 1.0, 1.0, 1.0, KernelSpec("gaussian"), 10.0, 30)
        ks = [p.k for p in report.points]
        assert ks == sorted(ks)
        np.testing.assert_allclose(ks, np.pi * np.arange(31) / 10.0, rtol=1e-14)

    def test_critical_set_brackets_turing_band(self):
        eq = eq_of(du_g=0.0, dh_g=-1.0, mu_star=50.0)
        report = classify(eq, 1.0, 1.0, 20.0, KernelSpec("uniform", rho=1.0), 20.0, 100)
        det_crossings = [c.k for c in report.critical_ks if c.quantity == "det"]
        assert len(det_crossings) >= 2
        # crossing locations are genuine zeros of the smooth determinant
        F = lambda k: fourier_factor(KernelSpec("uniform", rho=1.0), k)
        for kc in det_crossings:
            val = dispersion_nonlocal(eq, 1.0, 1.0, 20.0, kc, F).determinant
            span = dispersion_nonlocal(eq, 1.0, 1.0, 20.0, kc + 0.05, F).determinant
            assert abs(val) < abs(span)

    def test_hopf_note_when_unsatisfiable(self):
        report = classify(eq_of(), 1.0, 1.0, 1.0, KernelSpec("gaussian"), 10.0, 10)
        assert any("unsatisfiable" in n for n in report.notes)

    def test_zero_state_predicate(self):
        assert zero_state_stable(SourceSpec(form="logistic_acid"), 1.0)
        rising = SourceSpec(form="tabulated", func=lambda u, h: h - 1.0)
        assert not zero_state_stable(rising, 2.0)

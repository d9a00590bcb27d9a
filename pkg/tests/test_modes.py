import math

import numpy as np
import pytest

from ruggeri import modes as md
from ruggeri.errors import ConfigError, DomainError, HyperbolicityError
from ruggeri.models import (
    KINDS,
    FluidParams,
    QuasilinearSystem,
    build_system,
    mu_squared_e4,
)

P = FluidParams(R=1.0, c=1.5, eta=10.0, eps=1.0, delta=1.0, chi=1.0)
V4_EQ = np.array([1.0, 0.0, 1.0, 0.0])


def random_params(rng):
    return FluidParams(
        R=rng.uniform(0.1, 5.0), c=rng.uniform(0.1, 5.0),
        eta=rng.uniform(0.1, 20.0), eps=rng.uniform(0.01, 10.0),
        delta=rng.uniform(0.05, 5.0), chi=rng.uniform(0.1, 20.0))


def random_state(kind, rng, equilibrium=False):
    rho = rng.uniform(0.1, 10.0)
    u = rng.uniform(-2.0, 2.0)
    theta = rng.uniform(0.1, 10.0)
    sigma = 0.0 if equilibrium else rng.uniform(-1.0, 1.0)
    q = 0.0 if equilibrium else rng.uniform(-1.0, 1.0)
    if kind == "e4":
        return np.array([rho, u, theta, sigma])
    if kind == "e5":
        return np.array([rho, u, theta, sigma, q])
    if kind == "e3":
        return np.array([rho, u, sigma])
    return np.array([1.0 / rho, u, theta, sigma, q])


class TestSpeedsE4:
    def test_desk_values(self):
        reps = md.speeds_e4(P, V4_EQ)
        lam = math.sqrt(8.0 / 3.0)
        np.testing.assert_allclose(
            [m.lam for m in reps], [-lam, 0.0, 0.0, lam], atol=1e-15)
        assert [m.label for m in reps] == ["fast-", "contact", "contact", "fast+"]
        assert reps[1].gnl == 0.0 and reps[2].gnl == 0.0

    def test_stress_free_reduction(self):
        # with sigma = 0 the general relative-speed formula loses its
        # stress corrections and only the R^2 theta / c term survives
        rng = np.random.default_rng(2)
        for _ in range(300):
            params = random_params(rng)
            rho, theta = rng.uniform(0.1, 10.0, size=2)
            base = (params.R * theta + theta / (params.eps * rho**2)
                    + params.R**2 * theta / params.c)
            assert mu_squared_e4(params, rho, theta, 0.0) == pytest.approx(
                base, rel=1e-14)

    def test_galilean_shift(self):
        boosted = md.speeds_e4(P, np.array([1.0, 0.7, 1.0, 0.0]))
        base = md.speeds_e4(P, V4_EQ)
        for b, a in zip(boosted, base):
            assert b.lam == pytest.approx(a.lam + 0.7, abs=1e-15)
            assert b.mu == pytest.approx(a.mu, abs=1e-15)

    def test_matches_generic_oracle(self):
        rng = np.random.default_rng(7)
        sysmk = build_system
        for _ in range(1000):
            params = random_params(rng)
            V = random_state("e4", rng)
            closed = sorted(m.lam for m in md.speeds_e4(params, V))
            generic = [m.lam for m in md.speeds_generic(sysmk("e4", params), V)]
            scale = max(1.0, max(abs(x) for x in closed))
            assert max(abs(a - b) for a, b in zip(closed, generic)) < 1e-9 * scale


class TestSpeedsE3:
    def test_desk_values(self):
        reps = md.speeds_e3(P, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(
            [m.lam for m in reps], [-math.sqrt(2.0), 0.0, math.sqrt(2.0)],
            atol=1e-15)

    def test_matches_generic_oracle(self):
        rng = np.random.default_rng(19)
        for _ in range(1000):
            params = random_params(rng)
            V = random_state("e3", rng)
            closed = sorted(m.lam for m in md.speeds_e3(params, V))
            generic = [m.lam for m in md.speeds_generic(build_system("e3", params), V)]
            scale = max(1.0, max(abs(x) for x in closed))
            assert max(abs(a - b) for a, b in zip(closed, generic)) < 1e-9 * scale


class TestSpeedsGeneric:
    def test_residuals_and_sorting(self):
        rng = np.random.default_rng(13)
        for kind in KINDS:
            for _ in range(250):
                params = random_params(rng)
                V = random_state(kind, rng)
                reps = md.speeds_generic(build_system(kind, params), V)
                lams = [m.lam for m in reps]
                assert lams == sorted(lams)
                assert all(m.residual <= md.RESIDUAL_TOL for m in reps)

    def test_sigma_normalization(self):
        reps = md.speeds_generic(build_system("e4", P), V4_EQ)
        for m in (reps[0], reps[-1]):
            assert m.r[3] == pytest.approx(1.0, abs=1e-12)

    def test_hyperbolicity_error_path(self):
        class Rotation(QuasilinearSystem):
            kind = "e3"
            fields = ("rho", "u", "sigma")
            nonconservative_rows = ()
            noncons_gradient_fields = ()

            def a0(self, V):
                return np.eye(3)

            def a1(self, V):
                return np.array([[0.0, -1.0, 0.0],
                                 [1.0, 0.0, 0.0],
                                 [0.0, 0.0, 1.0]])

            def validate_primitive(self, V):
                pass

        with pytest.raises(HyperbolicityError) as ei:
            md.speeds_generic(Rotation(P), np.array([1.0, 0.0, 0.0]))
        assert ei.value.spectrum is not None

    def test_track_eigenvalue_nearest(self):
        sys4 = build_system("e4", P)
        lam = math.sqrt(8.0 / 3.0)
        assert md.track_eigenvalue(sys4, V4_EQ, 1.5) == pytest.approx(lam)
        assert md.track_eigenvalue(sys4, V4_EQ, -9.0) == pytest.approx(-lam)


class TestEigvecE4:
    def test_desk_value(self):
        # mu = +sqrt(8/3) is the left-running branch
        rep = md.eigvec_e4_equilibrium(P, V4_EQ, "-")
        np.testing.assert_allclose(
            rep.r, [1.0, -math.sqrt(8.0 / 3.0), 2.0 / 3.0, 1.0], rtol=1e-12)
        assert rep.residual <= 1e-10

    def test_normalization_and_branch_flip(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            params = random_params(rng)
            V = random_state("e4", rng, equilibrium=True)
            plus = md.eigvec_e4_equilibrium(params, V, "+")
            minus = md.eigvec_e4_equilibrium(params, V, "-")
            assert plus.r[3] == 1.0 and minus.r[3] == 1.0
            np.testing.assert_allclose(plus.r[[0, 2, 3]], minus.r[[0, 2, 3]])
            assert plus.r[1] == pytest.approx(-minus.r[1], rel=1e-14)

    def test_svd_nullspace_collinearity(self):
        rng = np.random.default_rng(29)
        sysmk = build_system
        for _ in range(300):
            params = random_params(rng)
            V = random_state("e4", rng, equilibrium=True)
            rep = md.eigvec_e4_equilibrium(params, V, "+")
            null = md.nullspace_vector(sysmk("e4", params), V, rep.lam)
            assert md.collinearity_sine(rep.r, null) < 1e-9

    def test_rejects_nonzero_stress(self):
        with pytest.raises(DomainError):
            md.eigvec_e4_equilibrium(P, np.array([1.0, 0.0, 1.0, 0.1]), "+")


class TestGnlE4:
    def test_desk_chain(self):
        g = md.gnl_e4(P, V4_EQ, "+")
        mu = -math.sqrt(8.0 / 3.0)
        assert -2.0 * mu * g == pytest.approx(58.0 / 9.0, rel=1e-14)
        # lower bound of the chain at the same state
        assert 58.0 / 9.0 > -2.0 + 16.0 / 3.0 > 0.0

    def test_fd_oracle_agreement(self):
        rng = np.random.default_rng(31)
        for _ in range(150):
            params = random_params(rng)
            V = random_state("e4", rng, equilibrium=True)
            branch = "+" if rng.uniform() < 0.5 else "-"
            rep = md.eigvec_e4_equilibrium(params, V, branch)
            fd = md.gnl_fd_eigenvalue(build_system("e4", params), V, rep.r, rep.lam)
            assert fd == pytest.approx(rep.gnl, rel=1e-5)

    def test_nonzero_on_sweep(self):
        rng = np.random.default_rng(37)
        for _ in range(1000):
            params = random_params(rng)
            V = np.array([rng.uniform(0.1, 10.0), rng.uniform(-2.0, 2.0),
                          rng.uniform(0.1, 10.0), 0.0])
            assert md.gnl_e4(params, V, "+") != 0.0

    def test_rejects_nonzero_stress(self):
        with pytest.raises(DomainError):
            md.gnl_e4(P, np.array([1.0, 0.0, 1.0, -0.2]), "+")


class TestPi0Report:
    def test_desk_tau_1(self):
        rep = md.pi0_report(P, 1.0, 1.0)
        assert rep.lam_star_sq == pytest.approx(2.0, rel=1e-15)
        assert rep.lam_2star_sq == pytest.approx(8.0 / 3.0, rel=1e-15)
        lo, hi = (5.0 - math.sqrt(13.0)) / 3.0, (5.0 + math.sqrt(13.0)) / 3.0
        assert rep.roots[0] == pytest.approx(lo, abs=1e-12)
        assert rep.roots[1] == pytest.approx(hi, abs=1e-12)

    def test_desk_tau_half(self):
        rep = md.pi0_report(P, 0.5, 1.0)
        assert rep.lam_star_sq == pytest.approx(5.0, rel=1e-15)
        assert rep.lam_2star_sq == pytest.approx(23.0 / 3.0, rel=1e-15)
        lo, hi = (25.0 - math.sqrt(505.0)) / 6.0, (25.0 + math.sqrt(505.0)) / 6.0
        assert rep.roots[0] == pytest.approx(lo, abs=1e-12)
        assert rep.roots[1] == pytest.approx(hi, abs=1e-12)
        assert rep.lam_tau_sq == pytest.approx(0.4, rel=1e-15)
        assert rep.lam_theta_sq == pytest.approx(8.0 / 3.0, rel=1e-15)
        assert max(rep.lam_tau_sq, rep.lam_theta_sq) < rep.lam_star_sq
        assert rep.alphas == pytest.approx((40.0, 0.75, 1.0), rel=1e-14)

    def test_ordering_and_positivity_sweep(self):
        rng = np.random.default_rng(41)
        for _ in range(1000):
            params = random_params(rng)
            tau, theta = rng.uniform(0.05, 10.0, size=2)
            rep = md.pi0_report(params, tau, theta)
            lo, hi = rep.roots
            assert 0.0 < lo < rep.lam_star_sq < rep.lam_2star_sq < hi
            assert all(a > 0.0 for a in rep.alphas)

    def test_roots_match_generic_eigenvalues(self):
        rng = np.random.default_rng(43)
        for _ in range(300):
            params = random_params(rng)
            tau, theta = rng.uniform(0.05, 10.0, size=2)
            rep = md.pi0_report(params, tau, theta)
            V = np.array([tau, 0.0, theta, 0.0, 0.0])
            lams = [m.lam for m in md.speeds_generic(build_system("l5", params), V)]
            want = [-math.sqrt(rep.roots[1]), -math.sqrt(rep.roots[0]), 0.0,
                    math.sqrt(rep.roots[0]), math.sqrt(rep.roots[1])]
            scale = max(1.0, abs(want[0]))
            assert max(abs(a - b) for a, b in zip(lams, want)) < 1e-9 * scale


class TestEigvecL5:
    def test_desk_value(self):
        rep = md.pi0_report(P, 1.0, 1.0)
        r = md.eigvec_l5_equilibrium(P, 1.0, 1.0, math.sqrt(rep.roots[1]))
        np.testing.assert_allclose(
            r, [-1.0, 1.6936697, 0.86851709, 1.0, 0.51280193], rtol=1e-7)

    def test_component_relations(self):
        rng = np.random.default_rng(47)
        for _ in range(300):
            params = random_params(rng)
            tau, theta = rng.uniform(0.05, 10.0, size=2)
            rep = md.pi0_report(params, tau, theta)
            which = rng.integers(0, 2)
            lam = math.sqrt(rep.roots[which]) * (1 if rng.uniform() < 0.5 else -1)
            r = md.eigvec_l5_equilibrium(params, tau, theta, lam)
            assert r[3] == 1.0
            # heat-flux over temperature component ratio
            assert r[4] == pytest.approx(
                theta**2 / (params.delta * lam) * r[2], rel=1e-12)

    def test_svd_nullspace_collinearity(self):
        rng = np.random.default_rng(53)
        for _ in range(200):
            params = random_params(rng)
            tau, theta = rng.uniform(0.05, 10.0, size=2)
            rep = md.pi0_report(params, tau, theta)
            lam = math.sqrt(rep.roots[1])
            r = md.eigvec_l5_equilibrium(params, tau, theta, lam)
            null = md.nullspace_vector(
                build_system("l5", params), np.array([tau, 0, theta, 0, 0]), lam)
            assert md.collinearity_sine(r, null) < 1e-9

    def test_rejects_bad_lambda(self):
        with pytest.raises(DomainError):
            md.eigvec_l5_equilibrium(P, 1.0, 1.0, 0.0)
        with pytest.raises(DomainError):
            md.eigvec_l5_equilibrium(P, 1.0, 1.0, 1.2345)


class TestGnlL5:
    def test_desk_factor_positivity(self):
        rep = md.pi0_report(P, 0.5, 1.0)
        x = rep.roots[1]
        assert x == pytest.approx(7.912, abs=5e-4)
        assert x - rep.lam_tau_sq > 0.0
        assert (x - rep.lam_star_sq) * (x - rep.lam_theta_sq) > 0.0
        assert (x - rep.lam_star_sq) ** 2 > 0.0
        assert rep.N_fast > 0.0

    def test_branch_flip_is_odd(self):
        rng = np.random.default_rng(59)
        for _ in range(200):
            params = random_params(rng)
            tau, theta = rng.uniform(0.05, 10.0, size=2)
            for mode in ("fast", "slow"):
                a = md.gnl_l5(params, tau, theta, mode, "+")
                b = md.gnl_l5(params, tau, theta, mode, "-")
                assert a == pytest.approx(-b, rel=1e-14)

    def test_slow_mode_recorded(self):
        val = md.gnl_l5(P, 1.0, 1.0, "slow", "+")
        assert math.isfinite(val) and val != 0.0

    def test_determinant_fd_oracle(self):
        rng = np.random.default_rng(61)
        for _ in range(200):
            params = random_params(rng)
            tau, theta = rng.uniform(0.05, 10.0, size=2)
            mode = "fast" if rng.uniform() < 0.5 else "slow"
            branch = "+" if rng.uniform() < 0.5 else "-"
            closed = md.gnl_l5(params, tau, theta, mode, branch)
            fd = md.gnl_l5_fd(params, tau, theta, mode, branch)
            assert fd == pytest.approx(closed, rel=1e-5)

    def test_implicit_function_route(self):
        # r . grad(lam) from -N / (dPi/dlam) must agree with a finite
        # difference of the tracked eigenvalue along the kernel vector
        rng = np.random.default_rng(67)
        sys5 = build_system("l5", P)
        for _ in range(50):
            tau, theta = rng.uniform(0.2, 4.0, size=2)
            for mode in ("fast", "slow"):
                lam = md._l5_branch_speed(P, tau, theta, mode, "+")
                r = md.eigvec_l5_equilibrium(P, tau, theta, lam)
                ift = md.l5_speed_gradient(P, tau, theta, mode, "+")
                fd = md.gnl_fd_eigenvalue(
                    sys5, np.array([tau, 0, theta, 0, 0]), r, lam)
                assert fd == pytest.approx(ift, rel=1e-5)

    def test_fast_sign_constant_below_threshold(self):
        rng = np.random.default_rng(71)
        for _ in range(300):
            params = random_params(rng)
            theta = rng.uniform(0.1, 5.0)
            tau_max = md.find_tau_threshold(params, theta)
            tau = rng.uniform(0.001, 0.999) * tau_max
            assert md.gnl_l5(params, tau, theta, "fast", "+") > 0.0

    def test_bad_mode_and_branch(self):
        with pytest.raises(ConfigError):
            md.gnl_l5(P, 1.0, 1.0, "medium", "+")
        with pytest.raises(ConfigError):
            md.gnl_l5(P, 1.0, 1.0, "fast", "up")


class TestTauThreshold:
    def test_desk_value(self):
        assert md.find_tau_threshold(P, 1.0) == pytest.approx(
            math.sqrt(3.0 / 5.0), abs=1e-12)

    def test_bisect_agrees(self):
        rng = np.random.default_rng(73)
        for _ in range(100):
            params = random_params(rng)
            theta = rng.uniform(0.1, 5.0)
            closed = md.find_tau_threshold(params, theta)
            bisect = md.find_tau_threshold_bisect(params, theta)
            assert bisect == pytest.approx(closed, abs=1e-8 * max(1.0, closed))

    def test_predicate_at_half_and_double(self):
        rng = np.random.default_rng(79)
        for _ in range(100):
            params = random_params(rng)
            theta = rng.uniform(0.1, 5.0)
            tau_max = md.find_tau_threshold(params, theta)
            assert math.isfinite(tau_max)
            lam_tau_sq = theta**2 / (params.delta * (params.R + params.c))
            lam_theta_sq = theta**2 / (params.delta * params.c) + 2 * theta / params.eps
            top = max(lam_tau_sq, lam_theta_sq)

            def star_sq(tau):
                return params.R * theta / tau**2 + theta / params.eps

            assert top < star_sq(tau_max / 2.0)
            assert top > star_sq(2.0 * tau_max)


class TestDegeneracyScan:
    def test_fast_mode_uniform_sign(self):
        tau_max = md.find_tau_threshold(P, 1.0)
        taus = np.linspace(0.02, 0.999 * tau_max, 40)
        rep = md.degeneracy_scan(P, taus, [1.0], "fast")
        assert np.all(rep.signs == 1)
        assert rep.crossings == ()

    def test_slow_mode_recorded_without_assertion(self):
        rep = md.degeneracy_scan(P, np.linspace(0.1, 2.0, 10), [0.5, 1.0], "slow")
        assert rep.values.shape == (2, 10)
        assert np.all(np.isfinite(rep.values))

    def test_empty_grid(self):
        rep = md.degeneracy_scan(P, [], [], "fast")
        assert rep.values.shape == (0, 0)
        assert rep.crossings == ()

    def test_crossing_refinement(self, monkeypatch):
        root = 0.618033988749895

        def fake_gnl(params, tau, theta, mode, branch):
            return tau - root

        monkeypatch.setattr(md, "gnl_l5", fake_gnl)
        rep = md.degeneracy_scan(P, np.linspace(0.3, 0.9, 7), [1.0], "fast")
        assert len(rep.crossings) == 1
        cross = rep.crossings[0]
        assert cross.theta == 1.0
        assert cross.tau_lo < root < cross.tau_hi
        assert cross.tau_zero == pytest.approx(root, abs=1e-8)


class TestEquilibriumEigenvector:
    def test_all_kinds_and_labels(self):
        rng = np.random.default_rng(83)
        labels = {"e4": ("fast+", "fast-"), "e3": ("fast+", "fast-"),
                  "e5": ("fast+", "fast-", "slow+", "slow-"),
                  "l5": ("fast+", "fast-", "slow+", "slow-")}
        for kind in KINDS:
            sysmk = build_system(kind, P)
            for _ in range(50):
                V = random_state(kind, rng, equilibrium=True)
                for label in labels[kind]:
                    lam, r = md.equilibrium_eigenvector(kind, P, V, label)
                    res = md._pencil_residual(sysmk, V, lam, r)
                    assert res <= md.RESIDUAL_TOL * max(1.0, abs(lam))

    def test_e5_speeds_shift_of_l5(self):
        rng = np.random.default_rng(89)
        for _ in range(1000):
            params = random_params(rng)
            rho = rng.uniform(0.1, 10.0)
            u = rng.uniform(-2.0, 2.0)
            theta = rng.uniform(0.1, 10.0)
            tau = 1.0 / rho
            V5 = np.array([rho, u, theta, 0.0, 0.0])
            VL = np.array([tau, u, theta, 0.0, 0.0])
            for label in ("fast+", "fast-", "slow+", "slow-"):
                lam_e, _ = md.equilibrium_eigenvector("e5", params, V5, label)
                lam_l, _ = md.equilibrium_eigenvector("l5", params, VL, label)
                scale = max(1.0, abs(lam_e))
                assert abs(lam_e - (u + tau * lam_l)) < 1e-9 * scale

    def test_e5_desk_value(self):
        V5 = np.array([2.0, 0.0, 1.0, 0.0, 0.0])
        lam, r = md.equilibrium_eigenvector("e5", P, V5, "fast+")
        assert lam == pytest.approx(1.4064169168233305, rel=1e-12)
        np.testing.assert_allclose(
            r, [4.0, 2.81283383, 1.45601709, 1.0, 0.51763352], rtol=1e-7)

    def test_rejects_bad_labels(self):
        with pytest.raises(ConfigError):
            md.equilibrium_eigenvector("e4", P, V4_EQ, "slow+")
        with pytest.raises(ConfigError):
            md.equilibrium_eigenvector("e3", P, np.array([1.0, 0.0, 0.0]), "slow-")
        with pytest.raises(ConfigError):
            md.equilibrium_eigenvector("l5", P, np.ones(5), "sideways")


class TestAnalyze:
    def test_equilibrium_all_kinds(self):
        rng = np.random.default_rng(97)
        for kind in KINDS:
            sysmk = build_system(kind, P)
            V = random_state(kind, rng, equilibrium=True)
            result = md.analyze(sysmk, V)
            assert result.max_residual <= md.RESIDUAL_TOL
            if result.speed_mismatch is not None:
                assert result.speed_mismatch <= 1e-9
            if result.eigvec_mismatch is not None:
                assert result.eigvec_mismatch <= 1e-8
            if result.gnl_mismatch is not None:
                assert result.gnl_mismatch <= 1e-5
            contacts = [m for m in result.reports if m.label == "contact"]
            assert all(m.gnl == 0.0 for m in contacts)

    def test_off_equilibrium_e5(self):
        rng = np.random.default_rng(101)
        V = random_state("e5", rng)
        result = md.analyze(build_system("e5", P), V)
        assert result.speed_mismatch is None
        assert result.max_residual <= md.RESIDUAL_TOL
        assert all(m.gnl is not None for m in result.reports)

    def test_skip_fd_gnl(self):
        V = np.array([1.0, 0.3, 1.0, 0.2, -0.1])
        result = md.analyze(build_system("e5", P), V, fd_gnl=False)
        noncontact = [m for m in result.reports if m.label != "contact"]
        assert all(m.gnl is None for m in noncontact)

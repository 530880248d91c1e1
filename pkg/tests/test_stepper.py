"""
Backward Euler stepper tests.

The main oracle is an independent re-implementation of the discrete map on a
two-mode domain: explicit cosine matrices for the transforms, the Cardano
closed form for the cubic resolvent, and scipy.optimize.root for the implicit
system.  Everything else checks closed-form single-mode updates, conservation
identities, energy decay, and the rejection machinery.
"""

import numpy as np
import pytest
from scipy import optimize

from svch import monotone as mn
from svch import noise as nz
from svch import stepper as sp
from svch.spectral import Domain, SpectralField, apply_pointwise, inner, norm, to_grid

from conftest import make_config, random_field

RNG = np.random.default_rng(31)


def one_mode_factor(mu, eps, dt, lam):
    """Exact linear-graph amplification factor of one backward Euler step."""
    return (1.0 + eps * mu) / ((1.0 + eps * mu) + dt * mu * (mu + 1.0 / (1.0 + lam)))


class TestSingleModeClosedForm:
    @pytest.mark.parametrize("eps", (0.0, 0.3))
    def test_linear_graph_one_step(self, eps):
        dom = Domain((2.0,), (8,))
        k, amp = 3, 0.9
        mu = (k * np.pi / 2.0) ** 2
        c0 = np.zeros(8)
        c0[k] = amp
        cfg = make_config("linear", ("zero",), eps=eps, dt=1e-3, t_final=1e-3,
                          lam=1e-2)
        st = sp.step(sp.initial_state(SpectralField(dom, c0), cfg), cfg)
        want = amp * one_mode_factor(mu, eps, 1e-3, 1e-2)
        assert st.u.coeffs[k] == pytest.approx(want, abs=1e-13)
        others = np.delete(st.u.coeffs, k)
        assert np.max(np.abs(others)) < 1e-13

    def test_linear_graph_with_mode_noise(self):
        dom = Domain((2.0,), (8,))
        k = 3
        mu = (k * np.pi / 2.0) ** 2
        c0 = np.zeros(8)
        c0[k] = 0.5
        n = np.zeros(8)
        n[0], n[k] = 0.02, -0.07
        cfg = make_config("linear", ("zero",), dt=1e-3, t_final=1e-3, lam=1e-2)
        st = sp.step(sp.initial_state(SpectralField(dom, c0), cfg), cfg,
                     SpectralField(dom, n))
        denom = 1.0 + 1e-3 * mu * (mu + 1.0 / 1.01)
        assert st.u.coeffs[k] == pytest.approx((0.5 - 0.07) / denom, abs=1e-13)
        assert st.u.coeffs[0] == 0.02  # exact mean update

    def test_constant_state_is_a_bitwise_fixed_point(self, long_domain):
        c0 = np.zeros(64)
        c0[0] = 0.7
        u0 = SpectralField(long_domain, c0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          dt=1e-3, t_final=1e-2)
        traj = sp.simulate(u0, cfg)
        assert len(traj) == 11
        for st in traj:
            assert np.array_equal(st.u.coeffs, c0)
            # convergence happened on the first residual, before any update
            assert st.newton_iterations == 0


class TestTwoModeDenseOracle:
    """Independent discrete map on two modes, checked step by step."""

    L = 1.0
    LAM = 1e-2
    DT = 1e-3

    def setup_method(self):
        n = 4  # dealiased grid for two modes
        j = np.arange(n) + 0.5
        self.S = np.cos(np.outer(j * np.pi / n, np.arange(2)).T).T  # (4, 2)
        self.mu = (np.arange(2) * np.pi / self.L) ** 2

    def analyze(self, grid):
        n = grid.size
        j = np.arange(n) + 0.5
        c = np.array([grid.mean(),
                      (2.0 / n) * np.sum(grid * np.cos(np.pi * j / n))])
        return c

    def beta_lam(self, r):
        q = r / self.LAM
        disc = np.sqrt((q / 2.0) ** 2 + (1.0 / (3.0 * self.LAM)) ** 3)
        J = np.cbrt(q / 2.0 + disc) + np.cbrt(q / 2.0 - disc)
        return (r - J) / self.LAM

    def oracle_step(self, c, n_coeffs, eps):
        rhs = (1.0 + eps * self.mu) * c + n_coeffs
        q = self.analyze(-(self.S @ c))  # reaction at the old state

        def F(cp):
            b = self.analyze(self.beta_lam(self.S @ cp))
            w = self.mu * cp + b + q
            return (1.0 + eps * self.mu) * cp + self.DT * self.mu * w - rhs

        sol = optimize.root(F, c, method="hybr", tol=1e-14)
        # near the rounding floor hybr can report no progress; trust the residual
        assert np.max(np.abs(F(sol.x))) < 5e-13
        return sol.x

    @pytest.mark.parametrize("eps", (0.0, 1e-2))
    def test_thousand_steps(self, eps):
        dom = Domain((self.L,), (2,))
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          eps=eps, lam=self.LAM, dt=self.DT, t_final=1.0,
                          newton_tol=1e-13)
        op = nz.diffusion_operator(dom, 2, sigma=0.2, rho=1.0)
        proc = nz.WienerProcess(2, seed=404)
        u0 = SpectralField(dom, np.array([0.1, 0.3]))
        traj = sp.simulate(u0, cfg, nz.NoiseModel(proc, op))

        c = u0.coeffs.copy()
        worst = 0.0
        for s in range(1000):
            dW = proc.increments_at(s, self.DT)
            n_coeffs = np.tensordot(dW, op.columns, axes=(0, 0))
            c = self.oracle_step(c, n_coeffs, eps)
            worst = max(worst, float(np.max(np.abs(traj[s + 1].u.coeffs - c))))
        assert worst < 1e-10


class TestConservation:
    def test_mean_identity_additive(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          t_final=0.05)
        op = nz.diffusion_operator(long_domain, 8, sigma=0.5)
        traj = sp.simulate(study_field, cfg, nz.NoiseModel(nz.WienerProcess(8, seed=3), op))
        for st in traj:
            want = study_field.mean + st.noise_ledger.mean
            assert abs(st.u.mean - want) < 1e-13

    def test_mean_exactly_constant_without_mean_input(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          t_final=0.05)
        op = nz.diffusion_operator(long_domain, 8, sigma=0.5, mean_zero=True)
        traj = sp.simulate(study_field, cfg, nz.NoiseModel(nz.WienerProcess(8, seed=3), op))
        for st in traj:
            assert st.u.coeffs.flat[0] == study_field.coeffs.flat[0]

    def test_mean_constant_multiplicative(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          t_final=0.05)
        op = nz.diffusion_operator(long_domain, 8, sigma=0.5, kind="multiplicative")
        traj = sp.simulate(study_field, cfg, nz.NoiseModel(nz.WienerProcess(8, seed=3), op))
        for st in traj:
            assert st.u.coeffs.flat[0] == study_field.coeffs.flat[0]

    def test_evolution_residual_bounded_by_newton_tol(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          t_final=0.02, newton_tol=1e-11)
        op = nz.diffusion_operator(long_domain, 8, sigma=0.3)
        proc = nz.WienerProcess(8, seed=5)
        traj = sp.simulate(study_field, cfg, nz.NoiseModel(proc, op))
        for s in range(len(traj) - 1):
            field = nz.apply_diffusion(op, None, proc.increments_at(s, cfg.dt))
            res = sp.evolution_residual(traj[s], traj[s + 1], cfg, field)
            assert res <= 10 * cfg.newton_tol


class TestEnergy:
    def test_deterministic_decay(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          dt=1e-3, t_final=0.2)
        traj = sp.simulate(study_field, cfg)
        energies = np.array([sp.free_energy(st.u, cfg) for st in traj])
        assert np.all(np.diff(energies) <= 1e-12)

    def test_energy_dominates_reaction_mass(self, long_domain):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0))
        for _ in range(20):
            v = random_field(long_domain, RNG, scale=1.2)
            grad, well, reaction = sp.free_energy_parts(v, cfg)
            assert grad >= 0.0 and well >= 0.0
            assert sp.free_energy(v, cfg) - reaction >= 0.0

    def test_viscous_run_also_decays(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          eps=1e-2, dt=1e-3, t_final=0.1)
        traj = sp.simulate(study_field, cfg)
        energies = np.array([sp.free_energy(st.u, cfg) for st in traj])
        assert np.all(np.diff(energies) <= 1e-12)


class TestNewtonBehavior:
    def test_quadratic_residual_tail(self, long_domain):
        u0 = random_field(long_domain, np.random.default_rng(5), scale=1.5, decay=1.0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=5e-2, t_final=5e-2, newton_tol=1e-12)
        st = sp.step(sp.initial_state(u0, cfg), cfg)
        r = st.newton_residuals
        pairs = [(r[i], r[i + 1]) for i in range(len(r) - 1)
                 if 1e-8 <= r[i] <= 1e-2]
        assert len(pairs) >= 2
        for rk, rk1 in pairs:
            assert rk1 <= 100.0 * rk * rk

    def test_rejection_then_success(self, long_domain):
        u0 = random_field(long_domain, np.random.default_rng(5), scale=1.5, decay=1.0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=0.5, t_final=0.5, newton_tol=1e-11,
                          newton_max_iter=4, max_rejections=4)
        st = sp.step(sp.initial_state(u0, cfg), cfg)
        assert st.rejections == 2
        assert st.t == 0.5  # the full interval was still covered

    def test_step_rejected_after_halvings(self, long_domain):
        u0 = random_field(long_domain, np.random.default_rng(5), scale=1.5, decay=1.0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=0.2, t_final=0.2, newton_tol=1e-11,
                          newton_max_iter=2, max_rejections=4)
        with pytest.raises(sp.StepRejected) as exc:
            sp.step(sp.initial_state(u0, cfg), cfg)
        assert exc.value.suggested_dt == pytest.approx(0.2 / 32.0)

    def test_immediate_rejection_suggests_half(self, long_domain):
        u0 = random_field(long_domain, np.random.default_rng(5), scale=1.5, decay=1.0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=0.2, t_final=0.2, newton_tol=1e-11,
                          newton_max_iter=0, max_rejections=0)
        with pytest.raises(sp.StepRejected) as exc:
            sp.step(sp.initial_state(u0, cfg), cfg)
        assert exc.value.suggested_dt == pytest.approx(0.1)

    def test_rejected_step_keeps_noise_ledger_once(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=0.5, t_final=0.5, newton_tol=1e-11,
                          newton_max_iter=4, max_rejections=4)
        n = random_field(long_domain, np.random.default_rng(8), scale=0.01)
        u0 = random_field(long_domain, np.random.default_rng(5), scale=1.5, decay=1.0)
        st = sp.step(sp.initial_state(u0, cfg), cfg, n)
        assert st.rejections >= 1
        assert np.array_equal(st.noise_ledger.coeffs, n.coeffs)
        assert abs(st.u.mean - (u0.mean + n.mean)) < 1e-14


class TestDriftMonotonicity:
    def test_weak_monotonicity_constant(self, long_domain):
        lam, c_pi = 1e-2, 1.0
        cfg = make_config("quartic_double_well", ("negative_identity", c_pi), lam=lam)
        c = (1.0 / lam + c_pi) ** 2 / 4.0
        for _ in range(100):
            v1 = random_field(long_domain, RNG, scale=1.0)
            v2 = random_field(long_domain, RNG, scale=1.0)
            delta = v1 - v2
            pairing = inner(sp.drift(v1, cfg) - sp.drift(v2, cfg), delta)
            assert pairing >= -c * norm(delta, "H") ** 2 * (1 + 1e-10) - 1e-12


class TestSourceTerms:
    def test_steady_state_with_source(self):
        dom = Domain((2.0,), (8,))
        gc = np.zeros(8)
        gc[2] = 1.3
        g = SpectralField(dom, gc)
        cfg = make_config("linear", ("zero",), lam=1e-2, dt=0.5, t_final=40.0,
                          source=g)
        u0 = SpectralField(dom, np.zeros(8))
        traj = sp.simulate(u0, cfg)
        mu2 = (2 * np.pi / 2.0) ** 2
        want = 1.3 / (mu2 + 1.0 / 1.01)
        assert traj[-1].u.coeffs[2] == pytest.approx(want, abs=1e-10)

    def test_source_path_indexes_by_step(self, long_domain, study_field):
        ga = random_field(long_domain, np.random.default_rng(1), scale=0.3)
        gb = random_field(long_domain, np.random.default_rng(2), scale=0.3)
        base = dict(dt=1e-3, newton_tol=1e-12)
        one = make_config("quartic_double_well", ("negative_identity", 1.0),
                          t_final=1e-3, source=ga, **base)
        st_single = sp.step(sp.initial_state(study_field, one), one)
        path = make_config("quartic_double_well", ("negative_identity", 1.0),
                           t_final=2e-3, source_path=(ga, gb), **base)
        st_path = sp.step(sp.initial_state(study_field, path), path)
        assert np.array_equal(st_path.u.coeffs, st_single.u.coeffs)
        # past the end of the table the last entry keeps applying
        st2 = sp.step(st_path, path)
        two = make_config("quartic_double_well", ("negative_identity", 1.0),
                          t_final=1e-3, source=gb, **base)
        st2_direct = sp.step(
            sp.SolverState(u=st_single.u, w=st_single.w, xi=st_single.xi,
                           noise_ledger=st_single.noise_ledger, t=st_single.t,
                           step_index=0),
            two)
        assert np.allclose(st2.u.coeffs, st2_direct.u.coeffs, rtol=0, atol=1e-14)

    def test_source_domain_checked(self, long_domain, unit_domain, study_field):
        g = SpectralField(unit_domain, np.zeros(unit_domain.modes))
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0), source=g)
        with pytest.raises(ValueError, match="different domain"):
            sp.simulate(study_field, cfg)


class TestMultiplicativeSaturation:
    """Saturated multiplicative forcing coincides with mean-free additive forcing."""

    def test_fields_match_to_rounding(self, long_domain):
        op_m = nz.diffusion_operator(long_domain, 4, kind="multiplicative",
                                     sigma=0.1, clamp_bound=1.0)
        op_a = nz.diffusion_operator(long_domain, 4, sigma=0.1, mean_zero=True)
        assert np.array_equal(op_m.columns, op_a.columns)
        c = np.zeros(64)
        c[0] = 2.0
        c[3] = 0.05
        u = SpectralField(long_domain, c)  # grid values stay above the clamp
        for s in range(5):
            dW = nz.WienerProcess(4, seed=9).increments_at(s, 1e-3)
            fm = nz.apply_diffusion(op_m, u, dW)
            fa = nz.apply_diffusion(op_a, None, dW)
            assert np.max(np.abs(fm.coeffs - fa.coeffs)) < 5e-15

    def test_trajectories_match(self, long_domain):
        op_m = nz.diffusion_operator(long_domain, 4, kind="multiplicative",
                                     sigma=0.1, clamp_bound=1.0)
        op_a = nz.diffusion_operator(long_domain, 4, sigma=0.1, mean_zero=True)
        c = np.zeros(64)
        c[0] = 2.0
        c[3] = 0.05
        u0 = SpectralField(long_domain, c)
        cfg = make_config("quartic_double_well", ("zero",), dt=1e-3,
                          t_final=0.02, newton_tol=1e-12)
        tm = sp.simulate(u0, cfg, nz.NoiseModel(nz.WienerProcess(4, seed=9), op_m))
        ta = sp.simulate(u0, cfg, nz.NoiseModel(nz.WienerProcess(4, seed=9), op_a))
        for a, b in zip(tm, ta):
            assert np.max(np.abs(a.u.coeffs - b.u.coeffs)) < 1e-12
            assert a.u.coeffs.flat[0] == 2.0

    def test_step_multiplicative_rejects_additive_operator(self, long_domain, study_field):
        op = nz.diffusion_operator(long_domain, 4)
        model = nz.NoiseModel(nz.WienerProcess(4, seed=1), op)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0))
        with pytest.raises(nz.KindMismatch):
            sp.step_multiplicative(sp.initial_state(study_field, cfg), cfg, model)


class TestRegularizationLimit:
    def test_trajectories_tighten_as_lam_shrinks(self, long_domain, study_field):
        runs = {}
        for lam in (1e-1, 1e-2, 1e-3):
            cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                              lam=lam, dt=1e-3, t_final=0.05)
            runs[lam] = sp.simulate(study_field, cfg)

        def dist(a, b):
            return max(norm(x.u - y.u, "V1") for x, y in zip(a, b))

        d1 = dist(runs[1e-1], runs[1e-2])
        d2 = dist(runs[1e-2], runs[1e-3])
        assert 0 < d2 < d1


class TestPhaseSeparation:
    # reference endpoint from a refined run (256 modes, dt = 5e-4) of the
    # same configuration; the coarse run below must land on the same plateau
    FINE_SUP = 1.009347628776

    def test_unstable_mode_grows_to_order_one_plateau(self, long_domain):
        c0 = np.zeros(64)
        c0[1] = 0.1  # first cosine mode: mu_1 < 1 on this domain, so it grows
        u0 = SpectralField(long_domain, c0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=0.05, t_final=60.0, newton_tol=1e-11)
        traj = sp.simulate(u0, cfg)
        final = np.max(np.abs(to_grid(traj[-1].u)))
        assert 0.9 <= final <= 1.1
        assert final == pytest.approx(self.FINE_SUP, abs=5e-3)
        assert abs(traj[-1].u.mean) < 1e-13

    def test_stable_mode_decays(self):
        # on a unit-length domain the same mode sits above the cutoff and dies
        dom = Domain((1.0,), (16,))
        c0 = np.zeros(16)
        c0[1] = 0.1
        u0 = SpectralField(dom, c0)
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          lam=1e-2, dt=0.05, t_final=10.0)
        traj = sp.simulate(u0, cfg)
        assert np.max(np.abs(to_grid(traj[-1].u))) < 1e-3


class TestConfigAndTrajectory:
    def test_validation(self, quartic, neg_id):
        with pytest.raises(ValueError):
            sp.SolverConfig(graph=quartic, perturbation=neg_id, eps=-1e-3)
        with pytest.raises(ValueError):
            sp.SolverConfig(graph=quartic, perturbation=neg_id, lam=0.0)
        with pytest.raises(ValueError):
            sp.SolverConfig(graph=quartic, perturbation=neg_id, dt=0.0)
        with pytest.raises(ValueError):
            sp.SolverConfig(graph=quartic, perturbation=neg_id, dt=0.2, t_final=0.1)
        with pytest.raises(ValueError):
            sp.SolverConfig(graph=quartic, perturbation=neg_id, newton_tol=1e-15)
        with pytest.raises(ValueError):
            sp.SolverConfig(graph=quartic, perturbation=neg_id, splitting="strang")

    def test_step_counting(self, quartic, neg_id):
        cfg = sp.SolverConfig(graph=quartic, perturbation=neg_id, dt=0.3, t_final=1.0)
        assert cfg.n_steps == 4
        cfg = sp.SolverConfig(graph=quartic, perturbation=neg_id, dt=0.25, t_final=1.0)
        assert cfg.n_steps == 4
        cfg = sp.SolverConfig(graph=quartic, perturbation=neg_id, dt=0.1, t_final=0.1)
        assert cfg.n_steps == 1

    def test_trajectory_protocol(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          dt=1e-3, t_final=5e-3)
        traj = sp.simulate(study_field, cfg)
        assert len(traj) == 6
        assert np.allclose(traj.times, np.arange(6) * 1e-3)
        assert traj[0].u is study_field
        assert [s.step_index for s in traj] == list(range(6))

    def test_noise_domain_checked(self, long_domain, unit_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0))
        bad = SpectralField(unit_domain, np.zeros(unit_domain.modes))
        with pytest.raises(ValueError, match="different domain"):
            sp.step(sp.initial_state(study_field, cfg), cfg, bad)

    def test_recorded_w_matches_scheme(self, long_domain, study_field):
        cfg = make_config("quartic_double_well", ("negative_identity", 1.0),
                          dt=1e-3, t_final=5e-3, newton_tol=1e-12)
        traj = sp.simulate(study_field, cfg)
        from svch.spectral import neumann_eigensystem

        mu = neumann_eigensystem(long_domain).mu
        for s in range(1, len(traj)):
            new, prev = traj[s], traj[s - 1]
            pi_prev = apply_pointwise(prev.u, cfg.perturbation.pi)
            want = mu * new.u.coeffs + new.xi.coeffs + pi_prev.coeffs
            assert np.allclose(new.w.coeffs, want, rtol=0, atol=1e-12)

"""
Diagnostics and convergence studies built on top of the solver.

Everything here consumes trajectories from ``stepper.simulate`` and reduces
them to per-step records, pathwise norms, and sweep reports.  Pathwise
L2(0,T; X) norms use the trapezoid rule over the recorded step times; sweeps
share the driving noise across runs by reusing the (seed, step, mode) keyed
increments, so refinement studies compare solutions of the same stochastic
realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import monotone as mn
from .monotone import polynomial_degree
from .noise import DiffusionOperator, NoiseModel, WienerProcess, apply_diffusion
from .spectral import (
    SpectralField,
    integrate_grid,
    neumann_eigensystem,
    norm,
    to_grid,
)
from .stepper import (
    SolverConfig,
    Trajectory,
    evolution_residual,
    free_energy_parts,
    simulate,
)

__all__ = [
    "NonFinite",
    "PreconditionViolated",
    "GrowthMismatch",
    "Assertion",
    "DiagnosticRecord",
    "SweepReport",
    "ProblemData",
    "run_diagnostics",
    "check_invariants",
    "path_l2_norm",
    "path_l2_distance",
    "sup_norm",
    "continuous_dependence_study",
    "vanishing_viscosity_study",
    "yosida_convergence_study",
    "ensemble_expectations",
    "member_seed",
    "regularity_monitor",
    "regularity_study",
]


class NonFinite(ArithmeticError):
    """A diagnostic quantity is not finite; message carries the step index."""


class PreconditionViolated(ValueError):
    """Study input does not satisfy the documented compatibility conditions."""


class GrowthMismatch(TypeError):
    """A growth-specific bound was requested for the wrong nonlinearity class."""


@dataclass(frozen=True)
class Assertion:
    """One named pass/fail check with the measured value and its bound."""

    name: str
    passed: bool
    value: Optional[float] = None
    bound: Optional[float] = None


@dataclass(frozen=True)
class DiagnosticRecord:
    """Scalar diagnostics of one recorded state."""

    t: float
    mean_u: float
    star_centered: float  # star norm of u minus its mean process value
    h_norm: float
    v1_norm: float
    v2_norm: float
    v3_norm: float
    energy: float
    gradient_energy: float
    well_mass: float  # integral of the regularized double-well primitive
    reaction_mass: float  # integral of pi_hat (the possibly negative offset)
    conjugate_mass: float  # integral of the conjugate at beta_lam(u)
    w_l1: float
    xi_l1: float

    FIELDS = (
        "t", "mean_u", "star_centered", "h_norm", "v1_norm", "v2_norm",
        "v3_norm", "energy", "gradient_energy", "well_mass", "reaction_mass",
        "conjugate_mass", "w_l1", "xi_l1",
    )


@dataclass(frozen=True, eq=False)
class SweepReport:
    """Metrics of a one-parameter sweep plus its pass/fail assertions."""

    variable: str
    values: tuple
    metrics: dict
    assertions: tuple
    distances: Optional[tuple] = None
    mc_mean: Optional[dict] = None
    mc_stderr: Optional[dict] = None
    members: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


@dataclass(frozen=True, eq=False)
class ProblemData:
    """Initial state plus optional forcing pieces for one solver run."""

    u0: SpectralField
    operator: Optional[DiffusionOperator] = None
    source: Optional[SpectralField] = None


def _uniformity(name: str, values, factor: float) -> Assertion:
    lo = min(values)
    hi = max(values)
    spread = hi / lo if lo > 0 else (math.inf if hi > 0 else 1.0)
    return Assertion(name, spread <= factor, value=spread, bound=factor)


def _require_monotone(values, direction, what):
    arr = np.asarray(values, dtype=float)
    diffs = np.diff(arr)
    ok = (diffs > 0).all() if direction == "increasing" else (diffs < 0).all()
    if len(arr) > 1 and not ok:
        raise PreconditionViolated(f"{what} must be strictly {direction}: {list(arr)}")


def _run(data: ProblemData, base: SolverConfig, seed: Optional[int],
         eps: Optional[float] = None, lam: Optional[float] = None) -> Trajectory:
    cfg = base
    updates = {}
    if eps is not None:
        updates["eps"] = float(eps)
    if lam is not None:
        updates["lam"] = float(lam)
    if data.source is not None:
        updates["source"] = data.source
    if updates:
        cfg = replace(cfg, **updates)
    noise = None
    if data.operator is not None:
        if seed is None:
            raise PreconditionViolated("a seed is required when noise is present")
        noise = NoiseModel(WienerProcess(data.operator.mode_count, seed), data.operator)
    return simulate(data.u0, cfg, noise)


# ---------------------------------------------------------------------------
# per-trajectory diagnostics


def run_diagnostics(traj: Trajectory) -> list:
    """One DiagnosticRecord per state; raises NonFinite with the step index."""
    cfg = traj.config
    graph = cfg.graph
    records = []
    u0_mean = traj.states[0].u.mean
    for state in traj.states:
        u = state.u
        domain = u.domain
        mean_process = u0_mean + state.noise_ledger.mean
        centered = u.coeffs.copy()
        centered.flat[0] -= mean_process
        grad_e, well, reaction = free_energy_parts(u, cfg)
        ugrid = to_grid(u)
        blam = mn.yosida(graph, cfg.lam, ugrid)
        rec = DiagnosticRecord(
            t=state.t,
            mean_u=u.mean,
            star_centered=norm(SpectralField(domain, centered), "star"),
            h_norm=norm(u, "H"),
            v1_norm=norm(u, "V1"),
            v2_norm=norm(u, "V2"),
            v3_norm=norm(u, "V3"),
            energy=grad_e + well + reaction,
            gradient_energy=grad_e,
            well_mass=well,
            reaction_mass=reaction,
            conjugate_mass=integrate_grid(domain, mn.conjugate(graph, blam)),
            w_l1=integrate_grid(domain, np.abs(to_grid(state.w))),
            xi_l1=integrate_grid(domain, np.abs(to_grid(state.xi))),
        )
        for name in DiagnosticRecord.FIELDS:
            if not math.isfinite(getattr(rec, name)):
                raise NonFinite(f"diagnostic {name} is not finite at step {state.step_index}")
        records.append(rec)
    return records


def _noise_field_for_step(traj: Trajectory, i: int) -> Optional[SpectralField]:
    if traj.noise is None:
        return None
    op = traj.noise.operator
    dW = traj.noise.process.increments_at(traj.states[i].step_index, traj.config.dt)
    state = traj.states[i].u if op.kind == "multiplicative" else None
    return apply_diffusion(op, state, dW)


def check_invariants(traj: Trajectory, records=None) -> list:
    """Structural checks: evolution identity, mean identity, energy decay.

    The energy decay check only applies to deterministic convex-splitting
    runs without a source, which is exactly when the splitting guarantees it.
    """
    cfg = traj.config
    out = []
    records = run_diagnostics(traj) if records is None else records

    res = 0.0
    for i in range(len(traj.states) - 1):
        if traj.states[i + 1].rejections:
            continue  # split steps satisfy the identity per substep instead
        res = max(res, evolution_residual(traj.states[i], traj.states[i + 1], cfg,
                                          _noise_field_for_step(traj, i)))
    out.append(Assertion("evolution_identity", res <= 10 * cfg.newton_tol,
                         value=res, bound=10 * cfg.newton_tol))

    u0_mean = traj.states[0].u.mean
    mean_err = max(abs(s.u.mean - u0_mean - s.noise_ledger.mean) for s in traj.states)
    out.append(Assertion("mean_identity", mean_err <= 1e-12, value=mean_err, bound=1e-12))

    offset_floor = min(r.energy - r.reaction_mass for r in records)
    out.append(Assertion("energy_above_reaction_offset", offset_floor >= -1e-12,
                         value=offset_floor, bound=0.0))

    deterministic = traj.noise is None
    if deterministic and cfg.splitting == "convex_splitting" and cfg.source is None \
            and cfg.source_path is None:
        jumps = np.diff([r.energy for r in records])
        worst = float(jumps.max()) if len(jumps) else 0.0
        out.append(Assertion("energy_decay", worst <= 1e-12, value=worst, bound=1e-12))
    return out


# ---------------------------------------------------------------------------
# pathwise norms


def _trapz(values, times) -> float:
    return float(np.trapezoid(np.asarray(values, dtype=float), np.asarray(times)))


def path_l2_norm(traj: Trajectory, kind: str = "V1") -> float:
    return math.sqrt(_trapz([norm(s.u, kind) ** 2 for s in traj.states], traj.times))


def path_l2_distance(a: Trajectory, b: Trajectory, kind: str = "V1") -> float:
    if len(a.states) != len(b.states):
        raise PreconditionViolated("trajectories have different step counts")
    return math.sqrt(_trapz([norm(x.u - y.u, kind) ** 2
                             for x, y in zip(a.states, b.states)], a.times))


def sup_norm(traj: Trajectory, kind: str = "V1") -> float:
    return max(norm(s.u, kind) for s in traj.states)


# ---------------------------------------------------------------------------
# studies


def _grad_sq(u: SpectralField) -> float:
    eig = neumann_eigensystem(u.domain)
    return float(np.sum(eig.weights * eig.mu * u.coeffs**2))


def continuous_dependence_study(
    data1: ProblemData,
    data2: ProblemData,
    eps_grid: Sequence[float],
    seed: int,
    base: SolverConfig,
    k_cap: Optional[float] = None,
    uniformity_factor: float = 10.0,
) -> SweepReport:
    """Ratio of the difference energy to the data distance, per viscosity.

    Preconditions: equal initial means (tolerance 1e-12) and mean-compatible
    noise, i.e. both runs share the increments and their operators inject the
    same constant-mode content.  When ``k_cap`` is omitted it defaults to 100
    times the ratio of a noise-free run at the smallest viscosity in the grid.
    """
    _require_monotone(eps_grid, "increasing", "eps grid")
    if any(e < 0 for e in eps_grid):
        raise PreconditionViolated("viscosities must be >= 0")
    if abs(data1.u0.mean - data2.u0.mean) > 1e-12:
        raise PreconditionViolated(
            f"initial means differ: {data1.u0.mean!r} vs {data2.u0.mean!r}"
        )
    op1, op2 = data1.operator, data2.operator
    if (op1 is None) != (op2 is None):
        raise PreconditionViolated("both runs need noise, or neither")
    if op1 is not None and op2 is not None:
        c1 = op1.columns.reshape(op1.mode_count, -1)[:, 0]
        c2 = op2.columns.reshape(op2.mode_count, -1)[:, 0]
        if op1.mode_count != op2.mode_count or not np.array_equal(c1, c2):
            raise PreconditionViolated(
                "noise operators inject different constant-mode content; "
                "the mean processes would diverge"
            )

    denom = norm(data1.u0 - data2.u0, "star") ** 2
    g1 = data1.source
    g2 = data2.source
    if g1 is not None or g2 is not None:
        a = g1 if g1 is not None else 0.0 * data1.u0
        b = g2 if g2 is not None else 0.0 * data2.u0
        denom += base.t_final * norm(a - b, "star") ** 2
    if op1 is not None and op2 is not None and not np.array_equal(op1.columns, op2.columns):
        w = neumann_eigensystem(op1.domain).weights
        mu = neumann_eigensystem(op1.domain).mu
        diff = op1.columns - op2.columns
        # star-norm style weight on each column difference
        nz = mu > 0
        col_sq = (diff[..., nz] ** 2 * (w[nz] / mu[nz])).sum() + diff.reshape(
            op1.mode_count, -1)[:, 0] @ diff.reshape(op1.mode_count, -1)[:, 0]
        denom += base.t_final * float(col_sq)
    if denom <= 0:
        raise PreconditionViolated("data distance is zero; the ratio is undefined")

    def _ratio(eps, with_noise):
        d1 = data1 if with_noise else replace(data1, operator=None)
        d2 = data2 if with_noise else replace(data2, operator=None)
        t1 = _run(d1, base, seed if with_noise else None, eps=eps)
        t2 = _run(d2, base, seed if with_noise else None, eps=eps)
        diffs = [x.u - y.u for x, y in zip(t1.states, t2.states)]
        sup_star = max(norm(v, "star") ** 2 for v in diffs)
        sup_h = max(norm(v, "H") ** 2 for v in diffs)
        grad_l2 = _trapz([_grad_sq(v) for v in diffs], t1.times)
        return (sup_star + eps * sup_h + grad_l2) / denom

    if k_cap is None:
        k_cap = 100.0 * _ratio(min(eps_grid), with_noise=False)

    ratios = []
    assertions = []
    for eps in eps_grid:
        r = _ratio(eps, with_noise=op1 is not None)
        ratios.append(r)
        finite = math.isfinite(r)
        assertions.append(Assertion(f"ratio_finite_eps={eps:g}", finite, value=r))
        assertions.append(Assertion(f"ratio_capped_eps={eps:g}",
                                    finite and r <= k_cap, value=r, bound=k_cap))
    assertions.append(_uniformity("ratio_uniform_in_eps", ratios, uniformity_factor))
    return SweepReport(
        variable="eps",
        values=tuple(eps_grid),
        metrics={"ratio": tuple(ratios), "k_cap": (k_cap,) * len(ratios)},
        assertions=tuple(assertions),
    )


def vanishing_viscosity_study(
    data: ProblemData,
    eps_sequence: Sequence[float],
    seed: Optional[int],
    base: SolverConfig,
) -> SweepReport:
    """Distance of viscous runs to the limit run, along decreasing viscosity.

    A trailing eps of exactly 0 is allowed and gives self-distance 0.
    """
    _require_monotone(eps_sequence, "decreasing", "eps sequence")
    if any(e < 0 for e in eps_sequence):
        raise PreconditionViolated("viscosities must be >= 0")
    limit = _run(data, base, seed, eps=0.0)
    dists = []
    sizes = []
    sup_star_sq = []
    for eps in eps_sequence:
        tr = limit if eps == 0.0 else _run(data, base, seed, eps=eps)
        dists.append(path_l2_distance(tr, limit, "V1"))
        sizes.append(eps * sup_norm(tr, "V1"))
        sup_star_sq.append(sup_norm(tr, "star") ** 2)
    assertions = [
        Assertion("distance_decreasing",
                  all(a > b for a, b in zip(dists, dists[1:])),
                  value=dists[-1], bound=dists[0]),
        Assertion("distance_final_tenth", dists[-1] <= 0.1 * dists[0],
                  value=dists[-1], bound=0.1 * dists[0]),
        Assertion("viscous_term_decreasing",
                  all(a > b for a, b in zip(sizes, sizes[1:])),
                  value=sizes[-1], bound=sizes[0]),
        Assertion("viscous_term_final_tenth", sizes[-1] <= 0.1 * sizes[0],
                  value=sizes[-1], bound=0.1 * sizes[0]),
        Assertion("all_finite", all(map(math.isfinite, dists + sizes))),
        _uniformity("sup_star_sq_uniform_in_eps", sup_star_sq, 100.0),
    ]
    return SweepReport(
        variable="eps",
        values=tuple(eps_sequence),
        metrics={
            "v1_distance_to_limit": tuple(dists),
            "eps_weighted_v1_sup": tuple(sizes),
            "sup_star_sq": tuple(sup_star_sq),
        },
        assertions=tuple(assertions),
        distances=tuple(dists),
    )


def yosida_convergence_study(
    data: ProblemData,
    lam_sequence: Sequence[float],
    seed: Optional[int],
    base: SolverConfig,
    uniformity_factor: float = 100.0,
) -> SweepReport:
    """Cauchy behavior in the graph regularization parameter.

    Runs the same data at each lam, reports consecutive pathwise V1
    distances (asserted decreasing) and lam-uniformity of the potential's
    L1(Q) mass and of the conjugate mass.
    """
    _require_monotone(lam_sequence, "decreasing", "lam sequence")
    if any(l <= 0 for l in lam_sequence):
        raise PreconditionViolated("lam values must be positive")
    trajectories = [_run(data, base, seed, lam=l) for l in lam_sequence]
    consec = [path_l2_distance(a, b, "V1")
              for a, b in zip(trajectories, trajectories[1:])]
    w_l1 = []
    xi_l1 = []
    conj_mass = []
    sup_star_sq = []
    for tr in trajectories:
        recs = run_diagnostics(tr)
        ts = tr.times
        w_l1.append(_trapz([r.w_l1 for r in recs], ts))
        xi_l1.append(_trapz([r.xi_l1 for r in recs], ts))
        conj_mass.append(_trapz([r.conjugate_mass for r in recs], ts))
        sup_star_sq.append(sup_norm(tr, "star") ** 2)
    assertions = [
        Assertion("consecutive_v1_distances_decreasing",
                  all(a > b for a, b in zip(consec, consec[1:])),
                  value=consec[-1] if consec else 0.0,
                  bound=consec[0] if consec else 0.0),
        _uniformity("w_l1_uniform", w_l1, uniformity_factor),
        _uniformity("conjugate_mass_uniform", conj_mass, uniformity_factor),
        _uniformity("sup_star_sq_uniform_in_lam", sup_star_sq, uniformity_factor),
        Assertion("all_finite", all(map(math.isfinite, consec + w_l1 + xi_l1 + conj_mass))),
    ]
    return SweepReport(
        variable="lam",
        values=tuple(lam_sequence),
        metrics={
            "consecutive_v1_distance": tuple(consec),
            "w_l1_mass": tuple(w_l1),
            "xi_l1_mass": tuple(xi_l1),
            "conjugate_mass": tuple(conj_mass),
            "sup_star_sq": tuple(sup_star_sq),
        },
        assertions=tuple(assertions),
        distances=tuple(consec),
    )


def member_seed(seed: int, member: int) -> int:
    """Deterministic per-member seed, independent of execution order."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(member,))
    return int(ss.generate_state(1, np.uint64)[0])


def ensemble_expectations(
    data: ProblemData,
    base: SolverConfig,
    members: int,
    seed: int,
    grid: Optional[Sequence[tuple]] = None,
    order: Optional[Sequence[int]] = None,
    uniformity_factor: float = 100.0,
) -> SweepReport:
    """Monte Carlo estimates of the pathwise energies with standard errors.

    Members run independently (any execution order gives identical output:
    results are stored by member index and reduced in index order).  ``grid``
    is an optional list of (eps, lam) pairs over which uniformity of the
    estimates is reported.
    """
    if members < 8:
        raise PreconditionViolated("need at least 8 ensemble members")
    if order is None:
        order = range(members)
    order = list(order)
    if sorted(order) != list(range(members)):
        raise PreconditionViolated("order must be a permutation of the members")
    if grid is None:
        grid = ((base.eps, base.lam),)

    names = ("sup_star_sq", "grad_l2_sq", "well_mass_path", "conjugate_mass_path")
    mc_mean: dict = {}
    mc_stderr: dict = {}
    assertions = []
    per_point_means: dict = {n: [] for n in names}
    for eps, lam in grid:
        rows = np.empty((members, len(names)))
        for m in order:
            tr = _run(data, base, member_seed(seed, m), eps=eps, lam=lam)
            recs = run_diagnostics(tr)
            ts = tr.times
            rows[m] = (
                max(r.star_centered**2 + r.mean_u**2 for r in recs),
                _trapz([2.0 * r.gradient_energy for r in recs], ts),
                _trapz([r.well_mass for r in recs], ts),
                _trapz([r.conjugate_mass for r in recs], ts),
            )
        mean = rows.mean(axis=0)
        stderr = rows.std(axis=0, ddof=1) / math.sqrt(members)
        key = f"eps={eps:g},lam={lam:g}"
        for j, n in enumerate(names):
            mc_mean[f"{n}[{key}]"] = float(mean[j])
            mc_stderr[f"{n}[{key}]"] = float(stderr[j])
            per_point_means[n].append(float(mean[j]))
        assertions.append(Assertion(f"estimates_finite[{key}]",
                                    bool(np.isfinite(rows).all())))
    if len(grid) > 1:
        for n in names:
            assertions.append(_uniformity(f"{n}_uniform_over_grid",
                                          per_point_means[n], uniformity_factor))
    return SweepReport(
        variable="(eps,lam)",
        values=tuple(tuple(p) for p in grid),
        metrics={},
        assertions=tuple(assertions),
        mc_mean=mc_mean,
        mc_stderr=mc_stderr,
        members=members,
    )


# ---------------------------------------------------------------------------
# regularity monitoring


def _smoothed_w_norms(traj: Trajectory):
    """sup_t |grad R w|_H and the eps-weighted L2-in-time |Lap R w|_H,
    with R the Helmholtz inverse at the run's viscosity."""
    eps = traj.config.eps
    sup_grad = 0.0
    lap_sq = []
    for s in traj.states:
        eig = neumann_eigensystem(s.w.domain)
        c = s.w.coeffs / (1.0 + eps * eig.mu)
        sup_grad = max(sup_grad, math.sqrt(float(np.sum(eig.weights * eig.mu * c**2))))
        lap_sq.append(float(np.sum(eig.weights * eig.mu**2 * c**2)))
    return sup_grad, eps * math.sqrt(_trapz(lap_sq, traj.times))


def regularity_monitor(traj: Trajectory, growth: Optional[str] = None) -> SweepReport:
    """Path norms that stay bounded for smooth data, on one trajectory.

    With growth="cubic" also checks the pointwise-cubic bound
    |xi|_{L2(0,T;H)} <= 2 * C * (1 + sup_t |u|_V1^3) where C is assembled
    from the measured V1 -> L6 embedding constant of the trajectory itself.
    """
    cfg = traj.config
    ts = traj.times
    sup_grad_w, eps_lap_w = _smoothed_w_norms(traj)
    xi_l2 = math.sqrt(_trapz([norm(s.xi, "H") ** 2 for s in traj.states], ts))
    xi_grad_l2 = math.sqrt(_trapz([_grad_sq(s.xi) for s in traj.states], ts))
    v3_path = math.sqrt(_trapz([norm(s.u, "V3") ** 2 for s in traj.states], ts))
    metrics = {
        "sup_grad_smoothed_w": (sup_grad_w,),
        "eps_lap_smoothed_w_l2": (eps_lap_w,),
        "xi_l2": (xi_l2,),
        "xi_grad_l2": (xi_grad_l2,),
        "v3_path": (v3_path,),
    }
    assertions = [Assertion("regularity_norms_finite",
                            all(math.isfinite(v[0]) for v in metrics.values()))]
    if growth == "cubic":
        if polynomial_degree(cfg.graph) != 3:
            raise GrowthMismatch(
                f"cubic growth bound requested for graph {cfg.graph.name!r} "
                f"with growth {cfg.graph.growth!r}"
            )
        emb = 0.0
        sup_v1 = 0.0
        for s in traj.states:
            v1 = norm(s.u, "V1")
            sup_v1 = max(sup_v1, v1)
            if v1 > 0:
                grid = to_grid(s.u)
                l6 = integrate_grid(s.u.domain, grid**6) ** (1.0 / 6.0)
                emb = max(emb, l6 / v1)
        domain = traj.states[0].u.domain
        T = float(ts[-1])
        c_measured = math.sqrt(T) * max(math.sqrt(domain.volume), emb**3)
        bound = 2.0 * c_measured * (1.0 + sup_v1**3)
        metrics["embedding_constant"] = (emb,)
        metrics["cubic_bound"] = (bound,)
        assertions.append(Assertion("xi_cubic_growth_bound", xi_l2 <= bound,
                                    value=xi_l2, bound=bound))
    return SweepReport(
        variable="eps",
        values=(cfg.eps,),
        metrics=metrics,
        assertions=tuple(assertions),
    )


def regularity_study(
    data: ProblemData,
    eps_grid: Sequence[float],
    seed: Optional[int],
    base: SolverConfig,
    growth: Optional[str] = None,
    uniformity_factor: float = 10.0,
) -> SweepReport:
    """Regularity monitor across a viscosity grid, with uniformity checks."""
    _require_monotone(eps_grid, "increasing", "eps grid")
    metrics: dict = {}
    assertions = []
    for eps in eps_grid:
        tr = _run(data, base, seed, eps=eps)
        rep = regularity_monitor(tr, growth=growth)
        for k, v in rep.metrics.items():
            metrics.setdefault(k, []).append(v[0])
        assertions.extend(
            Assertion(f"{a.name}[eps={eps:g}]", a.passed, a.value, a.bound)
            for a in rep.assertions
        )
    for key in ("sup_grad_smoothed_w", "xi_l2"):
        assertions.append(_uniformity(f"{key}_uniform_in_eps", metrics[key],
                                      uniformity_factor))
    return SweepReport(
        variable="eps",
        values=tuple(eps_grid),
        metrics={k: tuple(v) for k, v in metrics.items()},
        assertions=tuple(assertions),
    )

"""
Truncated cylindrical Wiener process and diffusion operators.

The driving noise is W(t) = sum_{k<K} W_k(t) e_k with independent scalar
Brownian motions W_k.  Increments are drawn from a counter-based generator
(Philox) keyed by (seed, step): mode k is the k-th draw of the step's block,
so every increment is a pure function of (seed, step, mode) and paths can be
re-materialized in any order, refined, or shared across solver runs.

A diffusion operator maps the K noise directions to spatial fields.  The
default additive operator sends e_k to sigma * (1 + mu_k)^{-rho} times the
k-th cosine basis function (eigenvalue-sorted order); the multiplicative
variant modulates the same profiles by the clamped state and removes the
spatial mean, so multiplicative forcing never moves the mean of the solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spectral import (
    Domain,
    SpectralField,
    from_grid,
    neumann_eigensystem,
    to_grid,
)

__all__ = [
    "DimensionMismatch",
    "KindMismatch",
    "WienerProcess",
    "DiffusionOperator",
    "NoiseModel",
    "diffusion_operator",
    "smooth",
    "hs_norm",
    "apply_diffusion",
    "integral_ledger",
    "increment_table",
    "coarsen_increments",
]


class DimensionMismatch(ValueError):
    """Mode counts or domains of noise objects do not line up."""


class KindMismatch(TypeError):
    """Operation only defined for the other diffusion kind."""


class WienerProcess:
    """K independent scalar Brownian motions with counter-based sampling.

    ``increments_at(step, dt)`` is stateless and reproducible: the draw for
    (seed, step, mode) never depends on sampling order.  ``sample_increment``
    is the stateful convenience wrapper that walks the step counter.
    """

    def __init__(self, mode_count: int, seed: int):
        if mode_count < 1:
            raise ValueError("mode_count must be >= 1")
        if seed < 0:
            raise ValueError("seed must be >= 0")
        self.mode_count = int(mode_count)
        self.seed = int(seed)
        self._step = 0
        self.last_increments: Optional[np.ndarray] = None

    def increments_at(self, step: int, dt: float) -> np.ndarray:
        """Gaussian increments with variance dt for one step, shape (K,)."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        bg = np.random.Philox(key=self.seed, counter=[0, 0, 0, int(step)])
        z = np.random.Generator(bg).standard_normal(self.mode_count)
        out = z * math.sqrt(dt)
        self.last_increments = out
        return out

    def sample_increment(self, dt: float) -> np.ndarray:
        out = self.increments_at(self._step, dt)
        self._step += 1
        return out

    def rewind(self):
        self._step = 0


def increment_table(process: WienerProcess, n_steps: int, dt: float) -> np.ndarray:
    """All increments of a path as an (n_steps, K) array."""
    return np.stack([process.increments_at(s, dt) for s in range(n_steps)])


def coarsen_increments(table: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive groups of rows: the same Brownian path at factor*dt."""
    n, K = table.shape
    if n % factor != 0:
        raise ValueError("number of steps must be divisible by the coarsening factor")
    return table.reshape(n // factor, factor, K).sum(axis=1)


@dataclass(frozen=True, eq=False)
class DiffusionOperator:
    """Linear (or state-modulated) map from noise modes to spatial fields.

    columns[k] holds the coefficients of the image of the k-th noise
    direction.  For kind "multiplicative" the image at state v is
    clamp(v) * column_k minus its spatial mean, with clamp(v) the truncation
    of v to [-clamp_bound, clamp_bound].
    """

    domain: Domain
    kind: str
    columns: np.ndarray  # (K, *modes)
    mean_zero: bool
    clamp_bound: float
    smoothing_level: int
    lipschitz: float

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        cols = cols.copy()
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def mode_count(self) -> int:
        return self.columns.shape[0]


def _column_sup_norms(domain: Domain, columns: np.ndarray) -> np.ndarray:
    # sup norms estimated on the dealiased grid, batched over the lead axis
    vals = columns.copy()
    from .spectral import _synthesis  # local: batched synthesis on padded axes

    for ax, m in enumerate(domain.modes):
        pad = [(0, 0)] * vals.ndim
        pad[ax + 1] = (0, m)
        vals = np.pad(vals, pad)
        vals = _synthesis(vals, ax + 1)
    return np.abs(vals).max(axis=tuple(range(1, vals.ndim)))


def diffusion_operator(
    domain: Domain,
    mode_count: int,
    kind: str = "additive",
    sigma: float = 0.1,
    rho: float = 1.0,
    mean_zero: bool = False,
    clamp_bound: float = 1.0,
) -> DiffusionOperator:
    """Default operator: e_k -> sigma*(1 + mu_k)^{-rho} * (k-th basis function).

    Modes are taken in eigenvalue-sorted order, so k = 0 is the constant
    function unless mean_zero is set (which zeroes constant-mode content of
    every column).
    """
    if kind not in ("additive", "multiplicative"):
        raise ValueError(f"unknown diffusion kind {kind!r}")
    total = int(np.prod(domain.modes))
    if not 1 <= mode_count <= total:
        raise DimensionMismatch(
            f"mode_count must be in [1, {total}] for this truncation, got {mode_count}"
        )
    if clamp_bound <= 0:
        raise ValueError("clamp_bound must be positive")
    eig = neumann_eigensystem(domain)
    cols = np.zeros((mode_count,) + domain.modes)
    flat = cols.reshape(mode_count, -1)
    mu_flat = eig.mu.ravel()
    for k in range(mode_count):
        idx = eig.order[k]
        flat[k, idx] = sigma * (1.0 + mu_flat[idx]) ** (-rho)
    if kind == "multiplicative" or mean_zero:
        flat[:, eig.order[0]] = 0.0
        mean_zero = True if kind == "multiplicative" else mean_zero
    if kind == "multiplicative":
        sup = _column_sup_norms(domain, cols)
        lipschitz = float(np.sqrt(np.sum(sup**2)))  # clamp slope is 1
    else:
        lipschitz = 0.0
    return DiffusionOperator(
        domain=domain,
        kind=kind,
        columns=cols,
        mean_zero=bool(mean_zero),
        clamp_bound=float(clamp_bound),
        smoothing_level=0,
        lipschitz=lipschitz,
    )


def smooth(op: DiffusionOperator, level: int) -> DiffusionOperator:
    """Elliptically smoothed operator: columns hit by (I - Laplacian/level)^{-3}."""
    if level < 1:
        raise ValueError("smoothing level must be a positive integer")
    eig = neumann_eigensystem(op.domain)
    factor = (1.0 + eig.mu / float(level)) ** (-3)
    cols = op.columns * factor[None, ...]
    if op.kind == "multiplicative":
        sup = _column_sup_norms(op.domain, cols)
        lip = float(np.sqrt(np.sum(sup**2)))
    else:
        lip = 0.0
    return DiffusionOperator(
        domain=op.domain,
        kind=op.kind,
        columns=cols,
        mean_zero=op.mean_zero,
        clamp_bound=op.clamp_bound,
        smoothing_level=int(level),
        lipschitz=lip,
    )


def hs_norm(op: DiffusionOperator) -> float:
    """Hilbert-Schmidt norm sqrt(sum_k |B e_k|_H^2) of the base columns."""
    w = neumann_eigensystem(op.domain).weights
    return float(np.sqrt(np.sum(w[None, ...] * op.columns**2)))


def _check_increment(op: DiffusionOperator, dW: np.ndarray) -> np.ndarray:
    dW = np.asarray(dW, dtype=float)
    if dW.shape != (op.mode_count,):
        raise DimensionMismatch(
            f"increment has shape {dW.shape}, operator expects ({op.mode_count},)"
        )
    return dW


def apply_diffusion(
    op: DiffusionOperator, state: Optional[SpectralField], dW: np.ndarray
) -> SpectralField:
    """Field B dW (additive) or B(state) dW (multiplicative)."""
    dW = _check_increment(op, dW)
    profile = np.tensordot(dW, op.columns, axes=(0, 0))
    if op.kind == "additive":
        return SpectralField(op.domain, profile)
    if state is None:
        raise KindMismatch("multiplicative diffusion needs the current state")
    if state.domain != op.domain:
        raise DimensionMismatch("state domain does not match operator domain")
    M = op.clamp_bound
    clamped = np.clip(to_grid(state), -M, M)
    pgrid = to_grid(SpectralField(op.domain, profile))
    out = from_grid(op.domain, clamped * pgrid)
    c = out.coeffs.copy()
    c.flat[0] = 0.0  # multiplicative forcing is mean-free by construction
    return SpectralField(op.domain, c)


def columns_at(op: DiffusionOperator, state: SpectralField) -> np.ndarray:
    """Coefficients of B(state) e_k for every k (multiplicative only)."""
    if op.kind != "multiplicative":
        raise KindMismatch("columns_at is defined for multiplicative operators")
    M = op.clamp_bound
    clamped = np.clip(to_grid(state), -M, M)
    out = np.empty_like(op.columns)
    for k in range(op.mode_count):
        col = SpectralField(op.domain, op.columns[k])
        f = from_grid(op.domain, clamped * to_grid(col))
        c = f.coeffs.copy()
        c.flat[0] = 0.0
        out[k] = c
    return out


def integral_ledger(op: DiffusionOperator, process: WienerProcess, n_steps: int, dt: float) -> SpectralField:
    """Accumulated stochastic integral B W(t_n) for additive operators.

    Sums apply_diffusion over steps 0..n_steps-1 in order, which is exactly
    the bookkeeping the solver performs; the mean of the result tracks the
    mean shift injected into the solution.
    """
    if op.kind != "additive":
        raise KindMismatch("the integral ledger is defined for additive noise")
    total = np.zeros(op.domain.modes)
    for s in range(n_steps):
        total = total + apply_diffusion(op, None, process.increments_at(s, dt)).coeffs
    return SpectralField(op.domain, total)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """A Wiener process wired to a diffusion operator."""

    process: WienerProcess
    operator: DiffusionOperator

    def __post_init__(self):
        if self.process.mode_count != self.operator.mode_count:
            raise DimensionMismatch(
                f"process has {self.process.mode_count} modes, "
                f"operator expects {self.operator.mode_count}"
            )

    def increment_field(self, state: Optional[SpectralField], step: int, dt: float):
        """(noise field, raw increments) for one step; state used only if multiplicative."""
        dW = self.process.increments_at(step, dt)
        arg = state if self.operator.kind == "multiplicative" else None
        return apply_diffusion(self.operator, arg, dW), dW

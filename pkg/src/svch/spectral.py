"""
Neumann cosine spectral calculus on axis-aligned boxes.

Fields are truncated expansions in the cosine basis

    phi_k(x) = prod_i cos(k_i pi x_i / L_i),        k_i = 0 .. m_i - 1,

which are exactly the Neumann eigenfunctions of the Laplacian on the box,
with eigenvalues mu_k = sum_i (k_i pi / L_i)^2.  Every linear operator used
here (Laplacian, its mean-free inverse, the Helmholtz-type inverse
(I - eps*Laplacian)^{-1}) is diagonal in this basis, so the module is mostly
bookkeeping: eigenvalues, Parseval weights, and fast transforms between
coefficients and a midpoint collocation grid.

Conventions
-----------
* The coefficient of the constant mode equals the spatial mean of the field.
* ``weights[k] = prod_i L_i * (1 if k_i == 0 else 1/2)`` so that
  ``norm(v, "H")**2 == sum(weights * coeffs**2)`` (Parseval).
* The collocation grid along axis i has ``factor * m_i`` midpoints
  ``x_j = (j + 1/2) * L_i / n_i``; the default factor 2 is the dealiasing
  margin used for pointwise nonlinearities.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft

__all__ = [
    "NonZeroMean",
    "Domain",
    "EigenSystem",
    "SpectralField",
    "neumann_eigensystem",
    "field_from_coeffs",
    "basis_field",
    "zero_field",
    "field_from_function",
    "collocation_points",
    "to_grid",
    "from_grid",
    "integrate_grid",
    "apply_pointwise",
    "apply_laplacian",
    "apply_inverse_laplacian",
    "apply_helmholtz_inverse",
    "star_potential",
    "star_energy",
    "inner",
    "norm",
]

MEAN_TOL = 1e-13


class NonZeroMean(ValueError):
    """Raised when a mean-free field is required but the mean is not ~0."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box (0, L_1) x ... x (0, L_d) with a cosine truncation.

    Parameters
    ----------
    lengths : tuple of float
        Side lengths, one per axis.  Only d in {1, 2} is supported.
    modes : tuple of int
        Number of retained cosine modes per axis, each >= 2.
    """

    lengths: tuple[float, ...]
    modes: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(float(L) for L in self.lengths)
        modes = tuple(int(m) for m in self.modes)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "modes", modes)
        if len(lengths) not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {len(lengths)}")
        if len(modes) != len(lengths):
            raise ValueError("modes and lengths must have equal length")
        if any(L <= 0 for L in lengths):
            raise ValueError("side lengths must be positive")
        if any(m < 2 for m in modes):
            raise ValueError("need at least 2 modes per axis")

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues and Parseval weights of the truncated cosine basis.

    ``mu`` and ``weights`` have the same shape as coefficient arrays on the
    domain.  ``order`` lists flat mode indices sorted by (eigenvalue, flat
    index); ``order[0]`` is always the constant mode.
    """

    domain: Domain
    mu: np.ndarray
    weights: np.ndarray
    order: tuple[int, ...]


@functools.lru_cache(maxsize=None)
def neumann_eigensystem(domain: Domain) -> EigenSystem:
    """Eigenvalues mu_k = sum_i (k_i pi / L_i)^2, ascending along each axis."""
    axis_mu = []
    axis_w = []
    for L, m in zip(domain.lengths, domain.modes):
        k = np.arange(m)
        axis_mu.append((k * np.pi / L) ** 2)
        w = np.full(m, L / 2.0)
        w[0] = L
        axis_w.append(w)
    if domain.dimension == 1:
        mu = axis_mu[0]
        weights = axis_w[0]
    else:
        mu = axis_mu[0][:, None] + axis_mu[1][None, :]
        weights = axis_w[0][:, None] * axis_w[1][None, :]
    flat = mu.ravel()
    # stable sort: ties broken by flat index, constant mode first
    order = tuple(int(i) for i in np.argsort(flat, kind="stable"))
    mu.setflags(write=False)
    weights.setflags(write=False)
    return EigenSystem(domain=domain, mu=mu, weights=weights, order=order)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable field given by its cosine coefficients (shape = domain.modes)."""

    domain: Domain
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != self.domain.modes:
            raise ValueError(
                f"coefficient shape {c.shape} does not match modes {self.domain.modes}"
            )
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def mean(self) -> float:
        return float(self.coeffs.flat[0])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_domain(self, other)
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_domain(self, other)
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.domain, -self.coeffs)

    def __rmul__(self, a: float) -> "SpectralField":
        return SpectralField(self.domain, float(a) * self.coeffs)

    __mul__ = __rmul__


def _check_same_domain(u: SpectralField, v: SpectralField):
    if u.domain != v.domain:
        raise ValueError("fields live on different domains")


def field_from_coeffs(domain: Domain, coeffs) -> SpectralField:
    return SpectralField(domain, np.asarray(coeffs, dtype=float))


def zero_field(domain: Domain) -> SpectralField:
    return SpectralField(domain, np.zeros(domain.modes))


def basis_field(domain: Domain, flat_index: int, amplitude: float = 1.0) -> SpectralField:
    """Single basis function, indexed in the eigenvalue-sorted flat order."""
    eig = neumann_eigensystem(domain)
    c = np.zeros(domain.modes)
    c.flat[eig.order[flat_index]] = amplitude
    return SpectralField(domain, c)


# ---------------------------------------------------------------------------
# transforms


def collocation_points(domain: Domain, factor: int = 2) -> tuple[np.ndarray, ...]:
    """Midpoint grid coordinates, one meshgrid array per axis."""
    axes = []
    for L, m in zip(domain.lengths, domain.modes):
        n = factor * m
        axes.append((np.arange(n) + 0.5) * L / n)
    if domain.dimension == 1:
        return (axes[0],)
    return tuple(np.meshgrid(axes[0], axes[1], indexing="ij"))


def _analysis(values: np.ndarray, axis: int) -> np.ndarray:
    # grid -> coefficients along one axis (midpoint DCT-II, our normalization)
    n = values.shape[axis]
    out = sfft.dct(values, type=2, axis=axis) / n
    sl = [slice(None)] * values.ndim
    sl[axis] = slice(0, 1)
    out[tuple(sl)] *= 0.5
    return out

def _synthesis(coeffs: np.ndarray, axis: int) -> np.ndarray:
    # coefficients -> values on the midpoint grid of matching size
    x = np.array(coeffs, dtype=float)
    sl = [slice(None)] * x.ndim
    sl[axis] = slice(1, None)
    x[tuple(sl)] *= 0.5
    return sfft.dct(x, type=3, axis=axis)


def to_grid(field: SpectralField, factor: int = 2) -> np.ndarray:
    """Evaluate the field on the midpoint collocation grid (zero-padded)."""
    c = field.coeffs
    for ax, m in enumerate(field.domain.modes):
        pad = [(0, 0)] * c.ndim
        pad[ax] = (0, factor * m - m)
        c = np.pad(c, pad)
    vals = c
    for ax in range(vals.ndim):
        vals = _synthesis(vals, ax)
    return vals


def from_grid(domain: Domain, values: np.ndarray) -> SpectralField:
    """Project midpoint-grid values onto the truncated basis.

    The grid must have factor*m_i points along axis i for an integer factor;
    modes above the truncation are discarded.
    """
    vals = np.asarray(values, dtype=float)
    if vals.ndim != domain.dimension:
        raise ValueError("grid rank does not match domain dimension")
    for ax, m in enumerate(domain.modes):
        if vals.shape[ax] % m != 0 or vals.shape[ax] < m:
            raise ValueError("grid size must be an integer multiple of the mode count")
        vals = _analysis(vals, ax)
        sl = [slice(None)] * vals.ndim
        sl[ax] = slice(0, m)
        vals = vals[tuple(sl)]
    return SpectralField(domain, vals)


def integrate_grid(domain: Domain, values: np.ndarray) -> float:
    """Quadrature of grid values (exact for resolved cosine modes)."""
    return float(values.sum() * domain.volume / values.size)


def field_from_function(domain: Domain, fn: Callable, factor: int = 2) -> SpectralField:
    """Sample ``fn`` on the collocation grid and project onto the basis."""
    pts = collocation_points(domain, factor)
    return from_grid(domain, fn(*pts))


def apply_pointwise(field: SpectralField, f: Callable, factor: int = 2) -> SpectralField:
    """Pseudo-spectral application of a scalar function f to a field.

    Evaluates f on the dealiased collocation grid and projects back; this is
    the single nonlinearity route used by the time stepper.
    """
    return from_grid(field.domain, f(to_grid(field, factor)))


# ---------------------------------------------------------------------------
# diagonal operators


def apply_laplacian(v: SpectralField) -> SpectralField:
    eig = neumann_eigensystem(v.domain)
    return SpectralField(v.domain, -eig.mu * v.coeffs)


def apply_inverse_laplacian(v: SpectralField) -> SpectralField:
    """Mean-free inverse of the Neumann Laplacian.

    Requires a mean-zero input (tolerance 1e-13 on the constant coefficient);
    the output is mean-zero as well.
    """
    if abs(v.mean) > MEAN_TOL:
        raise NonZeroMean(f"inverse Laplacian needs a mean-zero field, mean={v.mean:g}")
    eig = neumann_eigensystem(v.domain)
    c = np.zeros_like(v.coeffs)
    nz = eig.mu > 0
    # N inverts -Delta:  (-Delta) N v = v,  so (N v)_k = v_k / mu_k
    c[nz] = v.coeffs[nz] / eig.mu[nz]
    return SpectralField(v.domain, c)


def apply_helmholtz_inverse(v: SpectralField, eps: float) -> SpectralField:
    """(I - eps*Laplacian)^{-1}; identity for eps = 0, preserves the mean."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0:
        return v
    eig = neumann_eigensystem(v.domain)
    return SpectralField(v.domain, v.coeffs / (1.0 + eps * eig.mu))


def star_potential(v: SpectralField, eps: float = 0.0) -> SpectralField:
    """Mean-free inverse Laplacian of the Helmholtz-smoothed fluctuation.

    phi = N (I - eps*Laplacian)^{-1} (v - mean(v)); pairing v against phi
    gives twice ``star_energy(v, eps)``.
    """
    eig = neumann_eigensystem(v.domain)
    c = np.zeros_like(v.coeffs)
    nz = eig.mu > 0
    c[nz] = v.coeffs[nz] / ((1.0 + eps * eig.mu[nz]) * eig.mu[nz])
    return SpectralField(v.domain, c)


def star_energy(v: SpectralField, eps: float = 0.0) -> float:
    """Quadratic energy generating the star norm, with eps-viscous weight.

    0.5*|grad N R(v - v_D)|_H^2 + 0.5*eps*|R(v - v_D)|_H^2 with
    R = (I - eps*Laplacian)^{-1}.  Always >= 0.
    """
    eig = neumann_eigensystem(v.domain)
    nz = eig.mu > 0
    c = v.coeffs[nz]
    mu = eig.mu[nz]
    w = eig.weights[nz]
    r = 1.0 + eps * mu
    return float(0.5 * np.sum(w * c * c * (1.0 / (mu * r * r) + eps / (r * r))))


def inner(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product via Parseval."""
    _check_same_domain(u, v)
    w = neumann_eigensystem(u.domain).weights
    return float(np.sum(w * u.coeffs * v.coeffs))


def norm(v: SpectralField, kind: str = "H", eps: float = 0.0) -> float:
    """Norms of the truncated field.

    kind:
      "H"       L2 norm (Parseval)
      "V1"      sqrt(mean^2 + |grad v|_H^2)
      "V2"      sqrt(|v|_H^2 + |Laplacian v|_H^2)
      "V3"      sqrt(|v|_H^2 + |grad Laplacian v|_H^2)
      "star"    sqrt(|grad N(v - v_D)|_H^2 + v_D^2)
      "one_eps" sqrt(|v|_H^2 + eps*|grad v|_H^2)
    """
    eig = neumann_eigensystem(v.domain)
    c2 = v.coeffs**2
    w = eig.weights
    mu = eig.mu
    if kind == "H":
        val = np.sum(w * c2)
    elif kind == "V1":
        val = v.mean**2 + np.sum(w * mu * c2)
    elif kind == "V2":
        val = np.sum(w * (1.0 + mu**2) * c2)
    elif kind == "V3":
        val = np.sum(w * (1.0 + mu**3) * c2)
    elif kind == "star":
        nz = mu > 0
        val = v.mean**2 + np.sum(w[nz] * c2[nz] / mu[nz])
    elif kind == "one_eps":
        val = np.sum(w * (1.0 + eps * mu) * c2)
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    return float(np.sqrt(val))

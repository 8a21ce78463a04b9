"""Sine eigenbasis of the clamped-ends Laplacian on an interval.

Everything downstream (modal ODEs, energy audits, convergence studies) is
built on the orthonormal eigenpairs of -u'' = lambda*u with u(a) = u(b) = 0:

    e_i(x) = sqrt(2/L) * sin(i*pi*(x - a)/L),   lambda_i = (i*pi/L)**2

Because e_i'' = -lambda_i*e_i and e_i'''' = lambda_i**2*e_i, the L2, H2*, and
H4* norms of a truncated expansion are plain weighted sums of squared
coefficients, which is what makes the estimate auditors exact.

All objects here are immutable after construction and safe for unrestricted
concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

Space = Literal["L2", "H2star", "H4star"]

_SPACES = ("L2", "H2star", "H4star")


@dataclass(frozen=True)
class Interval:
    """Open interval (a, b) the beam occupies."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"interval endpoints must be finite, got ({self.a}, {self.b})")
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b, got ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class EigenBasis:
    """First k orthonormal sine eigenfunctions on an interval.

    Attributes:
        interval: the spatial domain (a, b).
        k: number of retained modes.
        lambdas: eigenvalues lambda_i = (i*pi/L)**2, strictly increasing, shape (k,).
        norm_factor: sqrt(2/L), the L2 normalization of each mode.
    """

    interval: Interval
    k: int
    lambdas: np.ndarray
    norm_factor: float


def make_basis(interval: Interval, k: int) -> EigenBasis:
    """Build the k-mode eigenbasis on the given interval.

    Args:
        interval: spatial domain.
        k: mode count, at least 1.

    Returns:
        EigenBasis with lambdas[i-1] = (i*pi/L)**2 for i = 1..k.
    """
    if k < 1:
        raise ValueError(f"mode count k must be >= 1, got {k}")
    length = interval.length
    modes = np.arange(1, k + 1, dtype=float)
    lambdas = (modes * np.pi / length) ** 2
    return EigenBasis(interval=interval, k=k, lambdas=lambdas, norm_factor=math.sqrt(2.0 / length))


def eval_eigenfunction(basis: EigenBasis, i: int, x, deriv_order: int = 0):
    """Evaluate the i-th eigenfunction (1-based) or one of its derivatives.

    deriv_order 2 returns -lambda_i*e_i(x) and deriv_order 4 returns
    lambda_i**2*e_i(x); odd orders are cosine-shaped.

    Args:
        x: scalar or ndarray of points in [a, b].
        deriv_order: spatial derivative order, 0 through 4.
    """
    if not 1 <= i <= basis.k:
        raise IndexError(f"mode index {i} out of range 1..{basis.k}")
    if deriv_order not in (0, 1, 2, 3, 4):
        raise ValueError(f"deriv_order must be in 0..4, got {deriv_order}")
    omega = i * np.pi / basis.interval.length
    phase = omega * (np.asarray(x, dtype=float) - basis.interval.a)
    scale = basis.norm_factor * omega**deriv_order
    if deriv_order % 2 == 0:
        values = np.sin(phase)
    else:
        values = np.cos(phase)
    sign = -1.0 if deriv_order in (2, 3) else 1.0
    return sign * scale * values


def eigen_table(basis: EigenBasis, xs: np.ndarray, deriv_order: int = 0) -> np.ndarray:
    """Matrix E with E[i-1, q] = (d/dx)^deriv_order e_i(xs[q]), shape (k, len(xs))."""
    xs = np.asarray(xs, dtype=float)
    rows = [eval_eigenfunction(basis, i, xs, deriv_order) for i in range(1, basis.k + 1)]
    return np.asarray(rows)


@dataclass(frozen=True)
class SpectralField:
    """A function in the span of the basis, stored by its L2 coefficients."""

    basis: EigenBasis
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.basis.k,):
            raise ValueError(f"coefficient vector must have shape ({self.basis.k},), got {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)


def norm_sq(field: SpectralField, space: Space) -> float:
    """Squared norm of the field, computed from the spectral sums.

    L2 is sum(c_i**2), H2star weights by lambda_i**2, H4star by lambda_i**4.
    Provided separately from `norm` so estimate auditors can work with the
    squares directly and avoid a lossy sqrt/square round trip.
    """
    c_sq = field.coeffs**2
    if space == "L2":
        return float(np.sum(c_sq))
    if space == "H2star":
        return float(np.sum(field.basis.lambdas**2 * c_sq))
    if space == "H4star":
        return float(np.sum(field.basis.lambdas**4 * c_sq))
    raise ValueError(f"space must be one of {_SPACES}, got {space!r}")


def norm(field: SpectralField, space: Space) -> float:
    """Norm of the field in L2, H2star, or H4star."""
    return math.sqrt(norm_sq(field, space))


def truncate(field: SpectralField, m: int) -> SpectralField:
    """Orthogonal projection onto the first m modes.

    Norms are non-increasing in every space since the discarded coefficients
    enter each spectral sum with nonnegative weight.
    """
    if not 1 <= m <= field.basis.k:
        raise ValueError(f"truncation length m must be in 1..{field.basis.k}, got {m}")
    return SpectralField(make_basis(field.basis.interval, m), field.coeffs[:m].copy())


@dataclass(frozen=True)
class Quadrature:
    """Fixed quadrature rule with nodes interior to the interval."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        """Approximate the integral of a function from its node values."""
        return float(np.dot(self.weights, values))


def composite_gauss_legendre(
    interval: Interval, min_nodes: int = 128, nodes_per_panel: int = 10
) -> Quadrature:
    """Composite Gauss-Legendre rule with at least min_nodes total nodes.

    Equal-width panels, nodes_per_panel Gauss points each; a 10-point panel
    integrates polynomials up to degree 19 exactly.
    """
    if min_nodes < 1:
        raise ValueError(f"min_nodes must be >= 1, got {min_nodes}")
    if nodes_per_panel < 1:
        raise ValueError(f"nodes_per_panel must be >= 1, got {nodes_per_panel}")
    panels = max(1, -(-min_nodes // nodes_per_panel))
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(nodes_per_panel)
    width = interval.length / panels
    edges = interval.a + width * np.arange(panels)
    # map [-1, 1] panel-by-panel; resulting nodes are strictly interior
    nodes = (edges[:, None] + 0.5 * width * (ref_nodes[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * ref_weights, panels)
    return Quadrature(nodes=nodes, weights=weights)


def default_quadrature(basis: EigenBasis) -> Quadrature:
    """Default rule for a basis: at least max(128, 6k) nodes.

    Dense enough that products of up to four retained modes (cubic
    nonlinearity against a test mode) alias below 1e-10.
    """
    return composite_gauss_legendre(basis.interval, min_nodes=max(128, 6 * basis.k))


def analyze(sample_fn: Callable, basis: EigenBasis, quad: Quadrature) -> SpectralField:
    """Project a pointwise function onto the basis by quadrature.

    coeffs[i-1] approximates the L2 inner product of sample_fn with e_i.
    This is the direct path that rebuilds the node table per call; see
    TransformPlan for the precomputed-table path used in hot loops.
    """
    values = np.asarray(sample_fn(quad.nodes), dtype=float)
    if values.shape != quad.nodes.shape:
        values = np.broadcast_to(values, quad.nodes.shape)
    table = eigen_table(basis, quad.nodes)
    return SpectralField(basis, table @ (quad.weights * values))


def synthesize(field: SpectralField, xs, deriv_order: int = 0) -> np.ndarray:
    """Evaluate the field (or a spatial derivative) at the given points."""
    xs = np.asarray(xs, dtype=float)
    table = eigen_table(field.basis, xs, deriv_order)
    return table.T @ field.coeffs


class TransformPlan:
    """Precomputed node tables for repeated transforms at a fixed quadrature.

    The synthesize -> pointwise nonlinearity -> analyze pipeline is the hot
    kernel of the modal solver; this plan caches the eigenfunction values at
    the quadrature nodes and the weight-scaled table so each transform is a
    single matrix-vector product. Results agree with the direct analyze /
    synthesize path to well below 1e-12.

    Immutable after construction; safe to share across concurrent solves.
    """

    def __init__(self, basis: EigenBasis, quad: Quadrature) -> None:
        self.basis = basis
        self.quad = quad
        self.table = eigen_table(basis, quad.nodes)
        self.weighted = self.table * quad.weights

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        """Node values of the expansion with the given coefficients."""
        return self.table.T @ coeffs

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """Quadrature projection of node values onto the basis."""
        return self.weighted @ values

    def project(self, sample_fn: Callable) -> np.ndarray:
        """Coefficients of a pointwise function, via the cached table."""
        values = np.asarray(sample_fn(self.quad.nodes), dtype=float)
        if values.shape != self.quad.nodes.shape:
            values = np.broadcast_to(values, self.quad.nodes.shape)
        return self.coefficients(values)

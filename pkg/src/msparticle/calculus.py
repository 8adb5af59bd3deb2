"""Weighted derivative operators, worldline weights, grids, Lorentz maps.

Two spacetime flavors are implemented, both integer-order derivatives
conjugated by a weight:

* sqrt flavor   (1/sqrt(v)) d [sqrt(v) f]   -- self-adjoint operator
* full flavor   (1/v)       d [v f]         -- acts on bilinear densities

plus the worldline differential with per-direction action weights,
(1/sqrt(w_mu)) d [sqrt(w_mu) x^mu].  The default evaluation route is the
expanded form df + f * dln(weight-root), which stays finite where the
weight itself underflows; the literal product form is kept as a
cross-check only.

Analytic weights carry closed-form derivatives.  Grid fields use
second-order central stencils in the interior and second-order one-sided
stencils at boundaries; differentiated axes need at least 5 nodes.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy

from .errors import DomainError, MsParticleError
from .expressions import compile_expression
from .measure import MeasureWeight, WeightProfile

LORENTZ_TOLERANCE = 1e-12


def minkowski_metric(dimension: int) -> np.ndarray:
    """diag(-, +, ..., +)."""
    eta = np.eye(dimension)
    eta[0, 0] = -1.0
    return eta


def minkowski_dot(a, b) -> float:
    """a_mu b^mu with signature (-, +, ..., +)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(-a[0] * b[0] + np.dot(a[1:], b[1:]))


@dataclass(frozen=True)
class ScalarWeight:
    """Positive differentiable scalar weight with closed-form derivative.

    Used both for worldline action weights w(s) and for single-coordinate
    measure factors lifted onto a worldline.
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    description: str = ""

    def __call__(self, s: float) -> float:
        return float(self.value(s))

    def log_derivative(self, s: float) -> float:
        """w'(s) / w(s)."""
        w = self.value(s)
        if w <= 0.0:
            raise DomainError(f"weight {self.description or 'w'} not positive at s={s}: {w}")
        return float(self.derivative(s)) / float(w)

    def sqrt_log_derivative(self, s: float) -> float:
        """d/ds ln sqrt(w) = w' / (2 w)."""
        return 0.5 * self.log_derivative(s)

    def sqrt(self, s: float) -> float:
        w = self.value(s)
        if w <= 0.0:
            raise DomainError(f"weight {self.description or 'w'} not positive at s={s}: {w}")
        return math.sqrt(w)

    @staticmethod
    def unit() -> "ScalarWeight":
        return ScalarWeight(value=lambda s: 1.0, derivative=lambda s: 0.0, description="1")

    @staticmethod
    def from_expression(source: str) -> "ScalarWeight":
        """Closed-form weight of the parameter s, e.g. "(1+s)^2" or "exp(s)"."""
        expr = compile_expression(source, variables=("s",))
        s_sym = sympy.Symbol("s", real=True)
        dexpr = sympy.diff(expr.sympy_expr, s_sym)
        dfunc = sympy.lambdify(s_sym, dexpr, modules="math")
        value = expr._func
        return ScalarWeight(
            value=lambda s, _f=value: _f(s=s),
            derivative=lambda s, _d=dfunc: float(_d(s)),
            description=source,
        )

    @staticmethod
    def from_profile(profile: WeightProfile, origin: float = 0.0) -> "ScalarWeight":
        """Lift a measure profile onto the worldline: w(s) = v(s - origin)."""
        return ScalarWeight(
            value=lambda s: profile.value(s - origin),
            derivative=lambda s: profile.derivative(s - origin),
            description=f"{profile.kind.value} profile at s-{origin}",
        )


class DerivativeFlavor(enum.Enum):
    SQRT = "sqrt"  # weight sqrt(v); self-adjoint flavor
    FULL = "full"  # weight v; bilinear flavor


@dataclass(frozen=True)
class WeightedOperatorSpec:
    """A derivative flavor bound to its weight source.

    Exactly one of (measure, direction) or worldline_weight must be set.
    """

    flavor: DerivativeFlavor
    measure: MeasureWeight | None = None
    direction: int | None = None
    worldline_weight: ScalarWeight | None = None

    def __post_init__(self) -> None:
        spacetime = self.measure is not None and self.direction is not None
        worldline = self.worldline_weight is not None
        if spacetime == worldline:
            raise ValueError("set either (measure, direction) or worldline_weight")

    def log_factor(self, coordinate: float) -> float:
        """d ln(weight-root)/dx at the differentiated coordinate: ln sqrt(v)
        for the sqrt flavor, ln v for the full flavor."""
        if self.worldline_weight is not None:
            base = self.worldline_weight.sqrt_log_derivative(coordinate)
        else:
            base = self.measure.profiles[self.direction].sqrt_log_derivative(coordinate)
        return base if self.flavor is DerivativeFlavor.SQRT else 2.0 * base

    def weight_root(self, coordinate: float) -> float:
        """sqrt(v) or v, matching the flavor."""
        if self.worldline_weight is not None:
            w = self.worldline_weight(coordinate)
        else:
            w = self.measure.profiles[self.direction].value(coordinate)
        return math.sqrt(w) if self.flavor is DerivativeFlavor.SQRT else w


@dataclass(frozen=True)
class AnalyticFunction:
    """Scalar function of one coordinate with its closed-form derivative."""

    value: Callable[[float], float]
    derivative: Callable[[float], float]

    @staticmethod
    def constant(c: float) -> "AnalyticFunction":
        return AnalyticFunction(value=lambda x: c, derivative=lambda x: 0.0)


def _coordinate_of(spec: WeightedOperatorSpec, x) -> float:
    if spec.worldline_weight is not None:
        return float(np.asarray(x, dtype=float).reshape(()))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(x[spec.direction])


def weighted_derivative(spec: WeightedOperatorSpec, f, x) -> float:
    """Apply the weighted derivative to f at x.

    f is either an AnalyticFunction of the differentiated coordinate or a
    GridField (then x must coincide with an interior node).  Evaluates the
    expanded form df + f * dln(weight-root).
    """
    if isinstance(f, GridField):
        return _weighted_derivative_grid(spec, f, x)
    coord = _coordinate_of(spec, x)
    return float(f.derivative(coord)) + float(f.value(coord)) * spec.log_factor(coord)


def _weighted_derivative_grid(spec: WeightedOperatorSpec, field: "GridField", x) -> float:
    if spec.worldline_weight is not None:
        axis = 0
    else:
        axis = spec.direction
    idx = field.locate(x)
    n = field.grid_shape[axis]
    if not 0 < idx[axis] < n - 1:
        raise DomainError(f"node {idx} is not interior along axis {axis}; no central stencil")
    h = field.spacing[axis]
    up = list(idx)
    dn = list(idx)
    up[axis] += 1
    dn[axis] -= 1
    df = (field.values[tuple(up)] - field.values[tuple(dn)]) / (2.0 * h)
    coord = field.origin[axis] + idx[axis] * h
    return float(df + field.values[idx] * spec.log_factor(coord))


def weighted_derivative_product_form(spec: WeightedOperatorSpec, f: AnalyticFunction, x) -> float:
    """Cross-check route: evaluate (1/W) d(W f) with the explicit product,
    where W is sqrt(v) or v per flavor."""
    coord = _coordinate_of(spec, x)
    w = spec.weight_root(coord)
    dlnw = spec.log_factor(coord)
    # d(W f) = W' f + W f' with W' = W * dlnW
    return (w * dlnw * f.value(coord) + w * f.derivative(coord)) / w


def anisotropic_differential(weights, s: float, x, xdot, mu: int | None = None):
    """Worldline differential with per-direction weights:
    (1/sqrt(w_mu)) d[sqrt(w_mu) x^mu]/ds = dx^mu/ds + (Omega_mu/2) x^mu.

    ``weights`` is an ActionWeights instance (free_particle module); x and
    xdot are D-vectors.  Returns one component when mu is given, else the
    full D-vector.
    """
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    half_omega = weights.half_log_derivatives(s)
    out = xdot + half_omega * x
    if mu is None:
        return out
    return float(out[mu])


# --- Lorentz transformations -------------------------------------------------


def is_lorentz(matrix: np.ndarray, tolerance: float = LORENTZ_TOLERANCE) -> bool:
    """Check Lambda^T eta Lambda = eta within tolerance."""
    matrix = np.asarray(matrix, dtype=float)
    eta = minkowski_metric(matrix.shape[0])
    return bool(np.max(np.abs(matrix.T @ eta @ matrix - eta)) <= tolerance)


def boost_matrix(rapidity: float, axis: int = 1, dimension: int = 2) -> np.ndarray:
    """Boost along a spatial axis, parametrized by rapidity."""
    if not 1 <= axis < dimension:
        raise ValueError("boost axis must be spatial")
    lam = np.eye(dimension)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    lam[0, 0] = ch
    lam[axis, axis] = ch
    lam[0, axis] = -sh
    lam[axis, 0] = -sh
    return lam


def apply_lorentz(matrix: np.ndarray, x, translation=None, tolerance: float = LORENTZ_TOLERANCE):
    """x'^mu = Lambda^mu_nu x^nu (+ a^mu).

    Accepts a spacetime point, an (N, D) array of points, or a Trajectory
    (positions and velocities transform; the translation shifts positions
    only).  Non-Lorentz matrices are rejected.
    """
    matrix = np.asarray(matrix, dtype=float)
    if not is_lorentz(matrix, tolerance):
        raise MsParticleError("matrix does not satisfy Lambda^T eta Lambda = eta")
    a = 0.0 if translation is None else np.asarray(translation, dtype=float)
    if hasattr(x, "x") and hasattr(x, "u"):  # Trajectory
        return dataclasses.replace(
            x, x=x.x @ matrix.T + a, u=x.u @ matrix.T
        )
    x = np.asarray(x, dtype=float)
    return x @ matrix.T + a


# --- Uniform grids ------------------------------------------------------------


@dataclass(frozen=True)
class GridField:
    """Scalar or tensor samples on a uniform grid.

    values has shape grid_shape + component_shape, with the leading
    ``grid_ndim`` axes indexing nodes.  Spacing must be positive and
    differentiated axes need at least 5 nodes for the central stencils.
    """

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    values: np.ndarray
    grid_ndim: int

    def __post_init__(self) -> None:
        if len(self.origin) != self.grid_ndim or len(self.spacing) != self.grid_ndim:
            raise ValueError("origin/spacing must have one entry per grid axis")
        if any(h <= 0.0 for h in self.spacing):
            raise ValueError("grid spacing must be strictly positive")
        if any(n < 2 for n in self.grid_shape):
            raise ValueError("grid axes need at least 2 nodes")

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.values.shape[: self.grid_ndim]

    def axis_coordinates(self, axis: int) -> np.ndarray:
        n = self.grid_shape[axis]
        return self.origin[axis] + self.spacing[axis] * np.arange(n)

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.axis_coordinates(k) for k in range(self.grid_ndim)), indexing="ij")

    def locate(self, point) -> tuple[int, ...]:
        """Index of the node coinciding with a point (within 1e-9 h)."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.size != self.grid_ndim:
            raise DomainError(f"point has {point.size} coordinates, grid has {self.grid_ndim} axes")
        idx = []
        for k, (p, o, h, n) in enumerate(zip(point, self.origin, self.spacing, self.grid_shape)):
            j = round((p - o) / h)
            if not 0 <= j < n or abs(o + j * h - p) > 1e-9 * h:
                raise DomainError(f"point {point} is not a node of the grid (axis {k})")
            idx.append(int(j))
        return tuple(idx)

    def derivative(self, axis: int) -> np.ndarray:
        """Plain second-order derivative along one grid axis (one-sided at
        the boundary)."""
        n = self.grid_shape[axis]
        if n < 5:
            raise DomainError(f"axis {axis} has {n} nodes; need >= 5 for second-order stencils")
        return np.gradient(self.values, self.spacing[axis], axis=axis, edge_order=2)

    def with_values(self, values: np.ndarray) -> "GridField":
        return dataclasses.replace(self, values=values)

    def interior(self, array: np.ndarray | None = None, margin: int = 1) -> np.ndarray:
        """Strip a boundary ring from the grid axes (for residual norms)."""
        array = self.values if array is None else array
        slicer = tuple(slice(margin, -margin) for _ in range(self.grid_ndim))
        return array[slicer]

    def to_csv(self, path) -> None:
        """Flatten to CSV: one row per node, coordinate columns then the
        flattened component columns c0, c1, ..."""
        mesh = self.meshgrid()
        ncomp = int(np.prod(self.values.shape[self.grid_ndim:], dtype=int)) or 1
        flat = self.values.reshape(-1, ncomp)
        header = [f"x{k}" for k in range(self.grid_ndim)] + [f"c{j}" for j in range(ncomp)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            coords = np.stack([m.ravel() for m in mesh], axis=1)
            for row_c, row_v in zip(coords, flat):
                cells = [f"{val:.17g}" for val in row_c] + [f"{val:.17g}" for val in row_v]
                fh.write(",".join(cells) + "\n")


def grid_from_function(
    origin, spacing, shape, func, component_shape: tuple[int, ...] = ()
) -> GridField:
    """Sample func(point) -> scalar/array on a uniform grid."""
    origin = tuple(float(o) for o in np.atleast_1d(origin))
    spacing = tuple(float(h) for h in np.atleast_1d(spacing))
    shape = tuple(int(n) for n in np.atleast_1d(shape))
    values = np.empty(shape + component_shape)
    for idx in np.ndindex(*shape):
        point = np.array([o + h * j for o, h, j in zip(origin, spacing, idx)])
        values[idx] = func(point)
    return GridField(origin=origin, spacing=spacing, values=values, grid_ndim=len(shape))

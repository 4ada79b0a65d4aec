"""P1 finite-element grids on intervals and triangulated rectangles.

Piecewise-linear elements on uniform grids keep every gradient integrand
exact: the gradient of the interpolant is constant per element, so
integrals of ``|grad u|^p`` reduce to weighted sums. Zeroth-order
integrands are handled by a 3-point quadrature per element (Simpson
points in 1D, edge midpoints in 2D), exact for quadratics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDomainError, InvalidResolutionError

__all__ = [
    "DomainSpec",
    "Grid",
    "GridFunction",
    "ElementField",
    "build_grid",
    "interval_grid",
    "rectangle_grid",
    "gradient",
    "integrate",
    "sample_test_function",
    "gridfunction_to_json_dict",
    "gridfunction_from_json_dict",
    "save_gridfunction",
    "load_gridfunction",
]

SAMPLE_STYLES = ("random-nodal", "smooth-mode", "bump")


def fsum(values) -> float:
    """Compensated sum of a float array.

    Deficit quantities downstream are small differences of large
    numbers, so all integral reductions go through here.
    """
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


@dataclass(frozen=True)
class DomainSpec:
    """Interval or axis-aligned rectangle plus per-axis cell counts."""

    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n_cells: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DegenerateDomainError(f"dim must be 1 or 2, got {self.dim}")
        if not (len(self.lo) == len(self.hi) == len(self.n_cells) == self.dim):
            raise DegenerateDomainError("lo/hi/n_cells lengths must match dim")


class Grid:
    """Immutable uniform P1 grid with Dirichlet boundary marking.

    Attributes:
        dim: 1 or 2.
        lo, hi: domain corners.
        n_cells: cells per axis.
        nodes: (N, dim) node coordinates.
        elements: (E, dim+1) node indices per element.
        boundary_mask: (N,) bool, True = Dirichlet node (pinned to 0).
        el_measure: (E,) element lengths/areas, strictly positive.
        el_basis_grads: (E, dim+1, dim) gradients of the local P1 basis.
        qp_basis: (K, dim+1) P1 basis values at the reference quadrature
            points (K = 3).
        qp_weights: (E, K) quadrature weights, summing to el_measure.
    """

    def __init__(self, spec: DomainSpec):
        self.dim = spec.dim
        self.lo = tuple(float(x) for x in spec.lo)
        self.hi = tuple(float(x) for x in spec.hi)
        self.n_cells = tuple(int(n) for n in spec.n_cells)

        for n in self.n_cells:
            if n < 2:
                raise InvalidResolutionError(
                    f"need at least 2 cells per axis, got {self.n_cells}"
                )
        for a, b in zip(self.lo, self.hi):
            if not b > a:
                raise DegenerateDomainError(f"empty axis [{a}, {b}]")

        if self.dim == 1:
            self._build_1d()
        else:
            self._build_2d()

        for arr in (self.nodes, self.elements, self.boundary_mask,
                    self.el_measure, self.el_basis_grads, self.qp_basis,
                    self.qp_weights, self.lumped_weights):
            arr.flags.writeable = False

    def _build_1d(self):
        (a,), (b,), (n,) = self.lo, self.hi, self.n_cells
        x = np.linspace(a, b, n + 1)
        h = (b - a) / n
        self.nodes = x.reshape(-1, 1)
        self.elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        self.boundary_mask = np.zeros(n + 1, dtype=bool)
        self.boundary_mask[[0, n]] = True
        self.el_measure = np.full(n, h)
        grads = np.empty((n, 2, 1))
        grads[:, 0, 0] = -1.0 / h
        grads[:, 1, 0] = 1.0 / h
        self.el_basis_grads = grads
        # Simpson points: left end, midpoint, right end.
        self.qp_basis = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
        ref_w = np.array([1.0, 4.0, 1.0]) / 6.0
        self.qp_weights = self.el_measure[:, None] * ref_w[None, :]
        self._finish()

    def _build_2d(self):
        (ax, ay), (bx, by), (nx, ny) = self.lo, self.hi, self.n_cells
        xs = np.linspace(ax, bx, nx + 1)
        ys = np.linspace(ay, by, ny + 1)
        X, Y = np.meshgrid(xs, ys)  # row-major: index = iy*(nx+1) + ix
        self.nodes = np.column_stack([X.ravel(), Y.ravel()])

        tris = []
        for iy in range(ny):
            for ix in range(nx):
                n00 = iy * (nx + 1) + ix
                n10 = n00 + 1
                n01 = n00 + (nx + 1)
                n11 = n01 + 1
                tris.append((n00, n10, n11))
                tris.append((n00, n11, n01))
        self.elements = np.array(tris, dtype=np.int64)

        mask = np.zeros(len(self.nodes), dtype=bool)
        IX, IY = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
        mask[((IX == 0) | (IX == nx) | (IY == 0) | (IY == ny)).ravel()] = True
        self.boundary_mask = mask

        p0 = self.nodes[self.elements[:, 0]]
        p1 = self.nodes[self.elements[:, 1]]
        p2 = self.nodes[self.elements[:, 2]]
        cross = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
            p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
        self.el_measure = 0.5 * cross
        if np.any(self.el_measure <= 0):
            raise DegenerateDomainError("degenerate triangle in structured split")

        # gradN_i = (y_j - y_k, x_k - x_j) / (2A), (i, j, k) cyclic.
        grads = np.empty((len(self.elements), 3, 2))
        pts = (p0, p1, p2)
        for i in range(3):
            pj, pk = pts[(i + 1) % 3], pts[(i + 2) % 3]
            grads[:, i, 0] = pj[:, 1] - pk[:, 1]
            grads[:, i, 1] = pk[:, 0] - pj[:, 0]
        grads /= (2.0 * self.el_measure)[:, None, None]
        self.el_basis_grads = grads

        # Edge-midpoint rule, exact for quadratics.
        self.qp_basis = np.array([[0.5, 0.5, 0.0],
                                  [0.0, 0.5, 0.5],
                                  [0.5, 0.0, 0.5]])
        self.qp_weights = self.el_measure[:, None] * np.full((1, 3), 1.0 / 3.0)
        self._finish()

    def _finish(self):
        nverts = self.elements.shape[1]
        lumped = np.zeros(len(self.nodes))
        np.add.at(lumped, self.elements.ravel(),
                  np.repeat(self.el_measure / nverts, nverts))
        self.lumped_weights = lumped
        self.free = np.flatnonzero(~self.boundary_mask)
        self.free.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def measure(self) -> float:
        return fsum(self.el_measure)

    def values_at_qp(self, values: np.ndarray) -> np.ndarray:
        """Evaluate the P1 interpolant at the quadrature points, (E, K)."""
        return values[self.elements] @ self.qp_basis.T

    def element_gradients(self, values: np.ndarray) -> np.ndarray:
        """(E, dim) constant gradient of the interpolant per element."""
        return np.einsum("ev,evd->ed", values[self.elements],
                         self.el_basis_grads)

    def element_averages(self, values: np.ndarray) -> np.ndarray:
        return values[self.elements].mean(axis=1)

    def quad(self, qp_values: np.ndarray) -> float:
        """Integrate values given at quadrature points (E, K)."""
        return fsum(self.qp_weights * qp_values)

    def assemble_qp_linear_form(self, qp_density: np.ndarray) -> np.ndarray:
        """Node vector g with g_i = sum_qp w * density * basis_i."""
        out = np.zeros(self.n_nodes)
        contrib = self.qp_weights * qp_density  # (E, K)
        for loc in range(self.elements.shape[1]):
            np.add.at(out, self.elements[:, loc],
                      contrib @ self.qp_basis[:, loc])
        return out

    def assemble_flux_form(self, flux: np.ndarray) -> np.ndarray:
        """Node vector S with S_i = sum_e m_e <flux_e, grad basis_i>."""
        out = np.zeros(self.n_nodes)
        per_vert = np.einsum("evd,ed->ev", self.el_basis_grads, flux)
        per_vert *= self.el_measure[:, None]
        for loc in range(self.elements.shape[1]):
            np.add.at(out, self.elements[:, loc], per_vert[:, loc])
        return out

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "lo": list(self.lo),
            "hi": list(self.hi),
            "n_cells": list(self.n_cells),
            "n_nodes": self.n_nodes,
            "n_elements": self.n_elements,
        }


def build_grid(spec: DomainSpec) -> Grid:
    """Discretize the domain described by ``spec``."""
    return Grid(spec)


def interval_grid(a: float, b: float, n: int) -> Grid:
    return build_grid(DomainSpec(1, (a,), (b,), (n,)))


def rectangle_grid(ax, bx, ay, by, nx, ny) -> Grid:
    return build_grid(DomainSpec(2, (ax, ay), (bx, by), (nx, ny)))


class GridFunction:
    """Nodal values of a discrete Dirichlet function; boundary pinned to 0."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise ValueError(
                f"expected {grid.n_nodes} nodal values, got {values.shape}")
        values[grid.boundary_mask] = 0.0
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def zero(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        pts = grid.nodes
        if grid.dim == 1:
            vals = fn(pts[:, 0])
        else:
            vals = fn(pts[:, 0], pts[:, 1])
        return cls(grid, np.asarray(vals, dtype=float))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def _check(self, other):
        if other.grid is not self.grid:
            raise ValueError("grid mismatch")

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.values), initial=0.0) <= tol)


@dataclass(frozen=True)
class ElementField:
    """Per-element constant data of a P1 function: gradient and average."""

    grid: Grid
    gradients: np.ndarray  # (E, dim)
    averages: np.ndarray   # (E,)

    @property
    def measures(self) -> np.ndarray:
        return self.grid.el_measure


def gradient(u: GridFunction) -> ElementField:
    """Elementwise constant gradient (and average) of the interpolant."""
    g = u.grid
    return ElementField(g, g.element_gradients(u.values),
                        g.element_averages(u.values))


def integrate(grid: Grid, f_elem) -> float:
    """Integrate a per-element constant density: sum f_e * measure(e)."""
    f_elem = np.asarray(f_elem, dtype=float)
    if f_elem.shape != (grid.n_elements,):
        raise ValueError(
            f"expected {grid.n_elements} element values, got {f_elem.shape}")
    return fsum(f_elem * grid.el_measure)


def sample_test_function(grid: Grid, seed: int, style: str = "random-nodal"
                         ) -> GridFunction:
    """Deterministic pseudo-random test function, zero on the boundary.

    Styles: ``random-nodal`` (iid normal at free nodes), ``smooth-mode``
    (random low-frequency sine combination), ``bump`` (Gaussian bump at
    a random interior location).
    """
    if style not in SAMPLE_STYLES:
        raise ValueError(f"unknown style {style!r}, pick one of {SAMPLE_STYLES}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    vals = np.zeros(grid.n_nodes)
    lo = np.array(grid.lo)
    span = np.array(grid.hi) - lo
    xhat = (grid.nodes - lo) / span  # in [0,1]^dim

    if style == "random-nodal":
        vals[grid.free] = rng.standard_normal(len(grid.free))
    elif style == "smooth-mode":
        if grid.dim == 1:
            for k in range(1, 5):
                vals += rng.standard_normal() * np.sin(k * np.pi * xhat[:, 0])
        else:
            for k in range(1, 4):
                for m in range(1, 4):
                    vals += rng.standard_normal() * (
                        np.sin(k * np.pi * xhat[:, 0])
                        * np.sin(m * np.pi * xhat[:, 1]))
    else:  # bump
        center = rng.uniform(0.25, 0.75, size=grid.dim)
        width = rng.uniform(0.08, 0.25)
        r2 = np.sum((xhat - center) ** 2, axis=1)
        vals = np.exp(-r2 / (2.0 * width**2))

    u = GridFunction(grid, vals)
    if u.is_zero():
        raise RuntimeError("sampled function is identically zero")  # pragma: no cover
    return u


SCHEMA_VERSION = 1


def gridfunction_to_json_dict(u: GridFunction) -> dict:
    g = u.grid
    return {
        "schema_version": SCHEMA_VERSION,
        "dim": g.dim,
        "n_cells": list(g.n_cells),
        "corners": [list(g.lo), list(g.hi)],
        "values": u.values.tolist(),
    }


def gridfunction_from_json_dict(d: dict, grid: Grid | None = None) -> GridFunction:
    if grid is None:
        lo, hi = d["corners"]
        grid = build_grid(DomainSpec(int(d["dim"]), tuple(lo), tuple(hi),
                                     tuple(int(n) for n in d["n_cells"])))
    return GridFunction(grid, np.array(d["values"], dtype=float))


def save_gridfunction(u: GridFunction, path) -> None:
    with open(path, "w") as fh:
        json.dump(gridfunction_to_json_dict(u), fh)


def load_gridfunction(path, grid: Grid | None = None) -> GridFunction:
    with open(path) as fh:
        return gridfunction_from_json_dict(json.load(fh), grid)

"""Integral quantities of the quantified Friedrichs framework.

Everything here is a pure function of grid data: the gradient seminorm,
the L^q mass, the Rayleigh quotient, the deficit functional J and its
derivative, the p-Laplacian linearization matrix, the ground-state
weighted norm, the quadratic form Q0, the path families P1/P0, the
remainder density R_p, the projection functional M_l, and the energy E.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBaseError
from .grid import ElementField, Grid, GridFunction, fsum, gradient

__all__ = [
    "Exponents",
    "EigenPair",
    "SPathQuadrature",
    "norm_grad_p",
    "norm_q",
    "norm_lq",
    "rayleigh",
    "deficit",
    "deficit_J",
    "dJ",
    "matA_apply",
    "matA_quad",
    "norm_phi1",
    "Q0",
    "P1_family",
    "P0_family",
    "R_p",
    "M_l",
    "energy_E",
    "lumped_pairing",
]

# Floor applied to a vanishing base before raising to a negative power;
# the exact-collinearity case is finite analytically, but floating point
# needs a guard.
BASE_FLOOR = 1e-300


@dataclass(frozen=True)
class Exponents:
    """Exponent pair (p, q) with p >= q, p >= 2, q > 1."""

    p: float
    q: float

    def __post_init__(self):
        if not (self.p >= 2.0):
            raise ValueError(f"p must be >= 2, got {self.p}")
        if not (self.q > 1.0):
            raise ValueError(f"q must be > 1, got {self.q}")
        if not (self.p >= self.q):
            raise ValueError(f"need p >= q, got p={self.p}, q={self.q}")

    @property
    def p_over_q(self) -> float:
        return self.p / self.q

    @property
    def pq_ratio(self) -> float:
        """(p - q) / q, the exponent on the L^q mass in the weak form."""
        return (self.p - self.q) / self.q

    @property
    def p2q_ratio(self) -> float:
        """(p - 2q) / q, the exponent on the rank-one term."""
        return (self.p - 2.0 * self.q) / self.q


@dataclass
class EigenPair:
    """Computed ground state: least frequency and positive minimizer.

    ``phi1`` is normalized to unit L^q mass and positive at free nodes;
    ``lambda1`` equals its Rayleigh quotient.
    """

    lambda1: float
    phi1: GridFunction
    exps: Exponents
    diagnostics: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> Grid:
        return self.phi1.grid

    @property
    def grad_phi1(self) -> ElementField:
        if "grad" not in self._cache:
            self._cache["grad"] = gradient(self.phi1)
        return self._cache["grad"]

    @property
    def phi1_weight(self) -> np.ndarray:
        """|grad phi1|^(p-2) per element, the linearization weight."""
        if "weight" not in self._cache:
            gmag = np.linalg.norm(self.grad_phi1.gradients, axis=1)
            self._cache["weight"] = gmag ** (self.exps.p - 2.0)
        return self._cache["weight"]

    @property
    def int_phi_q(self) -> float:
        if "int_phi_q" not in self._cache:
            self._cache["int_phi_q"] = norm_q(self.phi1, self.exps.q)
        return self._cache["int_phi_q"]

    def phi_power_form(self, s: float) -> np.ndarray:
        """Node vector of ``integral phi1^s * basis_i dx``."""
        key = ("power_form", float(s))
        if key not in self._cache:
            qp = self.grid.values_at_qp(self.phi1.values)
            self._cache[key] = self.grid.assemble_qp_linear_form(
                np.abs(qp) ** s)
        return self._cache[key]

    def phi_power_integral(self, s: float) -> float:
        """``integral phi1^s dx`` by element quadrature."""
        key = ("power_int", float(s))
        if key not in self._cache:
            qp = self.grid.values_at_qp(self.phi1.values)
            self._cache[key] = self.grid.quad(np.abs(qp) ** s)
        return self._cache[key]

    def rescaled(self, c: float) -> "EigenPair":
        """Internally rescaled copy (phi1 -> c*phi1, same lambda1).

        Breaks the unit-normalization invariant on purpose; used only to
        assert that reported constants do not depend on the
        normalization of phi1.
        """
        return EigenPair(self.lambda1, self.phi1 * c, self.exps,
                         dict(self.diagnostics))

    def validate(self, tol: float = 1e-12) -> None:
        free = self.phi1.values[self.grid.free]
        if not np.all(free > 0):
            raise ValueError("phi1 must be positive at all free nodes")
        if abs(self.int_phi_q - 1.0) > tol:
            raise ValueError(
                f"phi1 not L^q-normalized: integral = {self.int_phi_q!r}")
        r = rayleigh(self.phi1, self.exps)
        if abs(r - self.lambda1) > tol * max(1.0, abs(self.lambda1)):
            raise ValueError(
                f"lambda1={self.lambda1!r} inconsistent with rayleigh={r!r}")


@dataclass(frozen=True)
class SPathQuadrature:
    """Gauss rule for ``integral_0^1 g(s) (1-s) ds``.

    ``weights`` already carry the (1-s) factor, so applying the rule to
    g = 1 yields 1/2.
    """

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, n: int = 16) -> "SPathQuadrature":
        x, w = np.polynomial.legendre.leggauss(n)
        s = 0.5 * (x + 1.0)
        w = 0.5 * w
        return cls(s, w * (1.0 - s))


def _signed_pow(v: np.ndarray, e: float) -> np.ndarray:
    """|v|^e * v, extended continuously by 0 at v = 0 (needs e > -1)."""
    out = np.zeros_like(v)
    nz = v != 0.0
    out[nz] = np.abs(v[nz]) ** e * v[nz]
    return out


def _abs_pow(v: np.ndarray, e: float) -> np.ndarray:
    """|v|^e with the 0^0 and 0^negative corners pinned to 0."""
    if e == 0.0:
        return np.ones_like(v)
    out = np.zeros_like(v)
    nz = v != 0.0
    out[nz] = np.abs(v[nz]) ** e
    return out


def norm_grad_p(u: GridFunction, p: float) -> float:
    """``integral |grad u|^p dx`` (exact for P1)."""
    gmag = np.linalg.norm(u.grid.element_gradients(u.values), axis=1)
    return fsum(gmag**p * u.grid.el_measure)


def norm_q(u: GridFunction, q: float) -> float:
    """``integral |u|^q dx`` by 3-point quadrature (not the q-th root)."""
    qp = u.grid.values_at_qp(u.values)
    return u.grid.quad(np.abs(qp) ** q)


def norm_lq(u: GridFunction, q: float) -> float:
    """The L^q norm itself, ``norm_q ** (1/q)``."""
    return norm_q(u, q) ** (1.0 / q)


def rayleigh(u: GridFunction, exps: Exponents) -> float:
    """Generalized Rayleigh quotient; scale-invariant in u."""
    mass = norm_q(u, exps.q)
    if mass == 0.0:
        raise ZeroDivisionError("Rayleigh quotient of the zero function")
    return norm_grad_p(u, exps.p) / mass**exps.p_over_q


def deficit(u: GridFunction, pair: EigenPair, exps: Exponents) -> float:
    """Friedrichs deficit ``grad-energy - lambda1 * mass^{p/q}``."""
    return (norm_grad_p(u, exps.p)
            - pair.lambda1 * norm_q(u, exps.q) ** exps.p_over_q)


def deficit_J(u: GridFunction, pair: EigenPair, exps: Exponents) -> float:
    """Deficit functional J; nonnegative, zero exactly on the ground ray."""
    if u.grid is not pair.grid:
        raise ValueError("u and eigenpair live on different grids")
    return deficit(u, pair, exps) / exps.p


def dJ(u: GridFunction, v: GridFunction, pair: EigenPair,
       exps: Exponents) -> float:
    """Directional derivative of J at u in direction v; linear in v."""
    if u.is_zero() and exps.p > exps.q:
        raise DegenerateBaseError(
            "dJ at the zero function is degenerate for p > q")
    g = u.grid
    gu = g.element_gradients(u.values)
    gv = g.element_gradients(v.values)
    gmag = np.linalg.norm(gu, axis=1)
    stiff = fsum(_abs_pow(gmag, exps.p - 2.0)
                 * np.einsum("ed,ed->e", gu, gv) * g.el_measure)
    uq = g.values_at_qp(u.values)
    vq = g.values_at_qp(v.values)
    mass_term = g.quad(_signed_pow(uq, exps.q - 2.0) * vq)
    base = norm_q(u, exps.q)
    return stiff - pair.lambda1 * base**exps.pq_ratio * mass_term


def matA_apply(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """Linearization matrix action A(a) b; A(0) is the zero matrix."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    amag = np.linalg.norm(a, axis=-1, keepdims=True)
    safe = np.where(amag > 0, amag, 1.0)
    ahat = a / safe
    proj = np.sum(ahat * b, axis=-1, keepdims=True)
    out = _abs_pow(amag, p - 2.0) * (b + (p - 2.0) * proj * ahat)
    return np.where(amag > 0, out, 0.0)


def matA_quad(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """Quadratic form <A(a) b, b>, between |a|^{p-2}|b|^2 and (p-1) of it."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    amag = np.linalg.norm(a, axis=-1)
    safe = np.where(amag > 0, amag, 1.0)
    proj = np.sum(a * b, axis=-1) / safe
    bsq = np.sum(b * b, axis=-1)
    return _abs_pow(amag, p - 2.0) * (bsq + (p - 2.0) * proj**2)


def _matA_stiffness(pair: EigenPair, gv: np.ndarray, p: float) -> float:
    """``integral <A(grad phi1) grad v, grad v> dx`` from element data."""
    g = pair.grid
    vals = matA_quad(pair.grad_phi1.gradients, gv, p)
    return fsum(vals * g.el_measure)


def norm_phi1(v: GridFunction, pair: EigenPair, p: float) -> float:
    """Ground-state weighted norm ``(integral |grad phi1|^{p-2} |grad v|^2)^{1/2}``."""
    g = v.grid
    gv = g.element_gradients(v.values)
    val = fsum(pair.phi1_weight * np.sum(gv * gv, axis=1) * g.el_measure)
    return float(np.sqrt(max(val, 0.0)))


def Q0(v: GridFunction, pair: EigenPair, exps: Exponents) -> float:
    """Limit quadratic form of the deficit at the ground state.

    Nonnegative on the discrete space, zero at v = phi1.
    """
    g = v.grid
    gv = g.element_gradients(v.values)
    stiff = _matA_stiffness(pair, gv, exps.p)
    phi_qp = g.values_at_qp(pair.phi1.values)
    v_qp = g.values_at_qp(v.values)
    base = pair.int_phi_q
    m2 = g.quad(_abs_pow(phi_qp, exps.q - 2.0) * v_qp**2)
    m1 = g.quad(_abs_pow(phi_qp, exps.q - 2.0) * phi_qp * v_qp)
    lam = pair.lambda1
    return (0.5 * stiff
            - 0.5 * lam * (exps.q - 1.0) * base**exps.pq_ratio * m2
            - 0.5 * lam * (exps.p - exps.q) * base**exps.p2q_ratio * m1**2)


def _guarded_base_pow(base: np.ndarray, e: float) -> np.ndarray:
    """base**e with a floor before negative exponents (collinear guard)."""
    base = np.asarray(base, dtype=float)
    if e < 0.0:
        base = np.maximum(base, BASE_FLOOR)
    return base**e


def P1_family(t: float, v: GridFunction, pair: EigenPair, exps: Exponents,
              squad: SPathQuadrature) -> float:
    """Second-derivative path integral of the gradient part.

    ``integral_0^1 [integral <A(grad phi1 + s t grad v) grad v, grad v>]
    (1-s) ds`` by Gauss quadrature in s.
    """
    g = v.grid
    gphi = pair.grad_phi1.gradients          # (E, d)
    gv = g.element_gradients(v.values)       # (E, d)
    s = squad.nodes[:, None, None]
    a = gphi[None, :, :] + (s * t) * gv[None, :, :]   # (S, E, d)
    quad_vals = matA_quad(a, np.broadcast_to(gv, a.shape), exps.p)  # (S, E)
    per_s = quad_vals @ g.el_measure          # (S,)
    return float(np.dot(squad.weights, per_s))


def P0_family(t: float, v: GridFunction, pair: EigenPair, exps: Exponents,
              squad: SPathQuadrature) -> float:
    """Second-derivative path integral of the mass part (two terms)."""
    g = v.grid
    phi_qp = g.values_at_qp(pair.phi1.values)  # (E, K)
    v_qp = g.values_at_qp(v.values)            # (E, K)
    s = squad.nodes[:, None, None]
    w = g.qp_weights[None, :, :]
    mix = phi_qp[None, :, :] + (s * t) * v_qp[None, :, :]  # (S, E, K)
    absmix = np.abs(mix)
    pow_q2 = _abs_pow(absmix, exps.q - 2.0)
    base = np.sum(w * absmix**exps.q, axis=(1, 2))                 # (S,)
    m2 = np.sum(w * pow_q2 * v_qp[None, :, :] ** 2, axis=(1, 2))   # (S,)
    m1 = np.sum(w * pow_q2 * mix * v_qp[None, :, :], axis=(1, 2))  # (S,)
    term1 = (exps.q - 1.0) * np.dot(
        squad.weights, _guarded_base_pow(base, exps.pq_ratio) * m2)
    term2 = (exps.p - exps.q) * np.dot(
        squad.weights, _guarded_base_pow(base, exps.p2q_ratio) * m1**2)
    return float(term1 + term2)


def R_p(v: GridFunction, w: GridFunction, t: float, p: float) -> np.ndarray:
    """Hidden-convexity remainder density, per element.

    Uses elementwise function averages for v, w and elementwise
    gradients; nonnegative, zero exactly on collinear pairs.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    g = v.grid
    fv, fw = gradient(v), gradient(w)
    vb, wb = fv.averages, fw.averages
    cross = wb[:, None] * fv.gradients - vb[:, None] * fw.gradients
    cmag2 = np.sum(cross * cross, axis=1)
    denom = (1.0 - t) * _abs_pow(vb, p) + t * _abs_pow(wb, p)
    if np.any((denom == 0.0) & (cmag2 > 0.0)):
        raise DegenerateBaseError(
            "remainder density undefined: v and w both vanish on an element")
    safe = np.where(denom > 0.0, denom, 1.0)
    if p >= 2.0:
        num = cmag2 ** (p / 2.0)
    else:
        wa2 = np.sum((wb[:, None] * fv.gradients) ** 2, axis=1)
        vb2 = np.sum((vb[:, None] * fw.gradients) ** 2, axis=1)
        num = _abs_pow(wa2 + vb2, (p - 2.0) / 2.0) * cmag2
    return np.where(denom > 0.0, num / safe, 0.0)


def M_l(u: GridFunction, lspec, pair: EigenPair, exps: Exponents) -> float:
    """Projection functional ``|l[u]|^{p-2} ||Pu||_phi1^2 + ||grad Pu||_p^p``."""
    from .decompose import project  # local import to avoid a module cycle

    dec = project(u, lspec, pair)
    lv = abs(dec.parallel)
    return (_abs_pow(np.array(lv), exps.p - 2.0).item()
            * norm_phi1(dec.perp, pair, exps.p) ** 2
            + norm_grad_p(dec.perp, exps.p))


def lumped_pairing(f: GridFunction, u: GridFunction) -> float:
    """Vertex-quadrature duality pairing ``integral f u dx``."""
    g = f.grid
    return fsum(g.lumped_weights * f.values * u.values)


def energy_E(u: GridFunction, pair: EigenPair, exps: Exponents,
             f: GridFunction) -> float:
    """Energy of the resonant problem: J-type part minus the forcing pairing."""
    return deficit_J(u, pair, exps) - lumped_pairing(f, u)

"""Splitting u = l[u]*phi1 + Pu along a normalized linear functional.

The functional l is either a ground-state power weight
``l[u] = integral phi1^s u / integral phi1^{s+1}`` or a general density
``l[u] = integral g u`` rescaled so l[phi1] = 1. Cone membership
compares the gradient p-norm of the perpendicular part with
gamma * |parallel part|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import splu

from .functionals import EigenPair, Exponents, norm_grad_p
from .grid import GridFunction, fsum, sample_test_function

__all__ = [
    "LinearFunctionalSpec",
    "phi_power",
    "density",
    "Decomposition",
    "project",
    "cone_classify",
    "operator_norm",
    "inverse_triangle_check",
]

CONE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class LinearFunctionalSpec:
    """Bounded linear functional with l[phi1] = 1 after normalization."""

    kind: str                       # "phi-power" or "density"
    s: float | None = None          # exponent for phi-power
    g: GridFunction | None = None   # density for density kind

    def __post_init__(self):
        if self.kind == "phi-power":
            if self.s is None or self.s < 1.0:
                raise ValueError("phi-power needs an exponent s >= 1")
        elif self.kind == "density":
            if self.g is None or self.g.is_zero():
                raise ValueError("density kind needs a nonzero GridFunction")
        else:
            raise ValueError(f"unknown functional kind {self.kind!r}")

    def _key(self) -> tuple:
        if self.kind == "phi-power":
            return ("lform", "phi-power", float(self.s))
        return ("lform", "density", id(self.g))

    def node_form(self, pair: EigenPair) -> np.ndarray:
        """Node weights w with l[u] = w . u and w . phi1 = 1 exactly."""
        key = self._key()
        if key not in pair._cache:
            g = pair.grid
            if self.kind == "phi-power":
                raw = pair.phi_power_form(self.s)
            else:
                qp = g.values_at_qp(self.g.values)
                raw = g.assemble_qp_linear_form(qp)
            denom = float(raw @ pair.phi1.values)
            if denom == 0.0:
                raise ValueError(
                    "functional annihilates phi1; cannot normalize")
            pair._cache[key] = raw / denom
        return pair._cache[key]

    def evaluate(self, u: GridFunction, pair: EigenPair) -> float:
        return float(self.node_form(pair) @ u.values)

    def describe(self) -> str:
        if self.kind == "phi-power":
            return f"phi-power({self.s:g})"
        return "density"


def phi_power(s: float) -> LinearFunctionalSpec:
    return LinearFunctionalSpec("phi-power", s=float(s))


def density(g: GridFunction) -> LinearFunctionalSpec:
    return LinearFunctionalSpec("density", g=g)


@dataclass(frozen=True)
class Decomposition:
    """u = parallel * phi1 + perp with l[perp] = 0."""

    parallel: float
    perp: GridFunction
    lspec: LinearFunctionalSpec
    residual: float  # l[perp], should vanish to round-off


def project(u: GridFunction, lspec: LinearFunctionalSpec,
            pair: EigenPair) -> Decomposition:
    """Split u along phi1 and the kernel of l."""
    w = lspec.node_form(pair)
    lu = float(w @ u.values)
    perp = u - lu * pair.phi1
    return Decomposition(lu, perp, lspec, float(w @ perp.values))


def cone_classify(u: GridFunction, gamma: float,
                  lspec: LinearFunctionalSpec, pair: EigenPair,
                  exps: Exponents) -> str:
    """Cone membership: perpendicular gradient norm vs gamma*|parallel|.

    Returns "C_gamma", "C_gamma_prime", or "boundary" on a relative tie.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    dec = project(u, lspec, pair)
    lhs = norm_grad_p(dec.perp, exps.p) ** (1.0 / exps.p)
    rhs = gamma * abs(dec.parallel)
    scale = max(lhs, rhs)
    if abs(lhs - rhs) <= CONE_TIE_TOL * scale:
        return "boundary"
    return "C_gamma" if lhs < rhs else "C_gamma_prime"


def _p2_free_factor(pair: EigenPair):
    """Cached sparse LU of the Laplace stiffness on free nodes."""
    if "p2_lu" not in pair._cache:
        from .eigensolver import laplace_stiffness  # deferred: module cycle
        K = laplace_stiffness(pair.grid)
        pair._cache["p2_lu"] = splu(K.tocsc())
    return pair._cache["p2_lu"]


def operator_norm(lspec: LinearFunctionalSpec, pair: EigenPair,
                  exps: Exponents) -> float:
    """Discrete dual norm of l: sup of l[u] over grad-p-norm one.

    Found by maximizing the scale-invariant quotient with a quasi-Newton
    method from a Laplace-preconditioned representer start; cached.
    """
    key = ("lnorm", lspec._key(), float(exps.p))
    if key in pair._cache:
        return pair._cache[key]

    g = pair.grid
    w = lspec.node_form(pair)
    wf = w[g.free]
    p = exps.p

    def objective(x):
        vals = np.zeros(g.n_nodes)
        vals[g.free] = x
        grads = g.element_gradients(vals)
        gmag2 = np.sum(grads * grads, axis=1)
        G = float(np.sum(gmag2 ** (p / 2.0) * g.el_measure))
        N = G ** (1.0 / p)
        num = float(wf @ x)
        f = -num / N
        # S_i = sum_e m_e |grad|^{p-2} <grad, gradN_i>
        flux = gmag2[:, None] ** ((p - 2.0) / 2.0) * grads
        S = g.assemble_flux_form(flux)[g.free]
        dN = G ** ((1.0 - p) / p) * S
        grad = -(wf * N - num * dN) / N**2
        return f, grad

    x0 = _p2_free_factor(pair).solve(wf)
    res = minimize(objective, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": 500})
    best = max(-res.fun, -objective(x0)[0])
    pair._cache[key] = float(best)
    return pair._cache[key]


def inverse_triangle_check(lspec: LinearFunctionalSpec, omega: GridFunction,
                           pair: EigenPair, exps: Exponents,
                           n_samples: int = 200, seed: int = 0) -> dict:
    """Empirical inverse-triangle constant for u in R*omega, v in Ker(l).

    Returns the batch minimum of ``|grad(u+v)|_p / (|grad u|_p +
    |grad v|_p)`` together with the analytic lower bound
    ``1 / (2 |l|_* |grad omega|_p + 1)``.
    """
    g = pair.grid
    w = lspec.node_form(pair)
    l_omega = float(w @ omega.values)
    if abs(l_omega - 1.0) > 1e-10:
        raise ValueError("omega must be normalized so l[omega] = 1")
    p = exps.p
    nw = norm_grad_p(omega, p) ** (1.0 / p)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    ratios = []
    for i in range(n_samples):
        t = float(rng.standard_normal())
        raw = sample_test_function(g, seed * 1_000_003 + i,
                                   style="random-nodal")
        v = raw - float(w @ raw.values) * pair.phi1
        # include the two pure cases periodically
        if i % 17 == 0:
            v = GridFunction.zero(g)
        if i % 23 == 0:
            t = 0.0
        nv = norm_grad_p(v, p) ** (1.0 / p)
        denom = abs(t) * nw + nv
        if denom == 0.0:
            continue
        total = norm_grad_p(t * omega + v, p) ** (1.0 / p)
        ratios.append(total / denom)
    lstar = operator_norm(lspec, pair, exps)
    bound = 1.0 / (2.0 * lstar * nw + 1.0)
    return {
        "min_ratio": min(ratios),
        "analytic_bound": bound,
        "operator_norm": lstar,
        "omega_norm": nw,
        "n_samples": len(ratios),
    }

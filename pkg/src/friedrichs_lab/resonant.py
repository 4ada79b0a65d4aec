"""Resonant problem at the least frequency, solved by energy descent.

The forcing must annihilate the ground state; then the energy
E[u] = (1/p) * deficit - f[u] is unbounded-below-free (coercive in
effect) with a strictly negative infimum, and any global minimizer is a
weak solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from .errors import ConfigError, NoConvergenceError, ZeroAfterProjectionError
from .functionals import (EigenPair, Exponents, _abs_pow, _signed_pow, dJ,
                          energy_E, lumped_pairing, norm_q)
from .grid import GridFunction, fsum

__all__ = [
    "ResonantProblem",
    "ResonantSolution",
    "project_forcing",
    "solve_resonant",
    "weak_residual",
]


def project_forcing(f_raw: GridFunction, pair: EigenPair) -> GridFunction:
    """Remove the ground-state component so the forcing pairs to zero
    against phi1 (in the vertex-quadrature pairing used by the energy)."""
    c = (lumped_pairing(f_raw, pair.phi1)
         / lumped_pairing(pair.phi1, pair.phi1))
    f = f_raw - c * pair.phi1
    scale = float(np.max(np.abs(f_raw.values), initial=0.0))
    if f.is_zero(tol=1e-14 * max(1.0, scale)):
        raise ZeroAfterProjectionError(
            "forcing is collinear with phi1; nothing left after projection")
    return f


@dataclass(frozen=True)
class ResonantProblem:
    """Forced problem at the least frequency with f[phi1] = 0."""

    pair: EigenPair
    exps: Exponents
    f: GridFunction
    max_iter: int = 5000
    grad_tol: float = 1e-10
    n_restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if not self.exps.p > self.exps.q:
            raise ConfigError(
                "the resonant solver requires p > q >= 2: at p = q the "
                "forced problem sits exactly at the degenerate frequency")
        if self.exps.q < 2.0:
            raise ConfigError("the resonant solver requires q >= 2")
        if self.f.is_zero():
            raise ConfigError("forcing must be nonzero")
        scale = float(np.max(np.abs(self.f.values)))
        if abs(lumped_pairing(self.f, self.pair.phi1)) > 1e-12 * scale:
            raise ConfigError(
                "forcing does not annihilate phi1; run project_forcing first")


@dataclass
class ResonantSolution:
    u: GridFunction
    energy: float
    residual: float
    energy_history: list
    diagnostics: dict = field(default_factory=dict)


def _energy_state(u: GridFunction, problem: ResonantProblem):
    """Energy value and its nodal gradient on the free nodes."""
    g = u.grid
    exps = problem.exps
    lam = problem.pair.lambda1
    grads = g.element_gradients(u.values)
    gmag = np.linalg.norm(grads, axis=1)
    G = fsum(gmag**exps.p * g.el_measure)
    M = norm_q(u, exps.q)
    fw = g.lumped_weights * problem.f.values
    E = G / exps.p - lam / exps.p * M**exps.p_over_q - float(
        fw @ u.values)
    flux = _abs_pow(gmag, exps.p - 2.0)[:, None] * grads
    S = g.assemble_flux_form(flux)
    Nq = g.assemble_qp_linear_form(
        _signed_pow(g.values_at_qp(u.values), exps.q - 2.0))
    # d/du_i of M^{p/q} = (p/q) M^{p/q-1} * q * Nq_i; M = 0 is regular
    # here because p > q makes the exponent positive.
    mass_pow = M**exps.pq_ratio if M > 0.0 else 0.0
    grad = S - lam * mass_pow * Nq - fw
    return E, grad[g.free]


def solve_resonant(problem: ResonantProblem) -> ResonantSolution:
    """Globally minimize the energy by preconditioned descent.

    Runs from zero plus seeded random restarts and keeps the best
    minimizer; the per-run energy history is strictly nonincreasing.
    """
    g = problem.pair.grid
    from .eigensolver import laplace_stiffness

    lu = splu(laplace_stiffness(g).tocsc())
    fscale = float(np.linalg.norm(
        (g.lumped_weights * problem.f.values)[g.free]))
    tol = problem.grad_tol * max(1.0, fscale)

    def descend(x0):
        x = x0.copy()
        vals = np.zeros(g.n_nodes)
        vals[g.free] = x
        u = GridFunction(g, vals)
        E, gradf = _energy_state(u, problem)
        history = [E]
        step = 1.0
        res = float(np.linalg.norm(gradf))
        it = 0
        for it in range(1, problem.max_iter + 1):
            if res <= tol:
                break
            d = lu.solve(gradf)
            s = step
            accepted = False
            for _ in range(60):
                xnew = x - s * d
                vals = np.zeros(g.n_nodes)
                vals[g.free] = xnew
                unew = GridFunction(g, vals)
                Enew, gnew = _energy_state(unew, problem)
                rnew = float(np.linalg.norm(gnew))
                # near the minimum the energy decrease drops below the
                # float resolution; keep going while the gradient shrinks
                if Enew < E - 1e-4 * s * float(gradf @ d) or rnew < 0.999 * res:
                    x, u, E, gradf = xnew, unew, Enew, gnew
                    res = rnew
                    step = min(s * 1.5, 8.0)
                    accepted = True
                    if E < history[-1]:
                        history.append(E)
                    break
                s *= 0.5
            if not accepted:
                break
        return u, E, res, history, it

    nf = len(g.free)
    starts = [np.zeros(nf)]
    rng = np.random.Generator(np.random.Philox(key=int(problem.seed)))
    fmax = float(np.max(np.abs(problem.f.values)))
    for _ in range(problem.n_restarts):
        starts.append(0.1 * fmax * rng.standard_normal(nf))

    runs = [descend(x0) for x0 in starts]
    best = min(runs, key=lambda r: r[1])
    u, E, res, history, iters = best
    if res > tol:
        raise NoConvergenceError(
            f"energy descent stalled at gradient norm {res:.3e} "
            f"(tolerance {tol:.3e})",
            {"energy": E, "iterations": iters})
    energies = sorted(r[1] for r in runs)
    return ResonantSolution(u, E, res, history, {
        "iterations": iters,
        "restart_energies": energies,
        "gradient_norm": res,
        "energy_check": energy_E(u, problem.pair, problem.exps, problem.f),
    })


def weak_residual(u: GridFunction, problem: ResonantProblem,
                  directions) -> float:
    """Max over directions of the normalized weak-form defect
    |dJ(u, v) - f[v]| / |grad v|_p."""
    from .functionals import norm_grad_p

    directions = list(directions)
    if not directions:
        raise ValueError("need at least one direction")
    worst = 0.0
    for v in directions:
        nv = norm_grad_p(v, problem.exps.p) ** (1.0 / problem.exps.p)
        if nv == 0.0:
            raise ValueError("zero test direction")
        defect = abs(dJ(u, v, problem.pair, problem.exps)
                     - lumped_pairing(problem.f, v))
        worst = max(worst, defect / nv)
    return worst

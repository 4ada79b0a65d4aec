"""Ground-state solvers: the nonlinear eigenpair, a 1D shooting oracle,
and the linearized critical value mu1.

The eigenpair comes from Laplace-preconditioned projected gradient
descent on the Rayleigh quotient with the iterate kept positive and
renormalized each step. mu1 solves the generalized symmetric
eigenproblem built from the linearization stiffness and a weighted
mass plus rank-one matrix, by inverse iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import splu

from .errors import BracketFailureError, NoConvergenceError
from .functionals import EigenPair, Exponents, _abs_pow, norm_grad_p, norm_q
from .grid import Grid, GridFunction, fsum

__all__ = [
    "SolverConfig",
    "Mu1Result",
    "solve_eigenpair",
    "shooting_oracle_1d",
    "solve_mu1",
    "laplace_stiffness",
    "weighted_stiffness",
    "matA_stiffness",
    "weighted_mass",
    "mu_quotient",
]

WEIGHT_FLOOR_FACTOR = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the descent and inverse-iteration solvers."""

    max_iter: int = 20000
    initial_step: float = 1.0
    backtrack: float = 0.5
    grad_tol: float = 1e-11
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not (self.grad_tol > 0 and self.initial_step > 0
                and 0 < self.backtrack < 1):
            raise ValueError("tolerances and steps must be positive")


@dataclass
class Mu1Result:
    """Least value of the linearized quotient and its minimizer."""

    mu1: float
    minimizer: GridFunction
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# sparse assembly helpers


def _assemble(grid: Grid, local: np.ndarray) -> sp.csr_matrix:
    """Scatter per-element local matrices (E, nv, nv) into CSR."""
    nv = grid.elements.shape[1]
    rows = np.repeat(grid.elements, nv, axis=1).ravel()
    cols = np.tile(grid.elements, (1, nv)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)),
                         shape=(grid.n_nodes, grid.n_nodes)).tocsr()


def weighted_stiffness(grid: Grid, el_weight: np.ndarray) -> sp.csr_matrix:
    """Stiffness with a scalar per-element weight."""
    local = np.einsum("eid,ejd->eij", grid.el_basis_grads,
                      grid.el_basis_grads)
    local = local * (np.asarray(el_weight) * grid.el_measure)[:, None, None]
    return _assemble(grid, local)


def laplace_stiffness(grid: Grid) -> sp.csr_matrix:
    """Plain Laplace stiffness restricted to free nodes."""
    K = weighted_stiffness(grid, np.ones(grid.n_elements))
    return K[np.ix_(grid.free, grid.free)]


def matA_stiffness(pair: EigenPair, floor_factor: float = WEIGHT_FLOOR_FACTOR
                   ) -> tuple[sp.csr_matrix, int]:
    """Linearization stiffness on free nodes, with a floored weight.

    The scalar weight |grad phi1|^{p-2} can vanish at interior critical
    points; it is floored at ``floor_factor * max`` for factorization
    stability. Returns the matrix and the floor activation count.
    """
    g = pair.grid
    p = pair.exps.p
    grads = pair.grad_phi1.gradients
    amag = np.linalg.norm(grads, axis=1)
    w = pair.phi1_weight
    floor = floor_factor * float(np.max(w))
    floored = np.maximum(w, floor)
    n_floored = int(np.count_nonzero(w < floor))

    safe = np.where(amag > 0, amag, 1.0)
    ahat = grads / safe[:, None]
    eye = np.eye(g.dim)
    A = floored[:, None, None] * (
        eye[None, :, :] + (p - 2.0) * ahat[:, :, None] * ahat[:, None, :])
    local = np.einsum("eid,edf,ejf->eij", g.el_basis_grads, A,
                      g.el_basis_grads)
    local = local * g.el_measure[:, None, None]
    K = _assemble(g, local)
    return K[np.ix_(g.free, g.free)], n_floored


def weighted_mass(grid: Grid, qp_density: np.ndarray) -> sp.csr_matrix:
    """Mass matrix with a density given at the quadrature points (E, K)."""
    # local_ij = sum_k w_ek density_ek N_i(k) N_j(k)
    local = np.einsum("ek,ki,kj->eij", grid.qp_weights * qp_density,
                      grid.qp_basis, grid.qp_basis)
    return _assemble(grid, local)


# ---------------------------------------------------------------------------
# nonlinear eigenpair


def _normalized(grid: Grid, values: np.ndarray, q: float) -> GridFunction:
    u = GridFunction(grid, values)
    m = norm_q(u, q)
    return u.with_values(u.values / m ** (1.0 / q))


def _eig_state(u: GridFunction, exps: Exponents):
    """Rayleigh value, nodal gradient on free nodes, relative residual."""
    g = u.grid
    grads = g.element_gradients(u.values)
    gmag = np.linalg.norm(grads, axis=1)
    lam = fsum(gmag**exps.p * g.el_measure)  # mass is 1 by normalization
    flux = _abs_pow(gmag, exps.p - 2.0)[:, None] * grads
    S = g.assemble_flux_form(flux)
    uq = g.values_at_qp(u.values)
    sgn = np.zeros_like(uq)
    nz = uq != 0.0
    sgn[nz] = np.abs(uq[nz]) ** (exps.q - 2.0) * uq[nz]
    Nq = g.assemble_qp_linear_form(sgn)
    grad = exps.p * (S - lam * Nq)
    gf = grad[g.free]
    res = float(np.linalg.norm(gf)) / (exps.p * lam)
    return lam, gf, res


def solve_eigenpair(grid: Grid, exps: Exponents,
                    config: SolverConfig | None = None) -> EigenPair:
    """Compute the least frequency and its positive normalized minimizer.

    Starts from the first Laplace mode (a product of sines) with a small
    seeded perturbation, descends the Rayleigh quotient with a
    Laplace-preconditioned step, projects back to the positive cone by
    absolute value, and renormalizes the L^q mass each step. A step is
    accepted if it lowers the quotient or shrinks the first-order
    residual, which lets the residual keep contracting after the
    quotient itself has hit round-off.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    lo = np.array(grid.lo)
    span = np.array(grid.hi) - lo
    xhat = (grid.nodes - lo) / span
    vals = np.prod(np.sin(np.pi * xhat), axis=1)
    rng = np.random.Generator(np.random.Philox(key=int(config.seed)))
    vals[grid.free] *= 1.0 + 1e-3 * rng.standard_normal(len(grid.free))
    u = _normalized(grid, np.abs(vals), exps.q)

    lu = splu(laplace_stiffness(grid).tocsc())
    lam, gf, res = _eig_state(u, exps)
    step = config.initial_step
    history = [res]
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        if res <= config.grad_tol:
            break
        d = lu.solve(gf)
        s = step
        accepted = False
        for _ in range(60):
            cand_vals = u.values.copy()
            cand_vals[grid.free] = np.abs(cand_vals[grid.free] - s * d)
            cand = _normalized(grid, cand_vals, exps.q)
            clam, cgf, cres = _eig_state(cand, exps)
            if clam < lam or cres < 0.999 * res:
                u, lam, gf, res = cand, clam, cgf, cres
                step = min(s * 1.5, 4.0)
                accepted = True
                break
            s *= config.backtrack
        history.append(res)
        if not accepted:
            break

    diagnostics = {
        "iterations": n_iter,
        "residual": res,
        "residual_history": history[:: max(1, len(history) // 50)],
        "wall_time": time.perf_counter() - t0,
        "seed": config.seed,
    }
    if res > config.grad_tol:
        raise NoConvergenceError(
            f"eigenpair solver stalled at residual {res:.3e} "
            f"(tolerance {config.grad_tol:.3e}) after {n_iter} iterations",
            diagnostics)
    pair = EigenPair(lam, u, exps, diagnostics)
    return pair


# ---------------------------------------------------------------------------
# 1D shooting oracle


def shooting_oracle_1d(a: float, b: float, exps: Exponents,
                       tol: float = 1e-12, lam_max: float = 1e8,
                       n_samples: int = 513) -> tuple[float, np.ndarray, np.ndarray]:
    """Independent 1D ground truth by shoot-and-bisect.

    Integrates u' = |v|^{1/(p-1)} sgn v, v' = -L |u|^{q-2} u from
    u(a)=0, v(a)=1 and bisects on L until the first decreasing zero
    crossing of u lands at b. The Rayleigh eigenvalue follows from the
    scaling of the quotient: lambda1 = L * (integral |u|^q)^{(q-p)/q}.

    Returns (lambda1, sample points, normalized phi1 samples).
    """
    p, q = exps.p, exps.q
    pc = 1.0 / (p - 1.0)
    length = b - a

    def integrate(L):
        def rhs(x, y):
            u, v, m = y
            du = np.sign(v) * abs(v) ** pc
            dv = -L * (abs(u) ** (q - 2.0) * u if u != 0.0 else 0.0)
            return (du, dv, abs(u) ** q)

        def cross(x, y):
            return y[0]

        cross.terminal = True
        cross.direction = -1
        sol = solve_ivp(rhs, (a, a + 3.0 * length), (0.0, 1.0, 0.0),
                        rtol=1e-11, atol=1e-13, events=cross,
                        dense_output=True, max_step=length / 16.0)
        if sol.t_events[0].size:
            return float(sol.t_events[0][0]), sol
        return np.inf, sol

    # crossing location decreases in L; bracket it around b
    lo = 1.0
    while integrate(lo)[0] < b:
        lo *= 0.25
        if lo < 1e-12:
            raise BracketFailureError("no lower bracket for the shot")
    hi = max(2.0 * lo, 2.0)
    while integrate(hi)[0] > b:
        hi *= 2.0
        if hi > lam_max:
            raise BracketFailureError(
                f"no crossing before x={b} for L up to {lam_max:g}")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        xc, _ = integrate(mid)
        if xc > b:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    L = 0.5 * (lo + hi)
    xc, sol = integrate(L)
    xs = np.linspace(a, min(xc, b), n_samples)
    u, _, m = sol.sol(xs)
    mass = float(sol.sol(min(xc, b))[2])
    lambda1 = L * mass ** ((q - p) / q)
    phi = u / mass ** (1.0 / q)
    return lambda1, xs, phi


# ---------------------------------------------------------------------------
# linearized critical value mu1


def _mu1_matrices(pair: EigenPair):
    g = pair.grid
    exps = pair.exps
    K, n_floored = matA_stiffness(pair)
    phi_qp = g.values_at_qp(pair.phi1.values)
    Mw = weighted_mass(g, _abs_pow(phi_qp, exps.q - 2.0))
    Mw = Mw[np.ix_(g.free, g.free)]
    bvec = pair.phi_power_form(exps.q - 1.0)[g.free]
    base = pair.int_phi_q
    c1 = (exps.q - 1.0) * base**exps.pq_ratio
    c2 = (exps.p - exps.q) * base**exps.p2q_ratio
    return K, Mw, bvec, c1, c2, n_floored


def mu_quotient(v: GridFunction, pair: EigenPair,
                kernel_only: bool = False) -> float:
    """The linearized Rayleigh quotient evaluated at v.

    With ``kernel_only`` the rank-one term is dropped, which is the
    quotient restricted to the kernel of the phi-power(q-1) functional.
    """
    from .functionals import matA_quad  # local to keep import list short

    g = v.grid
    exps = pair.exps
    gv = g.element_gradients(v.values)
    num = fsum(matA_quad(pair.grad_phi1.gradients, gv, exps.p)
               * g.el_measure)
    phi_qp = g.values_at_qp(pair.phi1.values)
    v_qp = g.values_at_qp(v.values)
    base = pair.int_phi_q
    m2 = g.quad(_abs_pow(phi_qp, exps.q - 2.0) * v_qp**2)
    den = (exps.q - 1.0) * base**exps.pq_ratio * m2
    if not kernel_only:
        m1 = float(pair.phi_power_form(exps.q - 1.0) @ v.values)
        den += (exps.p - exps.q) * base**exps.p2q_ratio * m1**2
    return num / den


def solve_mu1(pair: EigenPair, exps: Exponents,
              config: SolverConfig | None = None) -> Mu1Result:
    """Smallest linearized quotient value by inverse iteration.

    Solves K v = mu M v with K the linearization stiffness and
    M = c1 * (phi1^{q-2} mass) + c2 * (rank-one), iterating v <- K^{-1} M v.
    """
    config = config or SolverConfig()
    g = pair.grid
    K, Mw, bvec, c1, c2, n_floored = _mu1_matrices(pair)

    def apply_M(x):
        return c1 * (Mw @ x) + c2 * bvec * float(bvec @ x)

    lu = splu(K.tocsc())
    v = pair.phi1.values[g.free].copy()
    v /= np.sqrt(float(v @ apply_M(v)))
    mu = float(v @ (K @ v))
    history = [mu]
    for n_iter in range(1, 500):
        w = lu.solve(apply_M(v))
        w /= np.sqrt(float(w @ apply_M(w)))
        mu_new = float(w @ (K @ w))
        v = w
        history.append(mu_new)
        if abs(mu_new - mu) <= 1e-13 * abs(mu_new):
            mu = mu_new
            break
        mu = mu_new
    else:
        raise NoConvergenceError(
            "inverse iteration for mu1 did not settle",
            {"history": history})

    phi_f = pair.phi1.values[g.free]
    Mphi = apply_M(phi_f)
    cos = float(v @ Mphi) / np.sqrt(float(phi_f @ Mphi) * float(v @ apply_M(v)))
    vals = np.zeros(g.n_nodes)
    vals[g.free] = v
    return Mu1Result(mu, GridFunction(g, vals), {
        "iterations": n_iter,
        "alignment_cos": cos,
        "weight_floor_activations": n_floored,
    })

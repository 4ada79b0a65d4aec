"""Command-line driver.

Subcommands: eig, verify, constant (verify with adversarial
tightening), separation, solve, hidden. Every run echoes the fully
resolved configuration it used and writes deterministic CSV/JSON
artifacts; wall-clock metadata is confined to a separate file so reruns
with the same seed are byte-identical. Figures are rendered alongside
the delimited outputs unless --no-figures is given.

Exit codes: 0 ok, 1 configuration error, 2 solver non-convergence,
3 invariant failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import report as figures
from .decompose import density, phi_power
from .errors import ConfigError, FriedrichsLabError, NoConvergenceError
from .eigensolver import SolverConfig, shooting_oracle_1d, solve_eigenpair, \
    solve_mu1
from .functionals import Exponents, SPathQuadrature
from .grid import (DomainSpec, build_grid, gridfunction_to_json_dict,
                   sample_test_function)
from .resonant import (ResonantProblem, project_forcing, solve_resonant,
                       weak_residual)
from .verify import (check_friedrichs, check_hidden_convexity,
                     check_improved, check_Ml_equivalence,
                     check_P1_lower_bound, estimate_Lambda_gamma,
                     generate_batch, sweep_Lambda_tilde)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INVARIANT = 3

INEQUALITIES = ("friedrichs", "improved-1.9", "generalized-1.14",
                "hidden-1.15", "hidden-1.17", "hidden-1.18",
                "Ml-equivalence", "P1-lower-bound")


def _threads() -> int:
    raw = os.environ.get("FRIEDRICHS_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"FRIEDRICHS_LAB_THREADS must be an int, got {raw!r}")


def _parse_domain(text: str, n_text: str) -> DomainSpec:
    kind, _, rest = text.partition(":")
    try:
        vals = [float(x) for x in rest.split(",")] if rest else []
        if kind == "interval":
            a, b = vals if vals else (0.0, 1.0)
            n = int(n_text)
            return DomainSpec(1, (a,), (b,), (n,))
        if kind == "rectangle":
            ax, bx, ay, by = vals if vals else (0.0, 1.0, 0.0, 1.0)
            nx, _, ny = n_text.partition("x")
            ny = ny or nx
            return DomainSpec(2, (ax, ay), (bx, by), (int(nx), int(ny)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad domain/resolution {text!r} / {n_text!r}: {exc}")
    raise ConfigError(f"unknown domain kind {kind!r} "
                      "(use interval:a,b or rectangle:ax,bx,ay,by)")


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path} at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}")
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Layer defaults < config file < explicit CLI flags."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_cfg)
    for key in defaults:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            resolved[key] = val
    return resolved


def _emit(out_dir: Path, resolved: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "resolved_config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
    with open(out_dir / "metadata.json", "w") as fh:
        json.dump({"wall_clock": time.strftime("%Y-%m-%dT%H:%M:%S")},
                  fh, indent=2)
    print(f"resolved config: {json.dumps(resolved, sort_keys=True)}")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _setup(resolved: dict):
    spec = _parse_domain(resolved["domain"], str(resolved["n"]))
    grid = build_grid(spec)
    exps = Exponents(float(resolved["p"]), float(resolved["q"]))
    cfg = SolverConfig(seed=int(resolved["seed"]),
                       grad_tol=float(resolved["grad-tol"]),
                       max_iter=int(resolved["max-iter"]))
    pair = solve_eigenpair(grid, exps, cfg)
    return grid, exps, pair


COMMON_DEFAULTS = {
    "domain": "interval:0,1",
    "n": "128",
    "p": 3.0,
    "q": 2.0,
    "seed": 0,
    "grad-tol": 1e-11,
    "max-iter": 20000,
    "out-dir": "out",
    "figures": True,
}


def cmd_eig(args) -> int:
    defaults = dict(COMMON_DEFAULTS, oracle="none", mu1=False)
    resolved = _resolve(args, defaults)
    out = Path(resolved["out-dir"])
    _emit(out, resolved)
    grid, exps, pair = _setup(resolved)
    payload = {
        "schema_version": 1,
        "lambda1": pair.lambda1,
        "exponents": {"p": exps.p, "q": exps.q},
        "grid": grid.describe(),
        "diagnostics": {k: v for k, v in pair.diagnostics.items()
                        if k != "wall_time"},
        "phi1": gridfunction_to_json_dict(pair.phi1),
    }
    if resolved["oracle"] == "shooting":
        if grid.dim != 1:
            raise ConfigError("the shooting oracle is 1D only")
        lam_o, _, _ = shooting_oracle_1d(grid.lo[0], grid.hi[0], exps)
        payload["oracle"] = {
            "method": "shooting",
            "lambda1": lam_o,
            "relative_difference": abs(pair.lambda1 - lam_o) / lam_o,
        }
    if resolved["mu1"]:
        mres = solve_mu1(pair, exps)
        payload["mu1"] = {"value": mres.mu1,
                          "alignment_cos": mres.diagnostics["alignment_cos"]}
    _write_json(out / "eigenpair.json", payload)
    if resolved["figures"]:
        figures.render_eigenfunction(pair, out / "eigenfunction.png")
    print(f"lambda1 = {pair.lambda1:.12g} "
          f"({pair.diagnostics['iterations']} iterations)")
    return EXIT_OK


def _run_verify(args, adversarial: bool) -> int:
    defaults = dict(COMMON_DEFAULTS, ineq="friedrichs", batch=200,
                    lspec="phi-power:1")
    resolved = _resolve(args, defaults)
    if resolved["ineq"] not in INEQUALITIES:
        raise ConfigError(f"unknown inequality {resolved['ineq']!r}; "
                          f"choose from {INEQUALITIES}")
    if int(resolved["batch"]) < 1:
        raise ConfigError("batch size must be >= 1")
    out = Path(resolved["out-dir"])
    _emit(out, resolved)
    grid, exps, pair = _setup(resolved)
    batch = generate_batch(grid, int(resolved["batch"]),
                           int(resolved["seed"]))
    threads = _threads()
    ineq = resolved["ineq"]

    reports = {}
    ok = True
    if ineq == "friedrichs":
        rep = check_friedrichs(batch, pair, exps, threads=threads)
        ok = rep.metadata["min_scaled_deficit"] >= -1e-10
        reports[ineq] = rep
    elif ineq in ("improved-1.9", "generalized-1.14"):
        if ineq == "improved-1.9":
            lspec = phi_power(exps.q - 1.0)
        else:
            lspec = _parse_lspec(resolved["lspec"], grid, pair, exps)
        rep = check_improved(batch, pair, exps, lspec,
                             adversarial=adversarial, threads=threads)
        ok = rep.metadata["empirical_C"] > 0
        reports[ineq] = rep
    elif ineq.startswith("hidden"):
        hid = check_hidden_convexity(batch, pair, exps, threads=threads)
        if ineq not in hid:
            raise ConfigError(
                f"{ineq} not applicable at p={exps.p:g}, q={exps.q:g}")
        rep = hid[ineq]
        ok = rep.metadata["empirical_C"] > 0
        reports[ineq] = rep
    elif ineq == "Ml-equivalence":
        rep = check_Ml_equivalence(phi_power(exps.q - 1.0), phi_power(1.0),
                                   batch, pair, exps, threads=threads)
        ok = 0 < rep.metadata["C1"] <= rep.metadata["C2"] < float("inf")
        reports[ineq] = rep
    else:  # P1-lower-bound
        rep = check_P1_lower_bound(batch, pair, exps,
                                   SPathQuadrature.gauss(),
                                   threads=threads)
        ok = rep.metadata["empirical_C"] > 0
        reports[ineq] = rep

    for key, rep in reports.items():
        stem = key.replace(".", "_")
        rep.write_csv(out / f"{stem}.csv")
        rep.write_json(out / f"{stem}.json")
        if resolved["figures"]:
            figures.render_ratio_histogram(rep, out / f"{stem}.png")
        print(f"{key}: min ratio {rep.min_ratio:.6g} over "
              f"{len(rep.rows)} samples ({rep.excluded} excluded)")
    return EXIT_OK if ok else EXIT_INVARIANT


def _parse_lspec(text: str, grid, pair, exps):
    kind, _, rest = text.partition(":")
    if kind == "phi-power":
        return phi_power(float(rest or exps.q - 1.0))
    if kind == "density":
        g = sample_test_function(grid, int(rest or 1), "smooth-mode")
        return density(g)
    raise ConfigError(f"unknown lspec {text!r} "
                      "(use phi-power:s or density:seed)")


def cmd_verify(args) -> int:
    return _run_verify(args, adversarial=False)


def cmd_constant(args) -> int:
    return _run_verify(args, adversarial=True)


def cmd_separation(args) -> int:
    defaults = dict(COMMON_DEFAULTS, gamma=1.0, sweep="0.5,0.2,0.1,0.05")
    resolved = _resolve(args, defaults)
    out = Path(resolved["out-dir"])
    _emit(out, resolved)
    grid, exps, pair = _setup(resolved)
    squad = SPathQuadrature.gauss()

    res = estimate_Lambda_gamma(float(resolved["gamma"]), pair, exps)
    gammas = [float(x) for x in str(resolved["sweep"]).split(",")]
    sweep = sweep_Lambda_tilde(gammas, pair, exps, squad)
    payload = {
        "schema_version": 1,
        "lambda1": pair.lambda1,
        "Lambda_gamma": {"gamma": res.gamma, "value": res.value,
                         "gap": res.gap, "t": res.t},
        "Lambda_tilde_sweep": [
            {"gamma": r.gamma, "value": r.value, "gap": r.gap}
            for r in sweep],
    }
    _write_json(out / "separation.json", payload)
    if resolved["figures"]:
        figures.render_separation_sweep(sweep, pair.lambda1,
                                        out / "separation_sweep.png")
    print(f"Lambda_gamma(gamma={res.gamma:g}) - lambda1 = {res.gap:.6g}")
    for r in sweep:
        print(f"Lambda_tilde(gamma={r.gamma:g}) - lambda1 = {r.gap:.6g}")
    bad = res.gap < -1e-10 or any(r.gap < -1e-10 for r in sweep)
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_solve(args) -> int:
    defaults = dict(COMMON_DEFAULTS, f_seed=101, f_scale=1.0)
    resolved = _resolve(args, defaults)
    out = Path(resolved["out-dir"])
    _emit(out, resolved)
    grid, exps, pair = _setup(resolved)
    f_raw = sample_test_function(grid, int(resolved["f_seed"]),
                                 "smooth-mode") * float(resolved["f_scale"])
    f = project_forcing(f_raw, pair)
    problem = ResonantProblem(pair, exps, f, seed=int(resolved["seed"]))
    solution = solve_resonant(problem)
    directions = [sample_test_function(grid, 5000 + i, "random-nodal")
                  for i in range(20)]
    residual = weak_residual(solution.u, problem, directions)
    payload = {
        "schema_version": 1,
        "energy": solution.energy,
        "weak_residual": residual,
        "energy_history": solution.energy_history,
        "diagnostics": solution.diagnostics,
        "solution": gridfunction_to_json_dict(solution.u),
        "forcing": gridfunction_to_json_dict(f),
    }
    _write_json(out / "resonant_solution.json", payload)
    if resolved["figures"]:
        figures.render_energy_history(solution, out / "energy_history.png")
        figures.render_gridfunction(solution.u, out / "solution.png",
                                    title="resonant minimizer")
    print(f"energy = {solution.energy:.8g}, weak residual = {residual:.3g}")
    if solution.energy >= 0:
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_hidden(args) -> int:
    defaults = dict(COMMON_DEFAULTS, batch=200, t_nodes=33, p=3.0, q=3.0)
    resolved = _resolve(args, defaults)
    out = Path(resolved["out-dir"])
    _emit(out, resolved)
    grid, exps, pair = _setup(resolved)
    batch = generate_batch(grid, int(resolved["batch"]),
                           int(resolved["seed"]))
    reports = check_hidden_convexity(batch, pair, exps,
                                     t_nodes=int(resolved["t_nodes"]),
                                     threads=_threads())
    ok = True
    for key, rep in reports.items():
        stem = key.replace(".", "_")
        rep.write_csv(out / f"{stem}.csv")
        rep.write_json(out / f"{stem}.json")
        if resolved["figures"]:
            figures.render_ratio_histogram(rep, out / f"{stem}.png")
        print(f"{key}: empirical C = {rep.metadata['empirical_C']:.6g}")
        ok = ok and rep.metadata["empirical_C"] > 0
    return EXIT_OK if ok else EXIT_INVARIANT


def _add_common(sub):
    sub.add_argument("--domain", help="interval:a,b or rectangle:ax,bx,ay,by")
    sub.add_argument("--n", help="cells per axis, e.g. 256 or 16x16")
    sub.add_argument("--p", type=float)
    sub.add_argument("--q", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--grad-tol", type=float, dest="grad_tol")
    sub.add_argument("--max-iter", type=int, dest="max_iter")
    sub.add_argument("--out-dir", dest="out_dir")
    sub.add_argument("--config", help="JSON file with defaults")
    sub.add_argument("--no-figures", dest="figures", action="store_false",
                     default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="friedrichs-lab",
        description="Ground states, quantified Friedrichs inequalities, "
                    "and the resonant problem for the Dirichlet p-Laplacian.")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("eig", help="compute the ground-state pair")
    _add_common(s)
    s.add_argument("--oracle", choices=("none", "shooting"))
    s.add_argument("--mu1", action="store_true", default=None)
    s.set_defaults(fn=cmd_eig)

    for name, fn in (("verify", cmd_verify), ("constant", cmd_constant)):
        s = subs.add_parser(name, help="batch inequality checks"
                            + (" with adversarial tightening"
                               if name == "constant" else ""))
        _add_common(s)
        s.add_argument("--ineq", choices=INEQUALITIES)
        s.add_argument("--batch", type=int)
        s.add_argument("--lspec", help="phi-power:s or density:seed")
        s.set_defaults(fn=fn)

    s = subs.add_parser("separation", help="cone separation constants")
    _add_common(s)
    s.add_argument("--gamma", type=float)
    s.add_argument("--sweep", help="comma-separated gamma list")
    s.set_defaults(fn=cmd_separation)

    s = subs.add_parser("solve", help="resonant problem by energy descent")
    _add_common(s)
    s.add_argument("--f-seed", type=int, dest="f_seed")
    s.add_argument("--f-scale", type=float, dest="f_scale")
    s.set_defaults(fn=cmd_solve)

    s = subs.add_parser("hidden", help="hidden-convexity suite")
    _add_common(s)
    s.add_argument("--batch", type=int)
    s.add_argument("--t-nodes", type=int, dest="t_nodes")
    s.set_defaults(fn=cmd_hidden)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except FriedrichsLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

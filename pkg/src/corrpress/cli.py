"""Command line front end.

Each subcommand reads JSON documents, runs one library operation and
writes a run report.  Reports are deterministic, identical inputs give
byte-identical bytes, so timing and progress lines go to stderr only.
Exit codes: 0 success, 1 failed verification, 2 bad input, 3 solver
non-convergence.
"""

import argparse
import hashlib
import json
import sys
from fractions import Fraction

import numpy as np

from .errors import (
    CorrpressError,
    InputError,
    ShapeMismatch,
    SolverError,
)
from .relations import (
    Decomposition,
    FiniteCorrespondence,
    Potential,
    decomposition_validate,
)
from .pressure import (
    decomposition_pressure,
    path_pressure_sequence,
    spectral_pressure,
)
from .kernels import (
    Partition,
    TransitionKernel,
    kernel_entropy,
    pushforward,
    validate_measure,
)
from .polytope import (
    extremal_decomposition,
    invariant_polytope_extremes,
    is_invariant,
)
from .variational import (
    SolverConfig,
    abstract_kernel_entropy,
    directional_derivative,
    gibbs_equilibrium,
    measure_pressure,
    tangent_functionals,
)
from .intervals import (
    IntervalCorrespondence,
    PiecewiseLinearMap,
    example_branches,
    example_report,
    grid_discretize,
    markov_model,
)
from . import verify as verify_mod

EXAMPLE_FIXTURE = "interval-example"


def _f(x):
    # every float that reaches a report goes through 12 significant digits
    return float(f"{float(x):.12g}")


def _flist(xs):
    return [_f(x) for x in xs]


def _sanitize(obj):
    """Make an arbitrary result tree JSON-clean with rounded floats."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _f(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_sanitize(v) for v in obj]
    return obj


class Inputs:
    """Collects the digest block of a run report as files are loaded."""

    def __init__(self):
        self.record = {}

    def load(self, flag, path):
        if path is None:
            return None
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ShapeMismatch(f"cannot read {path}: {exc}") from exc
        self.record[flag] = {
            "path": path,
            "sha256": hashlib.sha256(raw).hexdigest(),
        }
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ShapeMismatch(f"cannot parse {path}: {exc}") from exc

    def builtin(self, flag, name):
        self.record[flag] = {"path": name, "sha256": None}


# ---------------------------------------------------------------- documents

def _corr_from(doc):
    if not isinstance(doc, dict) or "n_states" not in doc or "edges" not in doc:
        raise ShapeMismatch("correspondence document needs n_states and edges")
    edges = [(int(i), int(j)) for i, j in doc["edges"]]
    return FiniteCorrespondence(int(doc["n_states"]), edges, doc.get("labels"))


def _potential_from(corr, doc):
    if doc is None:
        return Potential.zero(corr)
    if not isinstance(doc, dict) or "edges" not in doc:
        raise ShapeMismatch("potential document needs an edges array")
    # absent edges default to zero; foreign pairs are rejected downstream
    return Potential(corr, {(int(i), int(j)): float(v) for i, j, v in doc["edges"]})


def _measure_from(corr, doc):
    if not isinstance(doc, dict) or "weights" not in doc:
        raise ShapeMismatch("measure document needs a weights array")
    return validate_measure(corr.n_states, [float(w) for w in doc["weights"]])


def _kernel_from(corr, doc):
    if not isinstance(doc, dict) or "rows" not in doc:
        raise ShapeMismatch("kernel document needs a rows array")
    if len(doc["rows"]) != corr.n_states:
        raise ShapeMismatch("kernel rows do not match the state count")
    # reparsing rounded probabilities must pass, hence the looser sum check
    return TransitionKernel.from_rows(corr, doc["rows"], tol=1e-9)


def _pair_from(corr, doc):
    if not isinstance(doc, dict) or "edges" not in doc:
        raise ShapeMismatch("pair measure document needs an edges array")
    index = corr.edge_index()
    vec = np.zeros(corr.n_edges)
    for i, j, w in doc["edges"]:
        e = (int(i), int(j))
        if e not in index:
            raise ShapeMismatch(f"pair {e} is not an edge")
        vec[index[e]] += float(w)
    return vec


def _map_from(doc):
    if not isinstance(doc, dict) or "breakpoints" not in doc or "pieces" not in doc:
        raise ShapeMismatch("map document needs breakpoints and pieces")
    pieces = []
    for p in doc["pieces"]:
        if isinstance(p, dict):
            pieces.append((p["slope"], p["intercept"]))
        else:
            pieces.append((p[0], p[1]))
    return PiecewiseLinearMap(doc["breakpoints"], pieces)


def _config_from(doc):
    if doc is None:
        return SolverConfig()
    allowed = {"max_iterations", "tolerance", "step_rule", "step_size",
               "divergence_floor"}
    bad = set(doc) - allowed
    if bad:
        raise ShapeMismatch(f"unknown solver options {sorted(bad)}")
    return SolverConfig(**doc)


def _corr_doc(corr):
    doc = {"n_states": corr.n_states,
           "edges": [[i, j] for i, j in corr.edges]}
    if corr.labels is not None:
        doc["labels"] = list(corr.labels)
    return doc


def _measure_doc(weights):
    return {"weights": _flist(weights)}


def _kernel_doc(kernel):
    rows = []
    for i in range(kernel.corr.n_states):
        row = [[j, _f(kernel.matrix[i, j])] for j in kernel.corr.successors(i)
               if kernel.matrix[i, j] > 0.0]
        rows.append(row)
    return {"rows": rows}


def _pair_doc(corr, vec):
    return {"edges": [[i, j, _f(w)] for (i, j), w in zip(corr.edges, vec)
                      if w != 0.0]}


def _potential_doc(corr, values):
    return {"edges": [[i, j, _f(v)] for (i, j), v in zip(corr.edges, values)]}


# ---------------------------------------------------------------- reports

def _emit(command, inputs, results, output, status="ok", error=None):
    doc = {"command": command,
           "inputs": inputs.record if isinstance(inputs, Inputs) else inputs,
           "results": results,
           "status": status,
           "error": error}
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands

def cmd_pressure(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    phi = _potential_from(corr, inputs.load("phi", args.phi))
    results = {"method": args.method}
    if args.method in ("spectral", "both"):
        spec = spectral_pressure(corr, phi)
        results["spectral"] = {
            "pressure": _f(spec.pressure),
            "components": [list(c) for c in spec.components],
            "log_radii": [None if r == -np.inf else _f(r) for r in spec.log_radii],
            "dominant": list(spec.dominant),
        }
    if args.method in ("paths", "both"):
        seq = path_pressure_sequence(corr, phi, args.n)
        results["paths"] = {"n": args.n, "value": _f(seq[-1])}
    if args.method == "both":
        results["gap"] = _f(abs(results["spectral"]["pressure"]
                                - results["paths"]["value"]))
    _emit("pressure", inputs, results, args.output)
    return 0


def cmd_verify(args):
    checks = verify_mod.run_suite(args.suite)
    rows = []
    for c in checks:
        rows.append({"name": c.name, "passed": bool(c.passed),
                     "gap": None if c.gap is None else _f(c.gap),
                     "detail": c.detail})
        status = "pass" if c.passed else "FAIL"
        sys.stderr.write(f"{status:4s}  {c.name}  ({c.seconds:.2f}s)\n")
    passed = all(c.passed for c in checks)
    results = {"suite": args.suite,
               "checks": rows,
               "passed": passed,
               "counts": {"passed": sum(1 for c in checks if c.passed),
                          "total": len(checks)}}
    _emit("verify", {}, results, args.output)
    return 0 if passed else 1


def cmd_equilibrium(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    phi = _potential_from(corr, inputs.load("phi", args.phi))
    eq = gibbs_equilibrium(corr, phi)
    results = {
        "pressure": _f(eq.pressure),
        "entropy": _f(eq.entropy),
        "integral": _f(eq.integral),
        "dominant_class": list(eq.dominant_class),
        "measure": _measure_doc(eq.measure),
        "kernel": _kernel_doc(eq.kernel),
        "pair": _pair_doc(corr, eq.pair),
    }
    _emit("equilibrium", inputs, results, args.output)
    return 0


def cmd_mpressure(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    phi = _potential_from(corr, inputs.load("phi", args.phi))
    mu = _measure_from(corr, inputs.load("mu", args.mu))
    cfg = _config_from(inputs.load("config", args.config))
    res = measure_pressure(corr, phi, mu,
                           tol=min(cfg.tolerance, 1e-10),
                           max_iter=max(cfg.max_iterations, 400000))
    results = {
        "value": _f(res.value),
        "iterations": res.iterations,
        "residual": _f(res.marginal_error),
        "converged": True,
        "boundary_flag": bool(res.face_restricted),
        "pair": _pair_doc(corr, res.pair),
        "kernel": _kernel_doc(res.kernel),
    }
    _emit("mpressure", inputs, results, args.output)
    return 0


def cmd_aentropy(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    nu = _pair_from(corr, inputs.load("nu", args.nu))
    cfg = _config_from(inputs.load("config", args.config))
    res = abstract_kernel_entropy(corr, nu, cfg)
    results = {
        "value": None if res.minus_infinity else _f(res.value),
        "minus_infinity": bool(res.minus_infinity),
        "iterations": res.iterations,
        "residual": _f(res.residual),
        "converged": bool(res.converged),
        "boundary_flag": bool(res.boundary),
        "potential": _flist(res.potential),
    }
    _emit("aentropy", inputs, results, args.output)
    return 0


def cmd_invariant(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    mu = _measure_from(corr, inputs.load("mu", args.mu))
    chk = is_invariant(corr, mu, mode=args.method)
    results = {
        "invariant": bool(chk.invariant),
        "modes": {k: bool(v) for k, v in sorted(chk.by_mode.items())},
        "witness_pair": None,
        "witness_kernel": None,
        "violating_subset": None,
    }
    if chk.witness_pair is not None:
        results["witness_pair"] = _pair_doc(corr, chk.witness_pair)
    if chk.witness_kernel is not None:
        results["witness_kernel"] = _kernel_doc(chk.witness_kernel)
        gap = float(np.sum(np.abs(pushforward(mu, chk.witness_kernel) - mu)))
        results["marginal_gap"] = _f(gap)
    if chk.violating_subset is not None:
        results["violating_subset"] = sorted(chk.violating_subset)
    _emit("invariant", inputs, results, args.output)
    return 0


def cmd_extremes(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    ext = invariant_polytope_extremes(corr)
    results = {
        "n_extremes": len(ext.extremes),
        "extremes": [_flist(e) for e in ext.extremes],
        "n_pair_vertices": len(ext.pair_vertices),
    }
    mu_doc = inputs.load("mu", args.mu)
    if mu_doc is not None:
        mu = _measure_from(corr, mu_doc)
        idxs, weights, extremes = extremal_decomposition(corr, mu, ext)
        mix = np.zeros(corr.n_states)
        for k, w in zip(idxs, weights):
            mix += w * np.asarray(extremes[k], dtype=float)
        results["decomposition"] = {
            "indices": list(idxs),
            "weights": _flist(weights),
            "residual": _f(float(np.sum(np.abs(mix - mu)))),
        }
    _emit("extremes", inputs, results, args.output)
    return 0


def cmd_kentropy(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    kernel = _kernel_from(corr, inputs.load("kernel", args.kernel))
    mu = _measure_from(corr, inputs.load("mu", args.mu))
    partition = None
    cfg_doc = inputs.load("config", args.config)
    if cfg_doc is not None:
        if "cells" not in cfg_doc:
            raise ShapeMismatch("partition document needs a cells array")
        partition = Partition(corr.n_states, cfg_doc["cells"])
    seq, value = kernel_entropy(mu, kernel, args.n, partition)
    results = {"value": _f(value), "n": args.n, "sequence": _flist(seq)}
    _emit("kentropy", inputs, results, args.output)
    return 0


def cmd_derivative(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    phi = _potential_from(corr, inputs.load("phi", args.phi))
    psi_doc = inputs.load("nu", args.nu)
    if psi_doc is None:
        raise ShapeMismatch("derivative needs a direction document via --nu")
    psi = _potential_from(corr, psi_doc)
    der = directional_derivative(corr, phi, psi, side=args.method)
    tset = tangent_functionals(corr, phi)
    results = {
        "side": args.method,
        "plus": None if der.plus is None else _f(der.plus),
        "minus": None if der.minus is None else _f(der.minus),
        "plus_fd": None if der.plus_fd is None else _f(der.plus_fd),
        "minus_fd": None if der.minus_fd is None else _f(der.minus_fd),
        "is_gateaux": None if der.is_gateaux is None else bool(der.is_gateaux),
        "tangent_count": len(tset.tangents),
        "unique_tangent": bool(tset.is_unique),
    }
    _emit("derivative", inputs, results, args.output)
    return 0


def _branches_from(doc):
    if isinstance(doc, dict) and "branches" in doc:
        return IntervalCorrespondence([_map_from(b) for b in doc["branches"]])
    return IntervalCorrespondence([_map_from(doc)])


def cmd_discretize(args):
    inputs = Inputs()
    method = args.method
    if args.input == EXAMPLE_FIXTURE:
        inputs.builtin("input", EXAMPLE_FIXTURE)
        if method == "auto":
            method = "example"
        doc = None
    else:
        doc = inputs.load("input", args.input)
        if method == "auto":
            method = "markov" if isinstance(doc, dict) and "cells" in doc else "grid"

    if method == "example":
        if doc is not None:
            raise ShapeMismatch(
                f"the example route needs --input {EXAMPLE_FIXTURE}")
        results = _sanitize(example_report(args.grid))
    elif method == "grid":
        system = example_branches() if doc is None else _branches_from(doc)
        grid = grid_discretize(system, args.grid)
        pres = spectral_pressure(grid.corr, Potential.zero(grid.corr))
        results = {
            "resolution": grid.resolution,
            "n_states": grid.corr.n_states,
            "pressure": _f(pres.pressure),
            "correspondence": _corr_doc(grid.corr),
        }
    elif method == "markov":
        if doc is None or "cells" not in doc:
            raise ShapeMismatch("the markov route needs a map document "
                                "with a cells array")
        model = markov_model(_map_from(doc), doc["cells"])
        pres = spectral_pressure(model.corr, Potential.zero(model.corr))
        results = {
            "n_states": model.corr.n_states,
            "pressure": _f(pres.pressure),
            "correspondence": _corr_doc(model.corr),
        }
    else:
        raise ShapeMismatch(f"unknown discretize method {method!r}")
    _emit("discretize", inputs, results, args.output)
    return 0


def cmd_relabel(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    cfg = inputs.load("config", args.config)
    if cfg is None or "theta" not in cfg:
        raise ShapeMismatch("relabel needs --config with a theta array")
    theta = [int(t) for t in cfg["theta"]]
    if sorted(theta) != list(range(corr.n_states)):
        raise ShapeMismatch("theta is not a permutation of the states")
    relabeled = corr.relabel(theta)
    results = {"theta": theta, "correspondence": _corr_doc(relabeled)}
    phi_doc = inputs.load("phi", args.phi)
    if phi_doc is not None:
        phi = _potential_from(corr, phi_doc).relabel(theta)
        results["potential"] = _potential_doc(relabeled, phi.values)
    mu_doc = inputs.load("mu", args.mu)
    if mu_doc is not None:
        mu = _measure_from(corr, mu_doc)
        out = np.zeros_like(mu)
        for i, w in enumerate(mu):
            out[theta[i]] = w
        results["measure"] = _measure_doc(out)
    ker_doc = inputs.load("kernel", args.kernel)
    if ker_doc is not None:
        kernel = _kernel_from(corr, ker_doc).relabel(theta)
        results["kernel"] = _kernel_doc(kernel)
    _emit("relabel", inputs, results, args.output)
    return 0


def cmd_decompose(args):
    inputs = Inputs()
    corr = _corr_from(inputs.load("input", args.input))
    phi = _potential_from(corr, inputs.load("phi", args.phi))
    cfg = inputs.load("config", args.config)
    if cfg is None or "blocks" not in cfg:
        raise ShapeMismatch("decompose needs --config with a blocks array")
    decomp = Decomposition([[int(s) for s in b] for b in cfg["blocks"]])
    report = decomposition_validate(corr, decomp)
    results = {"valid": bool(report["valid"]),
               "validation": _sanitize(report)}
    if report["valid"]:
        dp = decomposition_pressure(corr, phi, decomp)
        spec = spectral_pressure(corr, phi)
        results["value"] = _f(dp.value)
        results["block_values"] = _flist(dp.block_values)
        results["spectral"] = _f(spec.pressure)
        results["gap"] = _f(abs(dp.value - spec.pressure))
    _emit("decompose", inputs, results, args.output)
    return 0


# ---------------------------------------------------------------- parser

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="corrpress",
        description="Pressure, entropy and invariant-measure computations "
                    "for finite correspondences.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        for flag, kwargs in flags:
            p.add_argument(flag, **kwargs)
        p.add_argument("--output", default="-",
                       help="report destination, - for stdout")
        p.set_defaults(func=func)
        return p

    corr_flag = ("--input", {"required": True,
                             "help": "correspondence document"})
    phi_flag = ("--phi", {"default": None, "help": "potential document"})

    add("pressure", cmd_pressure, "topological pressure", [
        corr_flag, phi_flag,
        ("--method", {"choices": ["spectral", "paths", "both"],
                      "default": "both"}),
        ("--n", {"type": int, "default": 1000,
                 "help": "path-sum horizon"}),
    ])
    add("verify", cmd_verify, "run a verification suite", [
        ("--suite", {"choices": sorted(verify_mod.SUITES),
                     "default": "fast"}),
    ])
    add("equilibrium", cmd_equilibrium, "Gibbs equilibrium pair", [
        corr_flag, phi_flag,
    ])
    add("mpressure", cmd_mpressure, "pressure of a fixed measure", [
        corr_flag, phi_flag,
        ("--mu", {"required": True, "help": "measure document"}),
        ("--config", {"default": None, "help": "solver options document"}),
    ])
    add("aentropy", cmd_aentropy, "abstract entropy of a pair measure", [
        corr_flag,
        ("--nu", {"required": True, "help": "pair measure document"}),
        ("--config", {"default": None, "help": "solver options document"}),
    ])
    add("invariant", cmd_invariant, "invariance check with witness", [
        corr_flag,
        ("--mu", {"required": True, "help": "measure document"}),
        ("--method", {"choices": ["lp", "subsets", "both"],
                      "default": "both"}),
    ])
    add("extremes", cmd_extremes, "invariant polytope extreme points", [
        corr_flag,
        ("--mu", {"default": None,
                  "help": "measure to decompose over the extremes"}),
    ])
    add("kentropy", cmd_kentropy, "kernel entropy along a measure", [
        corr_flag,
        ("--kernel", {"required": True, "help": "kernel document"}),
        ("--mu", {"required": True, "help": "measure document"}),
        ("--n", {"type": int, "default": 20, "help": "sequence horizon"}),
        ("--config", {"default": None, "help": "partition document"}),
    ])
    add("derivative", cmd_derivative, "directional pressure derivative", [
        corr_flag, phi_flag,
        ("--nu", {"default": None, "help": "direction potential document"}),
        ("--method", {"choices": ["plus", "minus", "both"],
                      "default": "both"}),
    ])
    add("discretize", cmd_discretize, "interval system to finite relation", [
        ("--input", {"required": True,
                     "help": f"map document or {EXAMPLE_FIXTURE}"}),
        ("--grid", {"type": int, "default": 1024, "help": "resolution"}),
        ("--method", {"choices": ["auto", "grid", "markov", "example"],
                      "default": "auto"}),
    ])
    add("relabel", cmd_relabel, "push documents through a relabeling", [
        corr_flag, phi_flag,
        ("--mu", {"default": None, "help": "measure document"}),
        ("--kernel", {"default": None, "help": "kernel document"}),
        ("--config", {"default": None, "help": "permutation document"}),
    ])
    add("decompose", cmd_decompose, "block decomposition pressure", [
        corr_flag, phi_flag,
        ("--config", {"default": None, "help": "blocks document"}),
    ])
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CorrpressError as exc:
        code = 3 if isinstance(exc, SolverError) else 2
        error = {"type": type(exc).__name__, "message": str(exc)}
        _emit(args.command, {}, {}, args.output, status="error", error=error)
        sys.stderr.write(f"error: {exc}\n")
        return code
    except (ValueError, KeyError, TypeError) as exc:
        # malformed documents surface here when shapes are beyond parsing
        error = {"type": type(exc).__name__, "message": str(exc)}
        _emit(args.command, {}, {}, args.output, status="error", error=error)
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``gwnorm --graph G --delta X (--identity | --matrix D.csv)``.

Prints a single JSON report on stdout; logs go to stderr.
"""

import argparse
import json
from dataclasses import dataclass, field
import logging
import math
import sys
import time

import numpy as np

from . import exact, mc, series
from .errors import (
    GWNormError, NonConvergenceError, ParseError, PreconditionError,
    UnsupportedStructureError,
)
from .graph import is_chordal, read_graph
from .special import LogValue

log = logging.getLogger("gwnorm")

METHODS = ("auto", "chordal", "edge-removal", "series", "mc", "quadrature")
SCHEMA = 1


@dataclass
class EvalRequest:
    graph: str
    delta: float
    matrix: str = None
    method: str = "auto"
    tol: float = 1e-8
    max_q: int = 40
    max_l: int = 60
    samples: int = 1_000_000
    seed: int = 0
    output: str = "value"
    c_constant: bool = False
    workers: int = 1


@dataclass
class EvalReport:
    status: str = "ok"
    log_value: float = None
    sign: int = None
    symbolic: dict = None
    method_used: str = None
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    error: str = None

    def to_obj(self, output):
        obj = {"schema": SCHEMA, "status": self.status, "log_value": self.log_value,
               "sign": self.sign, "method_used": self.method_used}
        if output in ("symbolic", "both"):
            obj["symbolic"] = self.symbolic
        obj["diagnostics"] = self.diagnostics
        obj["timing"] = self.timing
        if self.error is not None:
            obj["error"] = self.error
        return obj


def dumps(obj):
    """JSON with every real written to 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return "%.17g" % x
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_matrix(path, p, sym_tol=1e-12):
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read matrix file {path}: {exc}") from None
    if a.shape != (p, p):
        raise ParseError(f"matrix is {a.shape[0]}x{a.shape[1]}, graph has {p} vertices")
    if not np.all(np.isfinite(a)):
        raise ParseError("matrix has non-finite entries")
    if np.max(np.abs(a - a.T)) > sym_tol:
        raise ParseError("matrix is not symmetric to 1e-12")
    return exact.SPDMatrix((a + a.T) / 2)


def _edges1(es):
    return [[i + 1, j + 1] for i, j in es]


def _series_diag(sv):
    d = sv.diagnostics
    out = {"terms_used": sv.terms_used, "tail_estimate": sv.tail_estimate,
           "rel_tail": sv.rel_tail, "converged": sv.converged, "certified": sv.certified}
    if "ordering" in d:
        out["ordering"] = [v + 1 for v in d["ordering"]]
    if "fills" in d:
        out["fill_edges"] = _edges1(d["fills"])
    if "steps" in d:
        out["steps"] = [{"edge": [s["edge"][0] + 1, s["edge"][1] + 1], "d": s["d"],
                         "route": s["route"], "certified": s["certified"],
                         "terms": s["terms"], "rel_tail": s["rel_tail"]} for s in d["steps"]]
    out["caps"] = d.get("caps")
    return out


def _evaluate(req, g, D, delta):
    """(LogValue, method, symbolic ExactConstant or None, diagnostics)."""
    method = req.method
    chordal, ord = is_chordal(g)
    if method == "auto":
        if chordal:
            method = "chordal"
        elif D.is_identity():
            method = "edge-removal"
        else:
            method = "series"
    if method == "chordal":
        if not chordal:
            raise UnsupportedStructureError("graph is not chordal; use edge-removal or series")
        val = exact.chordal_general_D(g, ord, D, delta)
        sym = exact.chordal_identity(g, ord) if D.is_identity() else None
        return val, method, sym, {"ordering": [v + 1 for v in ord.perm], "fill_edges": []}
    if method == "edge-removal":
        if not D.is_identity():
            raise PreconditionError("edge-removal closed form needs D = I; use --method series")
        pipe = exact.identity_pipeline(g)
        diag = {"ordering": [v + 1 for v in pipe.ordering.perm],
                "fill_edges": _edges1(pipe.fills),
                "steps": [{"edge": [s.edge[0] + 1, s.edge[1] + 1], "d": s.d,
                           "certified": s.certified} for s in pipe.steps],
                "certified": pipe.certified}
        if not pipe.certified:
            log.warning("edge-removal step outside the proven reduction; value may be inexact")
        return pipe.constant.evaluate(delta), method, pipe.constant, diag
    if method == "series":
        caps = series.Caps(max_q=req.max_q, max_l=req.max_l, tol=req.tol)
        sv = series.general_D_driver(g, D, delta, req.tol, caps)
        if not sv.certified:
            log.warning("a fill-removal step is outside the proven reduction; value may be inexact")
        diag = _series_diag(sv)
        diag["caps"] = {"max_q": caps.max_q, "max_l": caps.max_l, "max_terms": caps.max_terms,
                        "tol": caps.tol}
        return sv.value, method, None, diag
    if method == "mc":
        est = mc.estimate(g, None, delta, D, n=req.samples, seed=req.seed, workers=req.workers)
        diag = {"samples": est.n, "seed": est.seed, "std_error": est.std_error,
                "rel_se": est.rel_se, "ess": est.ess, "proposal": est.proposal,
                "ordering": [v + 1 for v in est.ordering]}
        return LogValue(1, est.log_mean), method, None, diag
    if method == "quadrature":
        return mc.quadrature_small(g, delta, D), method, None, {}
    raise PreconditionError(f"unknown method {method!r}")


def run(req):
    t0 = time.perf_counter()
    rep = EvalReport()
    g = read_graph(req.graph)
    D = exact.SPDMatrix.identity(g.p) if req.matrix is None else read_matrix(req.matrix, g.p)
    if req.c_constant:
        if not req.delta > 1:
            raise PreconditionError(f"C_G needs delta_c > 1 (got {req.delta})")
        delta = (req.delta - 2) / 2
    else:
        if not req.delta > -1:
            raise PreconditionError(f"delta must exceed -1 (got {req.delta})")
        delta = req.delta
    if req.output == "symbolic" and not (D.is_identity() and req.method in ("auto", "chordal", "edge-removal")):
        raise PreconditionError("symbolic output is available only for exact D = I methods")
    val, method, sym, diag = _evaluate(req, g, D, delta)
    if req.c_constant:
        def log_i(_g, _D, _d):
            return val

        val = exact.c_from_i(g, req.delta, D, log_i)
        diag["c_constant"] = {"delta_c": req.delta, "delta": delta,
                              "log2_shift": g.p * req.delta / 2 + g.num_edges}
    rep.log_value = val.log_abs
    rep.sign = val.sign
    rep.method_used = method
    rep.diagnostics = diag
    if sym is not None:
        rep.symbolic = sym.to_json()
        rep.symbolic["argument"] = "(delta_c - 2)/2" if req.c_constant else "delta"
    rep.diagnostics["delta"] = req.delta
    rep.timing = {"seconds": time.perf_counter() - t0}
    return rep


def normalizing_constant_C(req):
    req.c_constant = True
    return run(req)


def build_parser():
    ap = argparse.ArgumentParser(prog="gwnorm", description=__doc__.splitlines()[0])
    ap.add_argument("--graph", required=True, help="graph file ('p n' header, 1-based edges)")
    ap.add_argument("--delta", type=float, required=True, help="delta (or delta_c with --c-constant)")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--identity", action="store_true", help="D = I (default)")
    src.add_argument("--matrix", help="CSV file with the p x p matrix D")
    ap.add_argument("--method", choices=METHODS, default="auto")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--max-q", type=int, default=40)
    ap.add_argument("--max-l", type=int, default=60)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo chunks")
    ap.add_argument("--c-constant", action="store_true",
                    help="compute C_G with --delta meaning delta_c")
    ap.add_argument("--output", choices=("value", "symbolic", "both"), default="value")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    req = EvalRequest(graph=args.graph, delta=args.delta, matrix=args.matrix, method=args.method,
                      tol=args.tol, max_q=args.max_q, max_l=args.max_l, samples=args.samples,
                      seed=args.seed, output=args.output, c_constant=args.c_constant,
                      workers=args.workers)
    try:
        rep = run(req)
        code = 0
    except NonConvergenceError as exc:
        rep = EvalReport(status="nonconverged", error=str(exc), method_used=req.method)
        part = exc.partial
        if isinstance(part, series.SeriesValue):
            rep.log_value, rep.sign = part.value.log_abs, part.value.sign
            rep.diagnostics = _series_diag(part)
        elif isinstance(part, (int, float)) and part > 0:
            rep.log_value, rep.sign = math.log(part), 1
        code = exc.exit_code
    except GWNormError as exc:
        status = {2: "parse_error", 3: "precondition_error", 5: "unsupported"}.get(exc.exit_code, "error")
        rep = EvalReport(status=status, error=str(exc), method_used=req.method)
        code = exc.exit_code
    log.info("finished with exit code %d", code)
    print(dumps(rep.to_obj(req.output)))
    return code


if __name__ == "__main__":
    sys.exit(main())

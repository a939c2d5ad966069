"""Command-line front end.

    periodica COMMAND CURVE [CURVE2] [options]

CURVE is a path to a curve file or an inline polynomial string.  It may also
be a JSON report written by ``periodica periods``; its period matrix is then
used directly.  The report is printed as a short summary, and written as JSON
to ``--json PATH`` (``-`` for stdout).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import gmpy2

from . import __version__
from .abelian import (automorphism_group, decompose, endomorphism_structure, homomorphisms,
                      symplectic_isomorphisms)
from .curve import baker_numerators
from .errors import InputError, ParseError, PeriodicaError, PrecisionError, RiemannCheckFailed
from .homology import symplectic_basis, transform_gram
from .numerics import PrecisionContext, mpc, mpfr
from .periods import PeriodMatrix, riemann_matrix
from .pipeline import RiemannSurface

SCHEMA = "periodica/1"
COMMANDS = ("genus", "monodromy", "homology", "periods", "riemann", "endo", "hom", "isom", "aut",
            "decompose")
TWO_CURVES = ("hom", "isom")
NEEDS_PERIODS = ("periods", "riemann", "endo", "hom", "isom", "aut", "decompose")
MAX_ESCALATIONS = 3

log = logging.getLogger("periodica")


@dataclass
class JobConfig:
    command: str
    curves: list
    precision_bits: int = 100
    differentials: list = field(default_factory=list)
    cache_dir: str | None = None
    output: str | None = None
    threads: int = 1
    auto_prec: bool = False
    dump_skeleton: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command {self.command!r}")
        want = 2 if self.command in TWO_CURVES else 1
        if len(self.curves) != want:
            raise ParseError(f"{self.command} takes {want} curve(s), got {len(self.curves)}")
        if len(self.differentials) > want:
            raise ParseError("more --differentials files than curves")
        if self.precision_bits < 53:
            raise ParseError("--prec must be at least 53")
        if self.threads < 1:
            raise ParseError("--threads must be positive")


# ---------------------------------------------------------------------------
# input

def read_source(arg: str) -> str:
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read()
    return arg


def read_differentials(arg: str) -> list[str]:
    """One numerator per line (``#`` comments allowed), or a comma list."""
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            lines = [ln.split("#", 1)[0].strip() for ln in fh]
        return [ln for ln in lines if ln]
    return [s.strip() for s in arg.split(",") if s.strip()]


def _load_report(text: str):
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise ParseError(f"malformed JSON input: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise ParseError("JSON input is not a periodica report")
    for cur in doc.get("curves", []):
        if "periods" in cur:
            return cur["periods"]
    raise ParseError("report carries no period matrix; produce one with `periodica periods`")


def period_matrix_from_json(doc: dict) -> PeriodMatrix:
    bits = int(doc["precision_bits"])
    with gmpy2.context(precision=bits + 20):
        omega = [[mpc(mpfr(re), mpfr(im)) for re, im in row] for row in doc["omega"]]
    return PeriodMatrix(omega, int(doc["genus"]), bits, doc.get("basis", {}))


# ---------------------------------------------------------------------------
# per-curve work

class CurveJob:
    """One input: either a curve to run through the pipeline or a stored Ω."""

    def __init__(self, source: str, diffs, prec, cfg: JobConfig, skeleton=None):
        self.source = source
        self.stored = None
        self.surface = None
        stripped = source.lstrip()
        if stripped.startswith("{"):
            doc = _load_report(stripped)
            self.stored = period_matrix_from_json(doc)
        else:
            self.surface = RiemannSurface(source, prec, diffs, cfg.threads, cfg.cache_dir, skeleton)

    @property
    def skeleton(self):
        if self.surface is None:
            return None
        return self.surface.__dict__.get("skeleton")

    def topology(self) -> dict:
        S = self.surface
        out = {"source": S.curve.source, "variables": list(S.curve.variables),
               "field": S.curve.field.describe()}
        mono = S.monodromy
        if S.user_differentials is None:
            sym = symplectic_basis(S.cycles, S.gram)
        else:
            sym = S.symplectic
        G = transform_gram(sym.change_of_basis, S.gram)
        g = sym.genus
        J = [[(1 if j == i + g else -1 if i == j + g else 0) for j in range(2 * g)] for i in range(2 * g)]
        out["genus"] = g
        out["baker_count"] = len(baker_numerators(S.curve))
        out["monodromy"] = mono.to_json()
        out["monodromy"]["riemann_hurwitz_genus"] = mono.genus
        out["homology"] = {"cycle_rank": len(S.cycles), "divisors": sym.divisors,
                           "change_of_basis": sym.change_of_basis, "certificate_ok": G == J}
        return out

    def periods(self) -> PeriodMatrix:
        return self.stored if self.stored is not None else self.surface.period_matrix


def _curve_report(job: CurveJob, cfg: JobConfig, with_periods: bool) -> dict:
    if job.stored is not None:
        P = job.stored
        out = {"source": "period matrix", "genus": P.genus}
    else:
        out = job.topology()
        if cfg.dump_skeleton:
            out["skeleton"] = job.surface.skeleton.to_json()
        if not with_periods:
            return out
        P = job.periods()
    if with_periods:
        out["periods"] = P.to_json()
        digits = max(10, int(P.precision_bits * 0.30103))
        R = riemann_matrix(P)
        out["riemann"] = R.to_json(digits)
        out["riemann"]["imag_eigenvalues"] = R.imag_eigenvalues
    return out


def _ctx(P: PeriodMatrix) -> PrecisionContext:
    return PrecisionContext(P.precision_bits)


def _payload(cfg: JobConfig, jobs: list[CurveJob]) -> dict:
    cmd = cfg.command
    if cmd in ("genus", "monodromy", "homology", "periods", "riemann"):
        return {}
    P = jobs[0].periods()
    ctx = _ctx(P)
    if cmd == "hom":
        P2 = jobs[1].periods()
        ctx = PrecisionContext(min(P.precision_bits, P2.precision_bits))
        return {"hom": homomorphisms(P, P2, ctx).to_json()}
    if cmd == "isom":
        P2 = jobs[1].periods()
        ctx = PrecisionContext(min(P.precision_bits, P2.precision_bits))
        return {"isom": symplectic_isomorphisms(P, P2, ctx).to_json()}
    if cmd == "aut":
        S = automorphism_group(P, ctx)
        out = S.to_json(with_maps=False)
        out["matrices"] = [h.R for h in S.maps]
        return {"aut": out}
    st = endomorphism_structure(P, ctx)
    if cmd == "endo":
        return {"endo": st.to_json(), "hom": st.hom.to_json()}
    return {"endo": st.to_json(), "factors": [f.to_json() for f in decompose(P, st, ctx)]}


def run_once(cfg: JobConfig, prec: int, skeletons: dict | None = None) -> dict:
    """One pass at a fixed precision.  Skeletons found in (and added to)
    ``skeletons`` are reused, since they do not depend on the precision."""
    skeletons = {} if skeletons is None else skeletons
    jobs = []
    for i, src in enumerate(cfg.curves):
        diffs = read_differentials(cfg.differentials[i]) if i < len(cfg.differentials) else None
        jobs.append(CurveJob(read_source(src), diffs, prec, cfg, skeletons.get(i)))
    report = {"schema": SCHEMA, "version": __version__, "command": cfg.command, "precision_bits": prec}
    try:
        with_periods = cfg.command in NEEDS_PERIODS
        report["curves"] = [_curve_report(j, cfg, with_periods) for j in jobs]
        report["result"] = _payload(cfg, jobs)
    finally:
        for i, j in enumerate(jobs):
            if j.skeleton is not None:
                skeletons[i] = j.skeleton
    return report


def run(cfg: JobConfig) -> tuple[int, dict]:
    """Run a job with optional precision escalation; returns (exit code, report)."""
    prec = cfg.precision_bits
    failures = []
    skeletons: dict = {}
    for attempt in range(MAX_ESCALATIONS + 1):
        try:
            report = run_once(cfg, prec, skeletons)
            if failures:
                report["escalations"] = failures
            return 0, report
        except (PrecisionError, RiemannCheckFailed) as exc:
            failures.append({"precision_bits": prec, "error": type(exc).__name__,
                             "module": exc.module, "message": str(exc)})
            if not cfg.auto_prec or attempt == MAX_ESCALATIONS:
                return exc.exit_code, _error_report(cfg, exc, failures)
            log.info("%s at %d bits; retrying at %d bits", type(exc).__name__, prec, 2 * prec)
            prec *= 2
        except PeriodicaError as exc:
            return exc.exit_code, _error_report(cfg, exc, failures)


def _error_report(cfg, exc: PeriodicaError, failures) -> dict:
    out = {"schema": SCHEMA, "version": __version__, "command": cfg.command,
           "error": {"type": type(exc).__name__, "module": exc.module, "message": str(exc),
                     "hint": exc.hint, "exit_code": exc.exit_code}}
    if len(failures) > 1:
        out["escalations"] = failures
        kinds = sorted({f["error"] for f in failures})
        out["error"]["summary"] = (f"failed at {len(failures)} precisions "
                                   f"({failures[0]['precision_bits']} to {failures[-1]['precision_bits']} bits): "
                                   + ", ".join(kinds))
    return out


# ---------------------------------------------------------------------------
# output

def summary(report: dict) -> str:
    if "error" in report:
        e = report["error"]
        msg = f"error [{e['module']}] {e['type']}: {e['message']}"
        if e.get("hint"):
            msg += f"\nhint: {e['hint']}"
        if e.get("summary"):
            msg += f"\n{e['summary']}"
        return msg
    cmd = report["command"]
    curves = report["curves"]
    res = report["result"]
    if cmd == "genus":
        return "\n".join(str(c["genus"]) for c in curves)
    if cmd == "monodromy":
        lines = []
        for c in curves:
            m = c["monodromy"]
            for k, cyc in m["generators"].items():
                lines.append(f"{k}: {cyc}")
        return "\n".join(lines)
    if cmd == "homology":
        c = curves[0]
        h = c["homology"]
        return (f"genus {c['genus']}, {h['cycle_rank']} fundamental cycles, "
                f"symplectic certificate {'ok' if h['certificate_ok'] else 'FAILED'}")
    if cmd in ("periods", "riemann"):
        c = curves[0]
        key = "omega" if cmd == "periods" else "tau"
        src = c["periods"] if cmd == "periods" else c["riemann"]
        rows = [" ".join(f"{re}{'+' if not im.startswith('-') else ''}{im}i" for re, im in row)
                for row in src[key]]
        tail = (f"symmetry defect {c['riemann']['symmetry_defect']:.3g}, "
                f"min eigenvalue of Im tau {c['riemann']['min_imag_eigenvalue']:.6g}")
        return "\n".join(rows + [tail])
    if cmd == "hom":
        h = res["hom"]
        return "\n".join([f"rank {h['rank']}"] + [json.dumps(b["R"]) for b in h["basis"]])
    if cmd == "isom":
        return f"{res['isom']['count']} symplectic isomorphisms"
    if cmd == "aut":
        a = res["aut"]
        return (f"order {a['group_order']}, quotient by -1: {a['quotient_by_minus_one_order']}\n"
                f"element orders {a['element_order_histogram']}")
    e = res["endo"]
    if cmd == "endo":
        return (f"rank {e['rank']}, idempotent ranks {e['idempotent_ranks']}, "
                f"isogeny groups {e['isogeny_groups']}")
    return "\n".join(f"factor dim {f['dimension']} x{f['multiplicity']} field {f['field'] or ['QQ']}"
                     for f in res["factors"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="periodica",
                                description="Period matrices of plane curves and their Jacobians.")
    p.add_argument("--version", action="version", version=f"periodica {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("curves", nargs="+", metavar="CURVE", help="curve file, inline polynomial or report")
    p.add_argument("--prec", type=int, default=100, help="working precision in bits (default 100)")
    p.add_argument("--differentials", action="append", default=[], metavar="PATH",
                   help="numerator basis, one per line; repeat once per curve")
    p.add_argument("--cache", metavar="DIR", help="directory for cached edge lifts")
    p.add_argument("--auto-prec", action="store_true",
                   help=f"double the precision on precision failures, up to {MAX_ESCALATIONS} times")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json", metavar="PATH", help="write the JSON report to PATH ('-' for stdout)")
    p.add_argument("--dump-skeleton", action="store_true", help="include the Voronoi skeleton in the report")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = JobConfig(args.command, args.curves, args.prec, args.differentials, args.cache,
                        args.json, args.threads, args.auto_prec, args.dump_skeleton)
        code, report = run(cfg)
    except InputError as exc:
        code = exc.exit_code
        report = {"schema": SCHEMA, "command": args.command,
                  "error": {"type": type(exc).__name__, "module": exc.module, "message": str(exc),
                            "hint": exc.hint, "exit_code": code}}
    except OSError as exc:
        code = 2
        report = {"schema": SCHEMA, "command": args.command,
                  "error": {"type": "OSError", "module": "cli", "message": str(exc), "hint": "",
                            "exit_code": code}}
    text = json.dumps(report, indent=1, sort_keys=True)
    if args.json == "-":
        print(text)
    else:
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        print(summary(report), file=sys.stdout if code == 0 else sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

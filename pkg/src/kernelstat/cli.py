"""Command-line front end: ``kernelstat <command> [flags]``.

Exit status: 0 when the check passes, 2 when it fails with a witness,
1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from importlib import resources

from . import io
from .estimation import (
    LossFunction,
    NotComplete,
    NotSufficient,
    NotUnbiased,
    certify_umvue,
    compare_risks,
    ls_for_statistics,
    rao_blackwellize,
    risks,
)
from .experiment import NoFactorization, check_completeness, check_sufficiency, check_unbiased, factor_through
from .montecarlo import SAMPLING_BACKEND, Z_BAND, empirical_report
from .conditioning import expectation
from .spaces import EXACT, FLOAT, KernelStatError, format_scalar, format_vector, using_tolerance

PASS, FAIL, ERROR = 0, 2, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------

class Table:
    def __init__(self, title: str, header: list[str]):
        self.title = title
        self.header = header
        self.rows: list[list[str]] = []

    def add(self, *cells):
        self.rows.append([c if isinstance(c, str) else _cell(c) for c in cells])


def _cell(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if hasattr(x, "__len__"):
        return format_vector(x)
    return format_scalar(x)


class Report:
    def __init__(self, summary: str, status: int = PASS):
        self.summary = summary
        self.status = status
        self.tables: list[Table] = []
        self.notes: list[str] = []

    def table(self, title, header) -> Table:
        t = Table(title, header)
        self.tables.append(t)
        return t

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            blocks = []
            for t in self.tables:
                buf = _stdio.StringIO()
                w = csv.writer(buf, lineterminator="\n")
                w.writerow(t.header)
                w.writerows(t.rows)
                blocks.append(buf.getvalue())
            return "\n".join(blocks)
        out = [self.summary]
        for t in self.tables:
            widths = [max(len(r[i]) for r in [t.header] + t.rows) for i in range(len(t.header))]
            out.append("")
            out.append(t.title)
            out.append("  ".join(h.ljust(w) for h, w in zip(t.header, widths)).rstrip())
            out.append("  ".join("-" * w for w in widths))
            for r in t.rows:
                out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        out.extend(self.notes)
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _loss(args) -> LossFunction:
    return LossFunction.squared() if args.loss == "squared" else LossFunction.absolute()


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n} is required for this command")


def _lookup(fn, name):
    try:
        return fn(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _witness_table(rep: Report, w):
    t = rep.table("witness (conditional probability of the event given the kernel)",
                  ["event", "target_point", "theta_a", "value_a", "theta_b", "value_b"])
    t.add("{" + w.point + "}", w.target_point, w.theta_a, w.value_a, w.theta_b, w.value_b)


def cmd_check_sufficiency(model, args) -> Report:
    _need(args, "kernel")
    M = _lookup(model.kernel, args.kernel)
    res = check_sufficiency(model.experiment, M)
    if not res:
        rep = Report(f"not sufficient: {args.kernel}", FAIL)
        _witness_table(rep, res.witness)
        return rep
    rep = Report(f"sufficient: {args.kernel}")
    pts = model.experiment.space.points
    t = rep.table("common conditional probabilities P({w} | target point)", ["target_point", *pts])
    for j, w1 in enumerate(M.target.points):
        t.add(w1, *[res.common_version[w].values[j, 0] if w1 in res.common_version[w].defined_on else None
                    for w in pts])
    return rep


def cmd_check_completeness(model, args) -> Report:
    _need(args, "kernel")
    M = _lookup(model.kernel, args.kernel)
    res = check_completeness(model.experiment, M)
    word = "complete" if res else "not complete"
    rep = Report(f"{word}, rank {res.rank}/{res.columns}", PASS if res else FAIL)
    t = rep.table("moment matrix (image probabilities)", ["theta", *M.target.points])
    for theta, row in zip(model.experiment.thetas, res.moment_matrix):
        t.add(theta, *row)
    if not res:
        w = rep.table("witness (zero expectation under every theta)", ["target_point", "value"])
        for p in res.witness.support_points():
            w.add(p, res.witness.scalar(p))
    return rep


def cmd_check_unbiased(model, args) -> Report:
    _need(args, "estimator")
    M = _lookup(model.estimator, args.estimator)
    res = check_unbiased(model.experiment, M)
    rep = Report(f"{'unbiased' if res else 'biased'}: {args.estimator}", PASS if res else FAIL)
    t = rep.table("expectation against estimand", ["theta", "estimand", "expectation", "bias"])
    for theta, P in model.experiment.family.items():
        t.add(theta, model.experiment.f(theta), expectation(P, M), res.bias[theta])
    return rep


def _not_sufficient(exc: NotSufficient, name) -> Report:
    rep = Report(f"not sufficient: {name}", FAIL)
    _witness_table(rep, exc.witness)
    return rep


def cmd_rao_blackwell(model, args) -> Report:
    _need(args, "estimator", "kernel")
    E, W = model.experiment, _loss(args)
    M1 = _lookup(model.estimator, args.estimator)
    M2 = _lookup(model.kernel, args.kernel)
    try:
        res = rao_blackwellize(E, M1, M2)
    except NotSufficient as exc:
        return _not_sufficient(exc, args.kernel)
    cmp = compare_risks(E, W, res.estimator, M1, given=M2)
    rep = Report(f"conditioned {args.estimator} on {args.kernel}: "
                 f"{'dominates' if cmp.dominates else 'does not dominate'}, "
                 f"strict at {len(cmp.strict_at)}/{len(E.thetas)} theta")
    t = rep.table("conditional expectation S", ["target_point", "S"])
    for p in M2.target.points:
        t.add(p, res.function(p) if p in res.function.defined_on else None)
    r = rep.table(f"risk ({W.kind})", ["theta", "risk_before", "risk_after", "jensen_equality", "mean_lift"])
    for theta in E.thetas:
        r.add(theta, cmp.reference[theta], cmp.candidate[theta],
              cmp.equality_diagnosis[theta], cmp.mean_lift[theta])
    return rep


def cmd_risk(model, args) -> Report:
    _need(args, "estimator")
    E, W = model.experiment, _loss(args)
    M = _lookup(model.estimator, args.estimator)
    if args.reference is None:
        rep = Report(f"risk of {args.estimator} ({W.kind})")
        t = rep.table("risk", ["theta", "risk"])
        for theta, v in risks(E, W, M).items():
            t.add(theta, v)
        return rep
    R = _lookup(model.estimator, args.reference)
    cmp = compare_risks(E, W, M, R)
    verdict = "dominates" if cmp.dominates else "does not dominate"
    rep = Report(f"{args.estimator} {verdict} {args.reference} ({W.kind})", PASS if cmp.dominates else FAIL)
    t = rep.table("risk", ["theta", args.estimator, args.reference, "strict"])
    for theta in E.thetas:
        t.add(theta, cmp.candidate[theta], cmp.reference[theta], theta in cmp.strict_at)
    return rep


def _hypothesis_failure(exc, kernel_name) -> Report:
    if isinstance(exc, NotSufficient):
        return _not_sufficient(exc, kernel_name)
    if isinstance(exc, NotComplete):
        rep = Report(f"{exc}", FAIL)
        t = rep.table("witness (zero expectation under every theta)", ["target_point", "value"])
        for p in exc.witness.support_points():
            t.add(p, exc.witness.scalar(p))
        return rep
    rep = Report("biased estimator", FAIL)
    t = rep.table("bias", ["theta", "bias"])
    for theta, b in exc.bias.items():
        t.add(theta, b)
    return rep


def _certificate_tables(rep: Report, model, cert, kernel):
    E = model.experiment
    t = rep.table("UMVUE function", ["target_point", "value"])
    for p in kernel.target.points:
        t.add(p, cert.best.function(p) if p in cert.support else None)
    r = rep.table("risk", ["theta", "umvue_risk", "min_competitor_risk", "max_competitor_risk"])
    for theta in E.thetas:
        comp = [tr.risk_competitor[theta] for tr in cert.trials]
        r.add(theta, next(iter(cert.trials)).risk_best[theta] if cert.trials else None,
              min(comp) if comp else None, max(comp) if comp else None)
    for v in cert.violations:
        rep.notes.append(v)


def cmd_umvue(model, args) -> Report:
    _need(args, "kernel")
    if (args.estimator is None) == (args.statistic is None):
        raise UsageError("umvue needs exactly one of --estimator or --statistic")
    E, W = model.experiment, _loss(args)
    M2 = _lookup(model.kernel, args.kernel)
    try:
        if args.statistic is not None:
            T, grid = _lookup(model.real_statistic, args.statistic)
            ls = ls_for_statistics(E, T, grid, M2, W, args.trials, args.seed)
            cert = ls.umvue
            ok = ls.passed
            rep = Report("", PASS if ok else FAIL)
            f = rep.table("factorization through the kernel", ["target_point", "statistic_point"])
            for p, q in ls.factor.as_dict().items():
                f.add(p, q)
            rep.notes.append(f"factorization verified: {_cell(ls.factor_verified)}; "
                             f"conditional expectation matches factor: {_cell(ls.conditional_matches_factor)}")
        else:
            M1 = _lookup(model.estimator, args.estimator)
            cert = certify_umvue(E, W, M1, M2, args.trials, args.seed)
            ok = cert.passed
            rep = Report("", PASS if ok else FAIL)
    except (NotSufficient, NotComplete, NotUnbiased) as exc:
        return _hypothesis_failure(exc, args.kernel)
    except NoFactorization as exc:
        return _factor_failure(exc, args.statistic)
    bad = sum(1 for tr in cert.trials if tr.violations)
    rep.summary = (f"{'UMVUE certified' if ok else 'UMVUE check failed'}: "
                   f"{len(cert.trials) - bad}/{len(cert.trials)} competitors consistent, seed {cert.seed}")
    _certificate_tables(rep, model, cert, M2)
    return rep


def cmd_simulate(model, args) -> Report:
    _need(args, "estimator")
    E, W = model.experiment, _loss(args)
    M = _lookup(model.estimator, args.estimator)
    thetas = E.thetas if args.theta is None else [args.theta]
    for th in thetas:
        if th not in E.family:
            raise UsageError(f"unknown theta {th!r}; choose from {', '.join(E.thetas)}")
    reports = [empirical_report(E, W, M, th, args.n, args.seed, counter=c) for c, th in enumerate(thetas)]
    off = [r.theta for r in reports if r.discrepancy]
    summary = (f"simulated {args.estimator}: n={args.n}, seed {args.seed}, sampler {SAMPLING_BACKEND}; "
               + ("all z-scores within +-%g" % Z_BAND if not off else "outside +-%g at theta %s" % (Z_BAND, ", ".join(off))))
    rep = Report(summary, FAIL if off else PASS)
    t = rep.table("empirical against exact",
                  ["theta", "mean", "mean_se", "exact_mean", "mean_z", "risk", "risk_se", "exact_risk", "risk_z"])
    for r in reports:
        t.add(r.theta, r.mean, r.mean_se, r.exact_mean, r.mean_z, r.risk, r.risk_se, r.exact_risk, r.risk_z)
    return rep


def _factor_failure(exc: NoFactorization, name) -> Report:
    rep = Report(f"no factorization: {name}", FAIL)
    t = rep.table("conflict (two source points share a kernel output but differ under the statistic)",
                  ["point_a", "point_b", "shared_output"])
    t.add(*exc.conflict)
    return rep


def cmd_factor(model, args) -> Report:
    _need(args, "statistic", "kernel")
    if args.statistic not in model.statistics:
        raise UsageError(f"no statistic named {args.statistic!r}")
    T = model.statistics[args.statistic]
    M = _lookup(model.kernel, args.kernel)
    try:
        S = factor_through(T, M)
    except NoFactorization as exc:
        return _factor_failure(exc, args.statistic)
    rep = Report(f"{args.statistic} factors through {args.kernel}")
    t = rep.table("factor", ["target_point", "statistic_point"])
    for p, q in S.as_dict().items():
        t.add(p, q)
    return rep


CHECKS = {
    "sufficiency": cmd_check_sufficiency,
    "completeness": cmd_check_completeness,
    "unbiased": cmd_check_unbiased,
}

COMMANDS = {
    "rao-blackwell": cmd_rao_blackwell,
    "risk": cmd_risk,
    "umvue": cmd_umvue,
    "simulate": cmd_simulate,
    "factor": cmd_factor,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--experiment", metavar="FILE",
                   help="experiment JSON file (default: the bundled Bernoulli fixture)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="backend", action="store_const", const=EXACT,
                      help="rational arithmetic (default)")
    mode.add_argument("--float", dest="backend", action="store_const", const=FLOAT,
                      help="float64 arithmetic with tolerance")
    p.set_defaults(backend=EXACT)
    p.add_argument("--tolerance", type=_positive_float, default=1e-9, help="float comparison tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=_positive_int, default=100, help="competitors sampled by umvue")
    p.add_argument("--output", choices=("table", "csv"), default="table")
    p.add_argument("--loss", choices=("squared", "absolute"), default="squared")
    p.add_argument("--kernel", help="kernel or statistic to condition on / test")
    p.add_argument("--estimator", help="kernel or statistic with a numeric grid")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="kernelstat", description="Exact kernel calculus on finite statistical experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    check = sub.add_parser("check", parents=[common], help="sufficiency, completeness or unbiasedness")
    check.add_argument("property", choices=tuple(CHECKS))
    sub.add_parser("rao-blackwell", parents=[common], help="condition an estimator on a kernel")
    risk = sub.add_parser("risk", parents=[common], help="per-theta risk, optionally against a reference")
    risk.add_argument("--reference", help="estimator to compare against")
    um = sub.add_parser("umvue", parents=[common], help="certify a UMVUE by sampling unbiased competitors")
    um.add_argument("--statistic", help="nonrandomized candidate (first Lehmann-Scheffe route)")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of mean and risk")
    sim.add_argument("--theta", help="family member to simulate (default: all)")
    sim.add_argument("-n", type=_positive_int, default=100_000, help="number of draws")
    fac = sub.add_parser("factor", parents=[common], help="factor a statistic through a kernel")
    fac.add_argument("--statistic")
    return parser


def _load(args):
    if args.experiment is None:
        with resources.as_file(resources.files("kernelstat") / "data" / "bernoulli.json") as path:
            return io.load(path, args.backend)
    return io.load(args.experiment, args.backend)


def run(argv, stdout=None, stderr=None) -> int:
    """Execute one command line; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return ERROR if exc.code not in (0, None) else 0
    for name in ("reference", "statistic", "theta", "n"):
        if not hasattr(args, name):
            setattr(args, name, None)
    handler = CHECKS[args.property] if args.command == "check" else COMMANDS[args.command]
    try:
        with using_tolerance(args.tolerance):
            model = _load(args)
            report = handler(model, args)
    except (UsageError, KernelStatError, ValueError) as exc:
        stderr.write(f"kernelstat: error: {exc}\n")
        return ERROR
    stdout.write(report.render(args.output))
    return report.status


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success (and, for demos, every expectation met), 1 expectation
mismatch, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from markov_feller.checkers import (
    ProbeSchedule,
    TestFunction,
    Verdict,
    check_asf,
    check_asymptotic_e_property,
    check_e_property,
    default_probes,
    identity_asf_refutation,
    radial_probes,
)
from markov_feller.config import _metric, load_config, run_config
from markov_feller.errors import ConfigError, DataError, FellerError, NotALimitPoint, UnequalMass
from markov_feller.hamel import AdditiveFunction, SpanPoint, format_rational, parse_rational
from markov_feller.semigroups import Identity, Scaling
from markov_feller.spaces import FiniteMeasure, Metric, Point, PseudoMetricFamily, family_eval, metric_eval
from markov_feller.transport import wasserstein

OUT_ENV = "MARKOV_FELLER_OUT"

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3


class _Document:
    """Adapter so non-report payloads share the report writer."""

    def __init__(self, payload: dict, rows: list[list[str]] | None = None, header=None):
        self.payload = payload
        self.rows = rows or []
        self.header = header or []

    def json_text(self) -> str:
        return json.dumps(self.payload, indent=2, sort_keys=True) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


def _out_dir(args) -> Path | None:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else None


def _emit(docs: dict, fmt: str, out: Path | None) -> None:
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for name, doc in docs.items():
            text = doc.csv_text() if fmt == "csv" else doc.json_text()
            (out / f"{name}.{fmt}").write_text(text)
        return
    if fmt == "csv":
        for name, doc in docs.items():
            sys.stdout.write(f"# {name}\n{doc.csv_text()}")
    else:
        merged = {name: json.loads(doc.json_text()) for name, doc in docs.items()}
        sys.stdout.write(json.dumps(merged, indent=2, sort_keys=True) + "\n")


def _refutation_doc(cert, gamma: float) -> _Document:
    rows = [["asf", format(gamma, ".17g"), str(n), format(v, ".17g"), ""] for n, v in cert.values]
    payload = dict(cert.to_json(), gamma=gamma)
    return _Document(payload, rows, ["property", "gamma", "n_or_m", "value", "exact_exponent"])


# -- demo: ASF without the (asymptotic) e-property -----------------------------


def cmd_demo_asf_without_e(args) -> int:
    try:
        f = AdditiveFunction.from_weights([parse_rational(w) for w in args.weights])
        sg = Scaling(f, len(args.y), args.allow_sign_violation)
    except (ValueError, TypeError, FellerError) as exc:
        print(f"config error: /weights: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    y = Point(tuple(args.y))
    rho = Metric.euclidean()
    if rho.norm(y) == 0:
        print("config error: /y: the radial blow-up witnesses need y != 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        radii = sorted(set(args.radii), reverse=True)
        i1 = next((i for i, w in enumerate(f.weights) if w < 0), 0)
        i2 = next((i for i, w in enumerate(f.weights) if w > 0), f.dim - 1)
        fam = PseudoMetricFamily(rho, "linear")
        t_sched = [SpanPoint.axis(f.dim, i1, n) for n in range(1, args.n_max + 1)]
        asf_probes = default_probes(y, radii, rho, seed=args.seed, n_radial=4)
        asf = check_asf(sg, y, t_sched, fam, radii, asf_probes)

        tail = [SpanPoint.axis(f.dim, i2, m) for m in range(1, args.m_max + 1)]
        e_probes = [
            r + d for r, d in zip(radial_probes(y, radii, rho, 8), default_probes(y, radii, rho, seed=args.seed))
        ]
        sched = ProbeSchedule(tail, radii, e_probes, 0, min(10, len(tail)))
        origin = Point((0.0,) * y.dim)
        fns = [TestFunction.distance(rho, origin), TestFunction.truncated_distance(rho, origin)]
        asym = check_asymptotic_e_property(sg, y, sched, fns)
    except (ValueError, FellerError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    problems = []
    if asf.verdict is not Verdict.HOLDS_ON_PROBES:
        problems.append(f"asf: expected HoldsOnProbes, got {asf.verdict.value}")
    cert = asf.certificate
    if cert is None or not cert.all_within_bound:
        problems.append("asf: measured values exceed gamma * n * exp(n * s1)")
    if asym.verdict is not Verdict.FAILS_WITH_CERTIFICATE:
        problems.append(f"asymptotic-e: expected FailsWithCertificate, got {asym.verdict.value}")
    elif asym.certificate.slope != f.weights[i2] or not asym.certificate.replay(sg, rho, y):
        problems.append(
            f"asymptotic-e: certificate slope {format_rational(asym.certificate.slope)} "
            f"!= {format_rational(f.weights[i2])} or replay failed"
        )
    _emit({"asf": asf, "asymptotic_e": asym}, args.format, _out_dir(args))
    for p in problems:
        print(f"expectation mismatch: {p}", file=sys.stderr)
    return EXIT_MISMATCH if problems else EXIT_OK


# -- demo: e-property without ASF -----------------------------------------------


def cmd_demo_e_without_asf(args) -> int:
    rho = Metric.euclidean()
    y = Point(tuple(args.y))
    radii = sorted(set(args.radii), reverse=True)
    if args.candidates is None:
        candidates = [Point(tuple(c + (0.4 if i == 0 else 0.0) for i, c in enumerate(y.coords)))]
    else:
        try:
            candidates = [Point(tuple(c)) for c in json.loads(args.candidates)]
        except (ValueError, TypeError) as exc:
            print(f"config error: /candidates: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    fam = PseudoMetricFamily(rho, args.family)
    try:
        probes = default_probes(y, radii, rho, seed=args.seed)
        sched = ProbeSchedule([SpanPoint.of(n) for n in range(0, 11)], radii, probes)
        fns = [TestFunction.truncated_distance(rho, y), TestFunction.distance(rho, y)]
        e_rep = check_e_property(Identity(), y, sched, fns)
        refutation = identity_asf_refutation(fam, y, args.gamma, candidates, args.n_max)
    except NotALimitPoint as exc:
        print(f"config error: /candidates: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FellerError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    problems = []
    if e_rep.verdict is not Verdict.HOLDS_ON_PROBES:
        problems.append(f"e: expected HoldsOnProbes, got {e_rep.verdict.value}")
    if not refutation.holds:
        problems.append(f"asf refutation: sigma_n(z, y) never reaches 1/2 within N={args.n_max}")
    elif refutation.lower_bound < Fraction(1, 2):
        problems.append("asf refutation: lower bound below 1/2")
    _emit({"e_property": e_rep, "identity_asf_refutation": _refutation_doc(refutation, args.gamma)}, args.format, _out_dir(args))
    for p in problems:
        print(f"expectation mismatch: {p}", file=sys.stderr)
    return EXIT_MISMATCH if problems else EXIT_OK


# -- check / wasserstein --------------------------------------------------------


def cmd_check(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or cfg.format
    try:
        report = run_config(cfg)
    except (ValueError, FellerError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    _emit({"report": report}, fmt, _out_dir(args))
    return EXIT_OK


def _load_json(text_or_path: str, what: str):
    path = Path(text_or_path)
    try:
        if path.exists():
            return json.loads(path.read_text())
        return json.loads(text_or_path)
    except (json.JSONDecodeError, OSError) as exc:
        raise ConfigError(f"cannot read {what}: {exc}", f"/{what}") from None


def _cost_sigma(spec: dict):
    if not isinstance(spec, dict):
        raise ConfigError("cost spec must be an object", "/cost")
    metric = _metric(spec.get("metric"))
    if "n" not in spec:
        return lambda a, b: metric_eval(metric, a, b)
    n = spec["n"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError("n must be a positive integer", "/cost/n")
    fam = PseudoMetricFamily(metric, spec.get("schedule", "linear"))
    return lambda a, b: family_eval(fam, n, a, b)


def _num(v):
    return {"float": float(v), "exact": format_rational(v) if isinstance(v, Fraction) else None}


def cmd_wasserstein(args) -> int:
    try:
        mu1 = FiniteMeasure.from_json(_load_json(args.mu1, "mu1"))
        mu2 = FiniteMeasure.from_json(_load_json(args.mu2, "mu2"))
        sigma = _cost_sigma(_load_json(args.cost, "cost"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, TypeError, ValueError) as exc:
        print(f"config error: malformed measure file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res = wasserstein(mu1, mu2, sigma)
    except (UnequalMass, DataError, FellerError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    payload = {
        "mode": "rational" if res.exact else "real",
        "primal": float(res.primal),
        "dual": float(res.dual),
        "gap": float(res.gap),
        "consistent": res.consistent,
    }
    if res.exact:
        payload.update(
            primal_exact=format_rational(res.primal),
            dual_exact=format_rational(res.dual),
            gap_exact=format_rational(res.gap),
        )
    rows = [[k, format(float(getattr(res, k)), ".17g")] for k in ("primal", "dual", "gap")]
    _emit({"wasserstein": _Document(payload, rows, ["quantity", "value"])}, args.format or "json", _out_dir(args))
    return EXIT_OK if res.consistent else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--out", default=None, help=f"output directory (else ${OUT_ENV}, else stdout)")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="markov-feller", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="reproduce the two counterexamples")
    demos = demo.add_subparsers(dest="demo", required=True)

    a = demos.add_parser("asf-without-e", parents=[common], help="scaling semigroup: ASF holds, asymptotic e fails")
    a.add_argument("--weights", nargs="+", default=["-1", "1"], help="additive weights as p/q")
    a.add_argument("--allow-sign-violation", action="store_true")
    a.add_argument("--radii", nargs="+", type=float, default=[1.0, 0.1])
    a.add_argument("--n-max", type=int, default=30)
    a.add_argument("--m-max", type=int, default=30)
    a.add_argument("--y", nargs="+", type=float, default=[1.0, 0.0])
    a.set_defaults(func=cmd_demo_asf_without_e)

    b = demos.add_parser("e-without-asf", parents=[common], help="identity semigroup: e holds, ASF fails")
    b.add_argument("--y", nargs="+", type=float, default=[0.0, 0.0])
    b.add_argument("--radii", nargs="+", type=float, default=[10.0**-k for k in range(8)])
    b.add_argument("--gamma", type=float, default=1.0)
    b.add_argument("--candidates", default=None, help="JSON list of candidate points z")
    b.add_argument("--family", choices=["linear", "geometric"], default="linear")
    b.add_argument("--n-max", type=int, default=10)
    b.set_defaults(func=cmd_demo_e_without_asf)

    c = sub.add_parser("check", parents=[common], help="run a configured check")
    c.add_argument("config")
    c.set_defaults(func=cmd_check)

    w = sub.add_parser("wasserstein", parents=[common], help="primal/dual Wasserstein distance")
    w.add_argument("--mu1", required=True)
    w.add_argument("--mu2", required=True)
    w.add_argument("--cost", required=True, help="JSON cost spec or path to one")
    w.set_defaults(func=cmd_wasserstein)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "format", None) is None and args.command == "demo":
        args.format = "json"
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``cdc design|scheme|simulate|sweep|compare``.

Exit codes: 0 success, 2 verification failure, 3 protocol violation,
4 bad parameters.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import designs as D
from . import metrics as MX
from . import schemes as S
from . import shuffle as SH

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_PROTOCOL = 3
EXIT_PARAMS = 4


class BadParameters(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means "verification failure" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAMS, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _frac(v: Fraction | None) -> str | None:
    return None if v is None else f"{v.numerator}/{v.denominator}"


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# design


def _generate(a: argparse.Namespace) -> D.BlockDesign:
    fam = a.family

    def need(*names):
        missing = [n for n in names if getattr(a, n) is None]
        if missing:
            raise BadParameters(f"--family {fam} needs " + ", ".join("--" + n.replace("_", "-") for n in missing))

    if fam == "fano":
        return D.fano_plane()
    if fam == "example-gdd":
        return D.example_gdd()
    if fam == "pg":
        need("p")
        return D.projective_plane_sbibd(a.p)
    if fam == "tgdd":
        need("p")
        return D.transversal_gdd(a.p)
    if fam == "sts":
        need("n")
        return D.steiner_triple_bose(a.n)
    if fam == "sqs":
        need("k")
        return D.boolean_sqs(a.k)
    if fam == "complete":
        need("N", "M", "t")
        return D.complete_design(a.N, a.M, a.t)
    if fam == "search":
        need("N", "M", "t", "lam")
        found = D.brute_force_design_search(a.t, a.N, a.M, a.lam, budget=a.budget)
        if found is None:
            raise BadParameters(f"search budget of {a.budget} nodes exhausted")
        return found
    raise BadParameters(f"unknown family {fam}")


def cmd_design(a: argparse.Namespace) -> int:
    if a.action == "gen":
        d = _generate(a)
        _emit(D.dump_design(d), a.out)
        if a.json:
            _print_json({"points": d.num_points, "blocks": d.num_blocks, "family": d.family})
        return EXIT_OK

    d = D.load_design(Path(a.path).read_text())
    if a.action == "dual":
        _emit(D.dump_design(D.dualize(d)), a.out)
        return EXIT_OK

    t = a.t if a.t is not None else d.t
    lam = a.lam if a.lam is not None else d.lam
    if t is None or lam is None:
        raise BadParameters("design file lacks t/lambda; pass --t and --lambda")
    rep = D.verify_gdd(d, t, lam) if d.groups is not None else D.verify_t_design(d, t, lam)
    result = {"passed": rep.passed, "violation": rep.violation, "K": rep.K, "r": rep.r, "M": rep.M}
    if a.json:
        _print_json(result)
    else:
        print(f"{'PASS' if rep.passed else 'FAIL'}: K={rep.K} r={rep.r} M={rep.M}")
    if not rep.passed:
        print(f"violation: {rep.violation}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# scheme


def cmd_scheme(a: argparse.Namespace) -> int:
    d = D.load_design(Path(a.design).read_text())
    t = a.t if a.t is not None else d.t
    lam = a.lam if a.lam is not None else d.lam
    if t is None or lam is None:
        raise BadParameters("design file lacks t/lambda; pass --t and --lambda")
    build = {1: S.scheme_from_t_design, 2: S.scheme_from_gdd, 3: S.scheme_from_t_design_unequal}[a.theorem]
    if a.theorem == 2 and d.groups is None:
        raise BadParameters("--theorem 2 needs a design with groups")
    try:
        scheme = build(d, t, lam)
    except S.DesignVerificationError as exc:
        print(f"design verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    _emit(S.dump_scheme(scheme), a.out)
    if a.json:
        _print_json(dict(zip("K r s N Q M".split(), scheme.params), provenance=scheme.provenance))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(a: argparse.Namespace) -> int:
    scheme = S.load_scheme(Path(a.scheme).read_text())
    cfg = SH.SimulationConfig(T=a.T, seed=a.seed, mode=a.mode, random_sender=a.random_sender)
    strategy = a.strategy if a.strategy == "auto" else int(a.strategy)
    try:
        rep = SH.simulate_end_to_end(scheme, strategy, cfg)
    except (SH.ProtocolViolation, SH.PayloadMismatchError) as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    tr = rep.transcript
    loads = MX.load_report(tr, scheme)
    if a.transcript:
        Path(a.transcript).write_text(SH.dump_transcript(tr))
    summary = rep.to_dict()
    summary.update(
        load=_frac(loads.measured_load),
        predicted_load=_frac(loads.predicted_load),
        gain=_frac(loads.measured_gain),
        predicted_gain=_frac(loads.predicted_gain),
        g_max=loads.bound_gain,
        lower_bound_load=_frac(loads.lower_bound_load),
    )
    if a.report:
        Path(a.report).write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    if a.json:
        _print_json(summary)
    else:
        print(
            f"{'PASS' if rep.passed else 'FAIL'}: {rep.num_signals} signals, {rep.total_bits} bits, "
            f"load {summary['load']} (predicted {summary['predicted_load']}), gain {summary['gain']}"
        )
    return EXIT_OK if rep.passed else EXIT_PROTOCOL


# ---------------------------------------------------------------------------
# sweep / compare


def _parse_p_list(text: str) -> list[int]:
    try:
        ps = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise BadParameters(f"bad --p-list {text!r}") from exc
    for p in ps:
        if not D.is_prime(p):
            raise D.UnsupportedOrderError(f"order {p} is not prime")
    return ps


def _rows(a: argparse.Namespace) -> list[MX.ComparisonRow]:
    families = ("pg", "tgdd") if a.family == "both" else (a.family,)
    return MX.compare_report(families, _parse_p_list(a.p_list), simulate=not a.no_simulate)


def cmd_sweep(a: argparse.Namespace) -> int:
    rows = _rows(a)
    buf = io.StringIO()
    MX.write_sweep_csv(rows, buf)
    _emit(buf.getvalue(), a.out)
    bad = [r for r in rows if r.L_measured is not None and r.L_measured != r.L_predicted]
    if a.json:
        _print_json({"rows": len(rows), "mismatches": len(bad)})
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_compare(a: argparse.Namespace) -> int:
    rows = _rows(a)
    if a.json:
        _print_json(
            [
                {k: (_frac(v) if isinstance(v, Fraction) else v) for k, v in vars(r).items()}
                for r in rows
            ]
        )
    else:
        print(f"{'family':>6} {'p':>3} {'K':>5} {'r':>3} {'L_ours':>12} {'L_LMYA':>10} {'bound':>10} {'ratio':>7}  notes")
        for r in rows:
            achieved = r.L_measured if r.L_measured is not None else r.L_predicted
            print(
                f"{r.family:>6} {r.p:>3} {r.K:>5} {r.r:>3} {str(achieved):>12} {float(r.L_LMYA):>10.6f} "
                f"{str(r.L_lowerbound):>10} {float(r.optimality_ratio):>7.4f}  {r.notes}"
            )
    bad = [r for r in rows if r.L_measured is not None and r.L_measured != r.L_predicted]
    return EXIT_VERIFY if bad else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdc", description="Design-based coded distributed computing toolkit")
    parser.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pd = sub.add_parser("design", help="generate, verify, or dualize a block design")
    pd.add_argument("action", choices=["gen", "verify", "dual"])
    pd.add_argument("path", nargs="?", help="input design JSON (verify, dual)")
    pd.add_argument(
        "--family",
        choices=["fano", "example-gdd", "pg", "tgdd", "sts", "sqs", "complete", "search"],
    )
    pd.add_argument("--p", type=int)
    pd.add_argument("--n", type=int, help="STS order (3 mod 6)")
    pd.add_argument("--k", type=int, help="boolean SQS dimension")
    pd.add_argument("--N", type=int)
    pd.add_argument("--M", type=int)
    pd.add_argument("--t", type=int)
    pd.add_argument("--lambda", dest="lam", type=int)
    pd.add_argument("--budget", type=int, default=1_000_000)
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_design)

    ps = sub.add_parser("scheme", help="build a CDC scheme from a design")
    ps.add_argument("action", choices=["build"])
    ps.add_argument("--theorem", type=int, choices=[1, 2, 3], required=True)
    ps.add_argument("--design", required=True)
    ps.add_argument("--t", type=int)
    ps.add_argument("--lambda", dest="lam", type=int)
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_scheme)

    pm = sub.add_parser("simulate", help="run the shuffle and check decoding")
    pm.add_argument("--scheme", required=True)
    pm.add_argument("--strategy", choices=["auto", "1", "2", "3"], default="auto")
    pm.add_argument("--T", type=int, default=64)
    pm.add_argument("--seed", type=int, default=1)
    pm.add_argument("--mode", choices=["symbolic", "concrete"], default="symbolic")
    pm.add_argument("--random-sender", action="store_true", help="seeded random sender choice")
    pm.add_argument("--transcript", help="write the transcript JSON here")
    pm.add_argument("--report", help="write the simulation report JSON here")
    pm.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("sweep", cmd_sweep, "CSV of loads over a prime sweep"),
        ("compare", cmd_compare, "comparison table over a prime sweep"),
    ):
        pw = sub.add_parser(name, help=helptext)
        pw.add_argument("--family", choices=["pg", "tgdd", "both"], default="both")
        pw.add_argument("--p-list", default="2,3,5,7")
        pw.add_argument("--no-simulate", action="store_true", help="closed forms only")
        if name == "sweep":
            pw.add_argument("--out")
        pw.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.command == "design":
        if a.action == "gen" and not a.family:
            parser.error("design gen needs --family")
        if a.action in ("verify", "dual") and not a.path:
            parser.error(f"design {a.action} needs an input path")
    try:
        return a.func(a)
    except (BadParameters, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())

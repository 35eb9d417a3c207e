"""Command line front end.

Exit codes: 0 success, 1 recognition failed, 2 invalid parameters,
3 a construction did not pass its own check.
"""

from __future__ import annotations

import argparse
import secrets
import sys
from pathlib import Path

from . import analysis, constructions, interchange
from .automata import Dfa, MalformedAutomatonError, Qfa, UnknownSymbolError, run, sample_counts, validate
from .languages import contains00, length_n_contains00, unary_length

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_CONSTRUCTION = 0, 1, 2, 3

BUILD_KINDS = ("dfa-00", "dfa-ln", "rfa-tree", "pfa-freivalds", "pfa-ln")


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x:.11e}"


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required here")
    return value


def _build(args):
    kind = args.kind
    if kind == "dfa-00":
        return constructions.build_dfa_contains00()
    if kind == "dfa-ln":
        return constructions.build_dfa_Ln(_need(args, "n"))
    if kind == "rfa-tree":
        return constructions.build_tree_rfa(_need(args, "n"))
    if kind == "pfa-freivalds":
        pfa, params = constructions.build_freivalds_pfa(_need(args, "n"), _need(args, "epsilon"))
        print(f"primes: {list(params.primes)}  reject_const: {params.reject_const:.3f}", file=sys.stderr)
        return pfa
    if kind == "pfa-ln":
        return constructions.build_pfa_Ln(_need(args, "n"), _need(args, "epsilon"))
    raise UsageError(f"unknown kind {kind!r}")


def cmd_build(args) -> int:
    automaton = _build(args)
    report = validate(automaton)
    text = interchange.dumps(automaton)
    if args.out:
        Path(args.out).write_text(text)
        out = sys.stdout
    else:
        print(text)
        out = sys.stderr
    print(f"model: {automaton.model}", file=out)
    print(f"states: {automaton.n_states}", file=out)
    print(f"validation: {report.summary()}", file=out)
    return EXIT_OK if report.ok else EXIT_CONSTRUCTION


def cmd_run(args) -> int:
    automaton = interchange.load(args.file)
    out = run(automaton, args.word)
    print(f"p_acc {fmt(out.p_acc)}")
    print(f"p_rej {fmt(out.p_rej)}")
    print(f"p_non {fmt(out.p_non)}")
    print(f"halted_at {out.halted_at if out.halted_at is not None else '-'}")
    return EXIT_OK


def cmd_sample(args) -> int:
    automaton = interchange.load(args.file)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed {seed}")
    counts = sample_counts(automaton, args.word, args.samples, seed)
    for verdict, count in counts.items():
        print(f"{verdict.value} {count} {fmt(count / args.samples)}")
    return EXIT_OK


def _language(args, automaton):
    if args.predicate == "contains00":
        return contains00()
    if args.predicate == "ln":
        return length_n_contains00(_need(args, "n"))
    if args.predicate == "axn":
        return unary_length(_need(args, "n"), automaton.alphabet.symbols[0])
    raise UsageError(f"unknown predicate {args.predicate!r}")


def cmd_verify(args) -> int:
    automaton = interchange.load(args.file)
    lang = _language(args, automaton)
    domain = analysis.WordDomain.up_to(automaton.alphabet.symbols, args.max_len)
    report = analysis.verify_recognition(automaton, lang, domain, args.p, automaton_id=str(args.file))
    print(report.format())
    return EXIT_OK if report.recognized else EXIT_FAILED


def cmd_minimize(args) -> int:
    automaton = interchange.load(args.file)
    if not isinstance(automaton, Dfa):
        raise UsageError("minimize expects a dfa file")
    small = analysis.minimize_dfa(automaton)
    text = interchange.dumps(small)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    print(f"states: {automaton.n_states} -> {small.n_states}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_encode_test(args) -> int:
    automaton = interchange.load(args.file)
    if not isinstance(automaton, Qfa):
        raise UsageError("encode-test expects a qfa file")
    result = analysis.serial_encoding_experiment(automaton, args.n)
    print(f"k {result.k}")
    print(f"min_success {fmt(result.min_success)}")
    print(f"vi_deviation {fmt(result.vi_deviation)}")
    return EXIT_OK


def cmd_table(args) -> int:
    table = analysis.separation_table(args.n_list, args.epsilon)
    text = table.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _n_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}") from None


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfalab", description="Finite automata simulation and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct an automaton and write it as JSON")
    p.add_argument("kind", choices=BUILD_KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("run", help="exact acceptance statistics for one word")
    p.add_argument("file")
    p.add_argument("word", nargs="?", default="")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sample", help="Monte Carlo outcome counts for one word")
    p.add_argument("file")
    p.add_argument("word", nargs="?", default="")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="exhaustive recognition check")
    p.add_argument("file")
    p.add_argument("--predicate", choices=("ln", "axn", "contains00"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("minimize", help="minimise a DFA file")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("encode-test", help="serial-encoding experiment on a QFA file")
    p.add_argument("file")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_encode_test)

    p = sub.add_parser("table", help="state counts per model as CSV")
    p.add_argument("--n-list", type=_n_list, default=[4, 6, 8, 10])
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except constructions.ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (UsageError, ValueError, MalformedAutomatonError, UnknownSymbolError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

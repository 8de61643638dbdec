"""Command-line interface: rerank, evaluate, selfcheck.

Exit codes: 0 on success, 1 on input errors (including bad arguments),
2 on selfcheck property failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import InputError
from .kernel import DEFAULT_QUALITY_FLOOR
from .pipeline import RerankConfig, evaluate_command, render_report, rerank_command
from .selfcheck import run_selfcheck

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_PROPERTY_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="dpp-rerank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rerank = sub.add_parser("rerank", help="re-rank candidate passages and write a run file")
    rerank.add_argument("--input", required=True, help="candidates file (JSONL)")
    rerank.add_argument("--mode", choices=("dpp", "qrr"), default="dpp")
    rerank.add_argument("--k", type=int, required=True, help="passages to select per query")
    rerank.add_argument("--sim-transform", choices=("affine", "clamp"), default="affine",
                        help="cosine-to-[0,1] mapping for the similarity matrix")
    rerank.add_argument("--quality-floor", type=float, default=DEFAULT_QUALITY_FLOOR,
                        help="minimum normalized quality (default %(default)s)")
    rerank.add_argument("--ridge", type=float, default=None,
                        help="kernel diagonal ridge (default depends on the transform)")
    rerank.add_argument("--output", required=True, help="run file to write")

    evaluate = sub.add_parser("evaluate", help="score a run file with recall@k and mrecall@k")
    evaluate.add_argument("--run", required=True, help="run file")
    evaluate.add_argument("--gold", required=True, help="gold answers file (JSONL)")
    evaluate.add_argument("--passages", required=True,
                          help="candidates file used to resolve passage texts")
    evaluate.add_argument("--k", default="5,10", help="comma-separated cutoffs (default %(default)s)")
    evaluate.add_argument("--word-boundary", action="store_true",
                          help="match answers at word boundaries instead of raw substrings")
    evaluate.add_argument("--report", default=None,
                          help="write the JSON report here instead of stdout")

    selfcheck = sub.add_parser("selfcheck", help="run seeded property checks on random instances")
    selfcheck.add_argument("--seed", type=int, default=0)
    selfcheck.add_argument("--trials", type=int, default=200)
    return parser


def _parse_cutoffs(text: str) -> list[int]:
    try:
        cutoffs = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as err:
        raise InputError(f"bad cutoff list {text!r}: {err}") from err
    if not cutoffs:
        raise InputError(f"cutoff list {text!r} is empty")
    return cutoffs


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "rerank":
            config = RerankConfig(
                mode=args.mode,
                k=args.k,
                transform=args.sim_transform,
                floor=args.quality_floor,
                ridge=args.ridge,
            )
            rankings = rerank_command(args.input, args.output, config)
            print(f"wrote {sum(len(r.selected) for r in rankings)} run lines "
                  f"for {len(rankings)} queries to {args.output}")
        elif args.command == "evaluate":
            report = evaluate_command(
                args.run, args.gold, args.passages,
                cutoffs=_parse_cutoffs(args.k),
                word_boundary=args.word_boundary,
            )
            print(render_report(report))
            payload = json.dumps(report.to_dict(), indent=2)
            if args.report:
                with open(args.report, "w", encoding="utf-8") as fh:
                    fh.write(payload + "\n")
            else:
                print(payload)
        else:
            report = run_selfcheck(seed=args.seed, trials=args.trials)
            print(report.render())
            if not report.ok:
                return EXIT_PROPERTY_FAILURE
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

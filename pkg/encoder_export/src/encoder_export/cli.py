"""Command-line interface: export candidates files, convert gold annotations."""

from __future__ import annotations

import argparse
import sys

from .backends import DEFAULT_BI_ENCODER, DEFAULT_CROSS_ENCODER
from .errors import ExportError
from .export import DEFAULT_BATCH_SIZE, run_export
from .gold import convert_gold, read_records


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="encoder-export", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    export = sub.add_parser("export", help="embed passages, score pairs, write a candidates file")
    export.add_argument("--queries", required=True, help="JSONL of {qid, query}")
    export.add_argument("--passages", required=True, help="JSONL of {qid, passages: [{pid, title?, text}]}")
    export.add_argument("--bi-encoder", default=DEFAULT_BI_ENCODER,
                        help="embedding model id, or hash:<dim> for the built-in lexical backend")
    export.add_argument("--cross-encoder", default=DEFAULT_CROSS_ENCODER,
                        help="pair scoring model id, or 'overlap' for the built-in lexical backend")
    export.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    export.add_argument("--out", required=True, help="candidates file to write")

    gold = sub.add_parser("convert-gold", help="convert multi-answer annotations to a gold file")
    gold.add_argument("--in", dest="input", required=True, help="annotation records (JSONL or JSON array)")
    gold.add_argument("--out", required=True, help="gold file to write")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "export":
            count = run_export(
                queries_path=args.queries,
                passages_path=args.passages,
                bi_encoder=args.bi_encoder,
                cross_encoder=args.cross_encoder,
                out_path=args.out,
                batch_size=args.batch_size,
            )
            print(f"exported {count} queries to {args.out}")
        else:
            count = convert_gold(read_records(args.input), args.out)
            print(f"converted {count} questions to {args.out}")
    except ExportError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

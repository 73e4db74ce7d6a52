"""Command-line entry: render one figure from one artifact file.

``chlab-viz --kind <k> --in <csv|snap> --out <img>``

Exit codes mirror the producer's conventions: 0 success, 2 for unusable
requests (unknown kinds, unreadable or unparseable inputs, tables lacking
the needed columns), 3 for corrupt snapshot files.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .formats import CorruptSnapshot, MissingColumn, ParseError, VizError
from .plots import KINDS, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chlab-viz",
        description="render figures from laboratory CSV and CHSNAP1 artifacts",
    )
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="which figure to draw")
    parser.add_argument("--in", dest="in_path", required=True,
                        help="input artifact (CSV table or CHSNAP1 snapshot)")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    return parser


def _emit_error(exc: BaseException, code: int) -> int:
    print(json.dumps({
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }, sort_keys=True))
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = render(PlotSpec(kind=args.kind, in_path=args.in_path, out_path=args.out))
    except CorruptSnapshot as exc:
        return _emit_error(exc, 3)
    except (ParseError, MissingColumn, ValueError) as exc:
        return _emit_error(exc, 2)
    except VizError as exc:
        return _emit_error(exc, 3)
    for key, value in sorted(result.annotations.items()):
        print(f"{key} = {value!r}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

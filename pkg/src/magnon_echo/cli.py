"""``magnon-echo`` entry point.

Exit status: 0 on success, 2 on usage errors, 1 when the run itself fails.
"""
from __future__ import annotations

import sys
from typing import Sequence

from .config import ConfigError, build_parser, parse_config
from .csvio import write_csv
from .runner import ScenarioError, run_scenario


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if any(a in ("-h", "--help") for a in argv):
        build_parser().print_help()
        return 0
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"magnon-echo: usage error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_scenario(cfg)
        write_csv(result, path=cfg.out, stream=None if cfg.out else sys.stdout)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"magnon-echo: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run the full identity suite with the reproducible defaults and timings.

Any extra arguments are passed through, so e.g.

    python3 scripts/run_verify_all.py --identity bracket --out bracket.json

narrows the run.  Exit code follows the command line tool: 0 all pass,
1 a check failed, 2 bad selector or flags.
"""

from __future__ import annotations

import sys

from toda_bo.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["verify", "--timings", *sys.argv[1:]]))

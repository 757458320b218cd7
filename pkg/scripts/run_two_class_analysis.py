#!/usr/bin/env python3
"""Run the two-class bias analysis: full sweep plus a few worked points.

Writes sweep.csv under $RECTIDISTILL_OUT/prop-check and exits non-zero
if any of the analytic invariants fail.
"""

import os
import sys

from rectidistill.cli import main

OUT = os.environ.get("RECTIDISTILL_OUT", "runs")

if __name__ == "__main__":
    for ta in ("0.1", "0.3", "0.5", "0.9"):
        rc = main(["prop-check", "--ta", ta])
        if rc != 0:
            sys.exit(rc)
    sys.exit(main(["prop-check", "--out", os.path.join(OUT, "prop-check")]))

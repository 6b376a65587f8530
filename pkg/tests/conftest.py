"""Pin BLAS pools to one thread before numpy loads: the acceptance suite
is specified for a single CPU core, and single-threaded kernels keep
reductions order-deterministic across runs. Also prints the acceptance
scoreboard after the run."""

import os
import sys

for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(var, "1")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "_SCOREBOARD", None) if module else None
    if lines:
        terminalreporter.write_sep("=", "acceptance scoreboard")
        for line in lines:
            terminalreporter.write_line(line)

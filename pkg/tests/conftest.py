import os
import shlex
import shutil

import numpy as np
import pytest


def solver_available() -> bool:
    cmd = os.environ.get("QVER_SOLVER")
    exe = shlex.split(cmd)[0] if cmd else "z3"
    return shutil.which(exe) is not None


needs_solver = pytest.mark.skipif(not solver_available(), reason="no SMT solver on PATH")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

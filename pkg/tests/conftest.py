import numpy as np
import pytest

import qworkstats as q

# Collected "ACCEPTANCE n: PASS/FAIL" lines, printed after the run so they
# survive pytest's output capture.
ACCEPTANCE_LINES = []


def record_acceptance(criterion, ok, detail):
    line = "ACCEPTANCE %-2s %s: %s" % (criterion, "PASS" if ok else "FAIL", detail)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def dimer_point():
    """Converged canonical dimer at U=1, v0=0.5, beta=1."""
    spec = q.LatticeSpec(L=2, U=1.0)
    ens = q.half_filled_ensemble("canonical", 1.0, 2)
    return q.solve_point(spec, ens, 0.5)


@pytest.fixture(scope="session")
def gc_dimer_point():
    spec = q.LatticeSpec(L=2, U=1.0)
    ens = q.half_filled_ensemble("grand-canonical", 1.0, 2)
    return q.solve_point(spec, ens, 0.5)


def random_instance(rng, l_max=6, u_max=4.0, v0_max=3.0, beta_max=4.0):
    L = int(rng.integers(2, l_max + 1))
    kind = ("canonical", "grand-canonical")[int(rng.integers(0, 2))]
    spec = q.LatticeSpec(L=L, U=float(rng.uniform(0.0, u_max)))
    ens = q.half_filled_ensemble(kind, float(rng.uniform(0.2, beta_max)), L)
    v0 = float(rng.uniform(0.0, v0_max))
    return spec, ens, v0


def assert_close(a, b, rtol, label=""):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    rel = np.max(np.abs(a - b)) / scale
    assert rel < rtol, f"{label}: relative deviation {rel:.3e} >= {rtol:.1e}"

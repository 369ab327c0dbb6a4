import numpy as np
import pytest

from subfinsler.gauge import GaugePair, GrushinParams
from subfinsler.norms import default_ellipsoid_matrix, ellipsoid, euclidean, pnorm
from subfinsler.sampling import make_rng

# the three norm pairs used throughout: (Phi, Psi) builders
PAIRS = {
    "euclidean": (lambda n: euclidean(n), lambda n: euclidean(n)),
    "pnorm4_euclidean": (lambda n: pnorm(n, 4), lambda n: euclidean(n)),
    "ellipsoid_pnorm4": (lambda n: ellipsoid(default_ellipsoid_matrix(n)), lambda n: pnorm(n, 4)),
}


def make_pair(name, m, k, alpha=1.0, p=2.0) -> GaugePair:
    phi, psi = PAIRS[name]
    return GaugePair(phi(m), psi(k), GrushinParams(m, k, alpha, p))


def all_norms(n):
    return [euclidean(n), pnorm(n, 4), pnorm(n, 1.5), ellipsoid(default_ellipsoid_matrix(n))]


@pytest.fixture
def rng():
    return make_rng(20240611)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record (and print) a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

import numpy as np
import pytest

from twophoton.operators import build_operators, build_space

#: acceptance outcomes collected by test_acceptance, reported at session end
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def ops():
    return build_operators(build_space(3))


@pytest.fixture(scope="session")
def space(ops):
    return ops.space


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density_matrix(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = z @ z.conj().T
    return rho / np.trace(rho)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=_criterion_order):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


def _criterion_order(key):
    head = key.split()[0]
    digits = "".join(ch for ch in head if ch.isdigit())
    return (int(digits or 0), head)

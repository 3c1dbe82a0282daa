import numpy as np
import pytest
from scipy.stats import unitary_group

from qest.opalg import HermitianOp, HilbertSpace, QuantumState


def rand_herm(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def rand_ket(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def rand_rho(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def rand_unitary(rng, d):
    return unitary_group.rvs(d, random_state=rng)


def op(space, m):
    return HermitianOp(space, m)


def ket_state(space, v):
    return QuantumState(space, np.asarray(v, dtype=complex))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def qubit():
    return HilbertSpace([2])


# acceptance criteria print one line each in the terminal summary
_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    def record(number: int, passed: bool, text: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {text}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])

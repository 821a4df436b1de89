"""Truncated Hilbert space of two quantum dots and one cavity mode.

Basis ordering is ``|q1> (x) |q2> (x) |n>`` with ``q in {g, e}`` (index 0, 1)
and ``n in {0, ..., n_max}``; the flat index of ``|q1, q2, n>`` is
``(2 * q1 + q2) * (n_max + 1) + n``.  All operators are dense complex
``numpy`` arrays.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_LEVEL = {"g": 0, "e": 1}


@dataclass(frozen=True)
class SpaceDescriptor:
    n_max: int

    @property
    def dim(self):
        return 4 * (self.n_max + 1)

    def index(self, q1, q2, n):
        """Flat basis index of ``|q1, q2, n>``; ``q`` given as 'g'/'e'."""
        if not 0 <= n <= self.n_max:
            raise IndexError(f"photon number {n} outside 0..{self.n_max}")
        return (2 * _LEVEL[q1] + _LEVEL[q2]) * (self.n_max + 1) + n

    def labels(self):
        return [f"{q1}{q2}{n}" for q1 in "ge" for q2 in "ge"
                for n in range(self.n_max + 1)]

    def excitation_numbers(self):
        """Total excitation ``N = n_e1 + n_e2 + n`` of every basis state."""
        return np.array([_LEVEL[q1] + _LEVEL[q2] + n for q1 in "ge"
                         for q2 in "ge" for n in range(self.n_max + 1)])


def build_space(n_max=3):
    if int(n_max) != n_max or n_max < 2:
        raise ConfigurationError(
            f"n_max must be an integer >= 2 (two-photon states), got {n_max!r}")
    return SpaceDescriptor(int(n_max))


@dataclass(frozen=True)
class OperatorSet:
    space: SpaceDescriptor
    sm1: np.ndarray
    sm2: np.ndarray
    a: np.ndarray
    identity: np.ndarray

    @property
    def sp1(self):
        return self.sm1.conj().T

    @property
    def sp2(self):
        return self.sm2.conj().T

    @property
    def ad(self):
        return self.a.conj().T

    @property
    def num(self):
        return self.ad @ self.a

    def sigma_minus(self, i):
        return (self.sm1, self.sm2)[i]

    def sigma_plus(self, i):
        return (self.sp1, self.sp2)[i]

    def excitation_number(self):
        return self.sp1 @ self.sm1 + self.sp2 @ self.sm2 + self.num


def build_operators(space):
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|
    eye2 = np.eye(2, dtype=complex)
    nc = space.n_max + 1
    eyec = np.eye(nc, dtype=complex)
    a_c = np.diag(np.sqrt(np.arange(1, nc)), 1).astype(complex)
    ops = OperatorSet(
        space=space,
        sm1=np.kron(np.kron(lower, eye2), eyec),
        sm2=np.kron(np.kron(eye2, lower), eyec),
        a=np.kron(np.kron(eye2, eye2), a_c),
        identity=np.eye(space.dim, dtype=complex),
    )
    for m in (ops.sm1, ops.sm2, ops.a):
        m.setflags(write=False)
    return ops


def basis_state(q1, q2, n, space):
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.index(q1, q2, n)] = 1.0
    return psi


def basis_projector(q1, q2, n, space):
    psi = basis_state(q1, q2, n, space)
    return np.outer(psi, psi.conj())


def expectation(op, rho):
    """Return ``Tr(op @ rho)``."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.shape != rho.shape or op.shape[0] != op.shape[1]:
        raise ConfigurationError(
            f"dimension mismatch: operator {op.shape} vs state {rho.shape}")
    # Tr(AB) = sum_ij A_ij B_ji without forming the product
    return complex(np.einsum("ij,ji->", op, rho))


def check_density_matrix(rho, trace_tol=1e-8, herm_tol=1e-10, neg_tol=1e-8):
    """Return a list of violated invariants (empty when ``rho`` is valid)."""
    problems = []
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        problems.append(f"trace {tr.real:.3e}{tr.imag:+.3e}j")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        problems.append(f"non-Hermitian by {herm:.3e}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -neg_tol:
        problems.append(f"negative eigenvalue {lam:.3e}")
    return problems

"""Superoperators for the polaron master equation.

Density matrices are vectorized by stacking columns (``rho.ravel('F')``), so
that ``vec(A rho B) = (B^T kron A) vec(rho)``.  Two generators are provided:

* :func:`full_liouvillian` evaluates the phonon dissipator in the eigenbasis
  of the polaron-frame system Hamiltonian, one half-Fourier coefficient per
  Bohr frequency.
* :func:`approx_liouvillian` is the far-detuned reduction in which the
  propagator inside the phonon kernel keeps only the detunings.  It is then
  expressed through the named shifts and rates of
  :class:`~twophoton.bath.PhononRates`.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .bath import compute_rates, half_fourier, mean_displacement
from .errors import ConfigurationError
from .operators import build_operators, build_space


def dag(op):
    return op.conj().T


def spre(a):
    return np.kron(np.eye(a.shape[0]), a)


def spost(b):
    return np.kron(b.T, np.eye(b.shape[0]))


def sprepost(a, b):
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(b.T, a)


def commutator_super(h):
    """``rho -> -i [h, rho]``."""
    return -1j * (spre(h) - spost(h))


def vec(rho):
    return np.asarray(rho).ravel(order="F")


def unvec(v, dim):
    return np.asarray(v).reshape((dim, dim), order="F")


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Constant generator acting on column-stacked density matrices."""

    matrix: np.ndarray
    space: object
    kind: str = "full"

    def __post_init__(self):
        d2 = self.space.dim**2
        if self.matrix.shape != (d2, d2):
            raise ConfigurationError(
                f"superoperator has shape {self.matrix.shape}, expected {(d2, d2)}")
        self.matrix.setflags(write=False)

    @property
    def dim(self):
        return self.space.dim

    def apply(self, rho):
        """Return ``L(rho)`` as a ``dim x dim`` matrix."""
        return unvec(self.matrix @ vec(rho), self.dim)

    def __add__(self, other):
        if isinstance(other, Superoperator):
            other = other.matrix
        return Superoperator(self.matrix + other, self.space, self.kind)

    def eigenvalues(self):
        return np.linalg.eigvals(self.matrix)

    def to_csv(self, path, tol=0.0):
        """Write nonzero entries as ``row, col, re, im`` rows."""
        rows, cols = np.nonzero(np.abs(self.matrix) > tol)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "col", "re", "im"])
            for r, c in zip(rows, cols):
                z = self.matrix[r, c]
                w.writerow([r, c, f"{z.real:.17g}", f"{z.imag:.17g}"])


def system_hamiltonian(sys, rates, ops, coupling=True):
    """``H_s = D1 s1+ s1- + D2 s2+ s2- + <B> (S + S^dag)``, ``S = sum g_i s_i+ a``.

    ``rates`` may be a :class:`PhononRates` or a bare ``<B>`` value.
    """
    mean_b = getattr(rates, "mean_b", rates)
    h = sys.delta1 * ops.sp1 @ ops.sm1 + sys.delta2 * ops.sp2 @ ops.sm2
    if coupling:
        s = _jump_s(sys, ops)
        h = h + mean_b * (s + dag(s))
    return h


def _jump_s(sys, ops):
    return sys.g1 * ops.sp1 @ ops.a + sys.g2 * ops.sp2 @ ops.a


def lindblad_dissipator(c_op, rate):
    """``-(rate/2)(O^dag O rho - 2 O rho O^dag + rho O^dag O)`` as a matrix."""
    if rate < 0:
        raise ConfigurationError(f"Lindblad rate must be >= 0, got {rate}")
    if rate == 0:
        n = c_op.shape[0]
        return np.zeros((n * n, n * n), dtype=complex)
    odo = dag(c_op) @ c_op
    return -0.5 * rate * (spre(odo) - 2 * sprepost(c_op, dag(c_op)) + spost(odo))


def cross_dissipator(a, b, rate):
    """``-(rate/2)(A B rho - 2 B rho A + rho A B)``.

    Paired with its Hermitian-conjugate family (swapped dot indices and
    conjugated rate) this keeps the generator trace-free and Hermiticity
    preserving even for complex ``rate``.
    """
    ab = a @ b
    return -0.5 * rate * (spre(ab) - 2 * sprepost(b, a) + spost(ab))


def _background(sys, ops):
    """Cavity loss, radiative decay and pure dephasing."""
    out = lindblad_dissipator(ops.a, sys.kappa)
    for i, (gam, gam_d) in enumerate(((sys.gamma1, sys.gamma1_d),
                                      (sys.gamma2, sys.gamma2_d))):
        sm = ops.sigma_minus(i)
        out = out + lindblad_dissipator(sm, gam)
        out = out + lindblad_dissipator(dag(sm) @ sm, gam_d)
    return out


def phonon_dissipator_full(h_s, ops, bath, sys):
    """Phonon dissipator with the propagator of ``h_s`` inside the kernel.

    With ``X_g = S + S^dag`` and ``X_u = i(S - S^dag)``, each operator is
    dressed in the eigenbasis of ``h_s`` as
    ``(X~)_mn = (X)_mn K_j(-(E_m - E_n))`` and the dissipator is
    ``-sum_j ([X_j, X~_j rho] + h.c.)``.
    """
    d = ops.space.dim
    if not bath.coupled:
        return np.zeros((d * d, d * d), dtype=complex)
    s = _jump_s(sys, ops)
    x_ops = {"g": s + dag(s), "u": 1j * (s - dag(s))}
    energies, v = np.linalg.eigh(h_s)
    bohr = energies[:, None] - energies[None, :]
    out = np.zeros((d * d, d * d), dtype=complex)
    for name, x in x_ops.items():
        xe = dag(v) @ x @ v
        mask = np.abs(xe) > 1e-14
        if not mask.any():
            continue
        # one transform per distinct Bohr frequency
        freqs, inverse = np.unique(np.round(-bohr[mask], 11), return_inverse=True)
        coeff = np.zeros_like(xe)
        coeff[mask] = half_fourier(name, freqs, bath)[inverse]
        xt = v @ (xe * coeff) @ dag(v)
        out -= (spre(x @ xt) - sprepost(xt, x)
                + spost(dag(xt) @ x) - sprepost(x, dag(xt)))
    return out


def full_liouvillian(sys, bath, ops=None, rates=None):
    """Generator of the full polaron master equation."""
    ops = ops or build_operators(build_space())
    mean_b = rates.mean_b if rates is not None else mean_displacement(bath)
    h_s = system_hamiltonian(sys, mean_b, ops)
    mat = (commutator_super(h_s) + _background(sys, ops)
           + phonon_dissipator_full(h_s, ops, bath, sys))
    return Superoperator(mat, ops.space, "full")


def effective_hamiltonian(sys, rates, ops):
    """``H_s`` plus phonon-induced Stark shifts and two-photon / transfer terms."""
    h = system_hamiltonian(sys, rates, ops)
    ups = [ops.sigma_plus(i) @ ops.a for i in range(2)]
    downs = [dag(u) for u in ups]
    for i in range(2):
        h = h + rates.stark_plus[i] * downs[i] @ ups[i]
        h = h + rates.stark_minus[i] * ups[i] @ downs[i]
    terms = (-1j * rates.omega_2ph * downs[0] @ downs[1]
             - 1j * rates.omega_plus * ups[0] @ downs[1]
             - 1j * rates.omega_minus * downs[0] @ ups[1])
    return h + terms + dag(terms)


def phonon_dissipator_approx(rates, ops, include_same_dot=True):
    """Far-detuned phonon dissipator assembled from ``rates``.

    ``include_same_dot`` keeps the sandwich terms ``A_i rho A_i`` of the
    two-photon families.  With them the result equals the coupling-free
    propagator limit of :func:`phonon_dissipator_full` exactly; without them
    emission probabilities move only at the 1e-3 level, but identical dots
    lose positivity (eigenvalues near -4e-3).
    """
    ups = [ops.sigma_plus(i) @ ops.a for i in range(2)]
    downs = [dag(u) for u in ups]
    out = 0
    for i in range(2):
        out = out + lindblad_dissipator(ups[i], rates.feed_plus[i])
        out = out + lindblad_dissipator(downs[i], rates.feed_minus[i])
    pairs = [(0, 1), (1, 0)]
    if include_same_dot:
        pairs += [(0, 0), (1, 1)]
    for i, j in pairs:
        out = out + cross_dissipator(ups[i], ups[j], rates.two_photon_pp[i, j])
        out = out + cross_dissipator(downs[i], downs[j], rates.two_photon_mm[i, j])
        if i != j:
            out = out + cross_dissipator(ups[i], downs[j], rates.transfer_pm[i, j])
            out = out + cross_dissipator(downs[i], ups[j], rates.transfer_mp[i, j])
    return out


def approx_liouvillian(sys, bath, ops=None, rates=None, include_same_dot=True):
    """Generator of the far-detuned master equation."""
    ops = ops or build_operators(build_space())
    rates = rates if rates is not None else compute_rates(sys, bath)
    mat = (commutator_super(effective_hamiltonian(sys, rates, ops))
           + _background(sys, ops)
           + phonon_dissipator_approx(rates, ops, include_same_dot))
    return Superoperator(mat, ops.space, "approximate")


def build_liouvillian(kind, sys, bath, ops=None, **kwargs):
    """Dispatch on ``kind`` in ``{'full', 'approx', 'approximate'}``."""
    if kind == "full":
        return full_liouvillian(sys, bath, ops, **kwargs)
    if kind in ("approx", "approximate"):
        return approx_liouvillian(sys, bath, ops, **kwargs)
    raise ConfigurationError(f"unknown generator {kind!r}; use 'full' or 'approx'")

"""Spectrum of the photons leaking out of the cavity.

For a decaying initial state the emitted spectrum is the double integral

    S(w) = 2 kappa Re int_0^inf dt int_0^inf dtau C(t, tau) exp(-i w tau)

of ``C(t, tau) = <a^dag(t + tau) a(t)> = Tr[a^dag exp(L tau)(a rho(t))]``,
with ``w`` measured from the cavity frequency.  The prefactor makes
``int S dw / 2 pi`` the number of photons emitted through the cavity.
"""
import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import expm
from scipy.signal import argrelmax

from .dynamics import tail_integral
from .errors import ConfigurationError, HorizonWarning, NumericalAccuracyError
from .liouvillian import unvec, vec

DECAY_TOL = 1e-6


def default_omega_grid(n=600, span=8.0):
    return np.linspace(-span, span, n)


def _trapezoid_weights(x):
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    h = np.diff(x)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def _adjoint_row(op):
    # Tr[op X] = vec(op^T) . vec(X)
    return vec(op.T)


def _correlation_columns(generator, seeds, tau_grid, a_dag):
    """``Tr[a^dag exp(L tau_m) seed_k]`` for every seed and tau."""
    tau = np.asarray(tau_grid, dtype=float)
    h = np.diff(tau)
    if tau[0] != 0 or not np.allclose(h, h[0], rtol=1e-9):
        raise ValueError("tau_grid must be uniform and start at 0")
    prop = expm(generator.matrix * h[0])
    row = _adjoint_row(a_dag)
    v = np.stack([vec(s) for s in seeds], axis=1)
    out = np.empty((len(seeds), tau.size), dtype=complex)
    out[:, 0] = row @ v
    for m in range(1, tau.size):
        v = prop @ v
        out[:, m] = row @ v
    return out, v


def two_time_correlation(generator, ts, tau_grid, ops, t_index=None):
    """Matrix ``C[k, m] = <a^dag(t_k + tau_m) a(t_k)>``.

    ``t_index`` selects a subset of the samples in ``ts`` (default: all).
    """
    idx = np.arange(ts.times.size) if t_index is None else np.asarray(t_index)
    seeds = [ops.a @ ts.states[k] for k in idx]
    c, _ = _correlation_columns(generator, seeds, tau_grid, ops.ad)
    return c


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    omega: np.ndarray
    values: np.ndarray
    raw: np.ndarray
    raw_norm: float

    def peaks(self, rel_height=1e-3):
        """Positions of local maxima above ``rel_height`` of the top peak."""
        idx = argrelmax(self.values)[0]
        return self.omega[idx[self.values[idx] > rel_height]]

    def window_weight(self, half_width=1.0):
        """Fraction of the emitted intensity with ``|w| < half_width``."""
        inside = np.abs(self.omega) < half_width
        return float(trapezoid(np.where(inside, self.raw, 0.0), self.omega)
                     / trapezoid(self.raw, self.omega))

    def photon_number(self):
        """``int S dw / 2 pi`` over the sampled window."""
        return float(trapezoid(self.raw, self.omega) / (2 * np.pi))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["omega", "S_normalized", "S_raw"])
            for row in zip(self.omega, self.values, self.raw):
                w.writerow([f"{x:.17g}" for x in row])


def _normalize(omega, s_complex, kappa):
    raw = 2 * kappa * s_complex.real
    peak = np.abs(raw).max()
    if peak == 0:
        return SpectrumResult(omega, np.zeros_like(raw), raw, 0.0)
    raw_max = raw.max()
    if raw.min() < -DECAY_TOL * peak:
        raise NumericalAccuracyError(
            f"spectrum is negative ({raw.min():.2e} vs peak {raw_max:.2e}); "
            f"refine the time grids")
    return SpectrumResult(omega, raw / raw_max, raw, float(raw_max))


def emission_spectrum(c, t_grid, tau_grid, omega_grid, kappa):
    """Double trapezoid transform of a sampled correlation matrix ``c``."""
    c = np.asarray(c)
    omega = np.asarray(omega_grid, dtype=float)
    peak = np.abs(c).max()
    if peak > 0 and (np.abs(c[-1]).max() > DECAY_TOL * peak
                     or np.abs(c[:, -1]).max() > DECAY_TOL * peak):
        warnings.warn(HorizonWarning(
            "correlation has not decayed below 1e-6 of its peak at the grid "
            "edge; spectrum is truncated"), stacklevel=2)
    profile = _trapezoid_weights(t_grid) @ c
    s = _fourier_sum(omega, np.asarray(tau_grid, float), _trapezoid_weights(tau_grid) * profile)
    return _normalize(omega, s, kappa)


def cavity_spectrum(generator, ts, ops, kappa, omega_grid=None, tau_max=None,
                    close_tails=True):
    """Spectrum of a trajectory, with the double integral taken by linearity.

    The t-integral is done first on the seeds, ``Y = sum_k w_k a rho(t_k)``,
    so only one operator is propagated in tau.  Both trapezoid sums carry
    the leading Euler-Maclaurin end correction, built from exact
    derivatives ``L rho``; without it the tau sum leaves an ``O(dt^2)`` offset
    that does not decay in omega.  With ``close_tails`` the remainders
    beyond the last t sample and beyond ``tau_max`` are added exactly from
    the generator's eigen-decomposition; otherwise a horizon warning is
    raised when they are not negligible.
    """
    omega = default_omega_grid() if omega_grid is None else np.asarray(omega_grid, float)
    t = ts.times
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9):
        raise ConfigurationError("cavity_spectrum needs a uniform time grid")
    tau_max = t[-1] if tau_max is None else tau_max
    tau = np.linspace(0.0, tau_max, int(round(tau_max / h)) + 1)
    dim = generator.dim
    lmat = generator.matrix
    w = _trapezoid_weights(t)
    x = np.tensordot(w, ts.states, axes=1)
    x = x - h**2 / 12 * unvec(lmat @ (vec(ts.states[-1]) - vec(ts.states[0])), dim)
    if close_tails:
        x = x + tail_integral(generator, ts.states[-1])
    y = ops.a @ x
    c, v_end = _correlation_columns(generator, [y], tau, ops.ad)
    c = c[0]
    v_end = v_end[:, 0]
    s = _fourier_sum(omega, tau, _trapezoid_weights(tau) * c)
    # end correction -h^2/12 [f'(tau_max) - f'(0)] for f = C exp(-i w tau)
    row = _adjoint_row(ops.ad)
    dc0, dc1 = row @ (lmat @ vec(y)), row @ (lmat @ v_end)
    fp0 = dc0 - 1j * omega * c[0]
    fp1 = (dc1 - 1j * omega * c[-1]) * np.exp(-1j * omega * tau[-1])
    s = s - (tau[1] - tau[0])**2 / 12 * (fp1 - fp0)
    start = np.abs(c).max()
    if close_tails:
        s = s + np.exp(-1j * omega * tau[-1]) * _resolvent_tail(
            generator, unvec(v_end, dim), ops.ad, omega)
    elif start > 0 and abs(c[-1]) > DECAY_TOL * start:
        warnings.warn(HorizonWarning(
            f"|C(tau_max)| = {abs(c[-1]):.2e} relative to {start:.2e}; "
            f"spectrum is truncated"), stacklevel=2)
    return _normalize(omega, s, kappa)


def _fourier_sum(omega, tau, weighted, block=256):
    """``sum_m weighted_m exp(-i w tau_m)`` for each ``w``, in memory-bounded blocks."""
    out = np.empty(omega.size, dtype=complex)
    for start in range(0, omega.size, block):
        sl = slice(start, start + block)
        out[sl] = np.exp(-1j * np.outer(omega[sl], tau)) @ weighted
    return out


def _resolvent_tail(generator, z, a_dag, omega):
    """``int_0^inf Tr[a^dag exp(L s) z] exp(-i w s) ds`` for each ``w``."""
    lam, right = np.linalg.eig(generator.matrix)
    coef = np.linalg.solve(right, vec(z))
    proj = (_adjoint_row(a_dag) @ right) * coef
    keep = np.abs(lam) > 1e-10
    if np.abs(proj[~keep]).max(initial=0.0) > 1e-8:
        raise NumericalAccuracyError("seed overlaps the stationary mode")
    lam, proj = lam[keep], proj[keep]
    return (proj[None, :] * (-1.0 / (lam[None, :] - 1j * omega[:, None]))).sum(axis=1)


def resolvent_spectrum(generator, rho0, ops, kappa, omega_grid=None):
    """Grid-free spectrum from the generator alone.

    Uses ``int rho dt`` from :func:`~twophoton.dynamics.tail_integral` and
    the eigen-decomposition of the generator for the tau integral; serves
    as an independent check of :func:`cavity_spectrum`.
    """
    omega = default_omega_grid() if omega_grid is None else np.asarray(omega_grid, float)
    x = tail_integral(generator, rho0)
    s = _resolvent_tail(generator, ops.a @ x, ops.ad, omega)
    return _normalize(omega, s, kappa)

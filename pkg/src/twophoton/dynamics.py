"""Time evolution from the doubly excited state and emission probabilities.

The generator is constant, so the state is advanced with one matrix
exponential per distinct step size.  Emission probabilities are cavity-flux
integrals of single basis-state populations:

    P  = kappa int <g e 1|rho|g e 1> dt      Q = kappa int <e g 1|rho|e g 1> dt
    R  = 2 kappa int <g g 2|rho|g g 2> dt    R' = kappa int <g g 1|rho|g g 1> dt
"""
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import expm, null_space

from .errors import ConfigurationError, HorizonWarning, NumericalAccuracyError
from .liouvillian import unvec, vec
from .operators import basis_projector

TRACE_TOL = 1e-6
NEG_TOL = 1e-6
RESIDUAL_TOL = 1e-6

#: basis states whose populations define P, Q, R and R'
EMISSION_STATES = {"P": ("g", "e", 1), "Q": ("e", "g", 1),
                   "R": ("g", "g", 2), "R_prime": ("g", "g", 1)}
_WEIGHT = {"P": 1.0, "Q": 1.0, "R": 2.0, "R_prime": 1.0}


def initial_state(space):
    """``|e1, e2, 0><e1, e2, 0|``."""
    return basis_projector("e", "e", 0, space)


def time_grid(t_max=400.0, dt=0.02):
    n = int(round(t_max / dt))
    if n < 1 or not np.isclose(n * dt, t_max, rtol=1e-9, atol=1e-12):
        raise ConfigurationError(f"t_max={t_max} is not a multiple of dt={dt}")
    return np.linspace(0.0, t_max, n + 1)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled density matrices ``states[k] = rho(times[k])``."""

    times: np.ndarray
    states: np.ndarray
    space: object
    generator: object = field(default=None, repr=False)

    def population(self, q1, q2, n):
        i = self.space.index(q1, q2, n)
        return self.states[:, i, i].real

    @property
    def populations(self):
        """``{label: curve}`` for every basis state, e.g. ``'ee0'``."""
        diag = np.einsum("kii->ki", self.states).real
        return {lab: diag[:, i] for i, lab in enumerate(self.space.labels())}

    def expectation(self, op):
        return np.einsum("ij,kji->k", op, self.states)

    @property
    def trace_error(self):
        return np.abs(np.einsum("kii->k", self.states) - 1.0)

    def residual_excitation(self):
        """Mean excitation number left at the final sample."""
        n = self.space.excitation_numbers()
        return float(np.diagonal(self.states[-1]).real @ n)


def propagate(generator, rho0, t_grid, check=True, trace_tol=TRACE_TOL,
              neg_tol=NEG_TOL):
    """Integrate ``d rho / dt = L rho`` on ``t_grid`` by exact stepping.

    One ``expm(L dt)`` is computed for each distinct step (steps equal to
    1e-12 relative are shared).  With ``check`` every sample is tested for
    trace drift beyond ``trace_tol`` and eigenvalues below ``-neg_tol``.

    Second-order phonon generators are not completely positive; from a pure
    initial state they dip to about -3e-4 during the first 0.1 / g1.  Runs
    with phonons therefore usually need a looser ``neg_tol``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
        raise ConfigurationError("t_grid must be a strictly increasing 1-D sequence")
    mat = generator.matrix
    dim = generator.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ConfigurationError(f"initial state has shape {rho0.shape}, need {(dim, dim)}")
    steps = np.diff(t)
    cache = {}
    out = np.empty((t.size, dim, dim), dtype=complex)
    v = vec(rho0)
    out[0] = rho0
    for k, h in enumerate(steps, start=1):
        key = round(h, 12 - int(np.floor(np.log10(h))))
        prop = cache.get(key)
        if prop is None:
            prop = cache[key] = expm(mat * h)
        v = prop @ v
        out[k] = unvec(v, dim)
    if check:
        _check_states(t, out, trace_tol, neg_tol)
    return TimeSeries(t, out, generator.space, generator)


def _check_states(times, states, trace_tol, neg_tol):
    tr = np.abs(np.einsum("kii->k", states) - 1.0)
    bad = np.nonzero(tr > trace_tol)[0]
    if bad.size:
        k = bad[0]
        raise NumericalAccuracyError(
            f"trace drifted by {tr[k]:.2e} at t = {times[k]:g}")
    herm = 0.5 * (states + states.conj().transpose(0, 2, 1))
    lam = np.linalg.eigvalsh(herm)[:, 0]
    bad = np.nonzero(lam < -neg_tol)[0]
    if bad.size:
        k = bad[0]
        raise NumericalAccuracyError(
            f"density matrix has eigenvalue {lam[k]:.2e} at t = {times[k]:g}")


def tail_integral(generator, rho):
    """``int_T^inf (rho(t) - rho_ss) dt`` for ``rho(T) = rho``.

    Solves ``L X = rho_ss - rho`` with ``Tr X = 0``; ``rho_ss`` is the
    trace-one null vector of the generator.
    """
    mat = generator.matrix
    dim = generator.dim
    ns = null_space(mat, rcond=1e-10)
    if ns.shape[1] != 1:
        raise NumericalAccuracyError(
            f"generator has a {ns.shape[1]}-dimensional null space; "
            f"the long-time limit is not unique")
    rss = unvec(ns[:, 0], dim)
    rss = rss / np.trace(rss)
    trace_row = vec(np.eye(dim))[None, :]
    lhs = np.vstack([mat, trace_row])
    rhs = np.concatenate([vec(rss - rho), [0.0]])
    x = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    return unvec(x, dim)


def time_integrated_state(generator, rho0):
    """``int_0^inf (rho(t) - rho_ss) dt`` from the generator alone."""
    return tail_integral(generator, rho0)


@dataclass(frozen=True)
class EmissionProbabilities:
    P: float
    Q: float
    R: float
    R_prime: float
    time_resolved: dict = field(default=None, repr=False, compare=False)
    tail_closed: bool = False
    residual: float = 0.0

    @property
    def total(self):
        return self.P + self.Q + self.R

    def as_dict(self):
        return {"P": self.P, "Q": self.Q, "R": self.R, "R_prime": self.R_prime}


def emission_probabilities(ts, kappa, close_tail=True):
    """Cumulative emission curves and their ``t -> infinity`` limits.

    The curves are cumulative trapezoid integrals on the propagation grid.
    When ``close_tail`` is set and the series carries its generator, the
    remainder beyond the last sample is added exactly from the generator.
    Otherwise a residual excitation above 1e-6 at the end of the grid raises
    a :class:`HorizonWarning`.
    """
    curves = {}
    finals = {}
    residual = ts.residual_excitation()
    can_close = close_tail and ts.generator is not None
    tail = tail_integral(ts.generator, ts.states[-1]) if can_close else None
    for name, (q1, q2, n) in EMISSION_STATES.items():
        w = _WEIGHT[name] * kappa
        pop = ts.population(q1, q2, n)
        curve = w * cumulative_trapezoid(pop, ts.times, initial=0.0)
        curves[name] = curve
        final = curve[-1]
        if tail is not None:
            i = ts.space.index(q1, q2, n)
            final += w * tail[i, i].real
        finals[name] = float(final)
    if not can_close and residual >= RESIDUAL_TOL:
        warnings.warn(HorizonWarning(
            f"residual excitation {residual:.3e} at t = {ts.times[-1]:g}; "
            f"emission probabilities are truncated"), stacklevel=2)
    return EmissionProbabilities(time_resolved=curves, tail_closed=can_close,
                                 residual=residual, **finals)


def trajectory_observables(ts, kappa):
    """``{'t', 'rho_ee', 'P', 'Q', 'R', 'R_prime'}`` aligned to ``ts.times``."""
    with warnings.catch_warnings():
        # curves are finite-time quantities; truncation is expected here
        warnings.simplefilter("ignore", HorizonWarning)
        probs = emission_probabilities(ts, kappa, close_tail=False)
    out = {"t": ts.times, "rho_ee": ts.population("e", "e", 0)}
    out.update(probs.time_resolved)
    return out


def photon_ledger(ts, sys, close_tail=True):
    """Photons leaving through each channel; their sum is the initial excitation."""
    labels = ts.space.labels()
    n_photon = np.array([int(lab[2:]) for lab in labels], dtype=float)
    e1 = np.array([lab[0] == "e" for lab in labels], dtype=float)
    e2 = np.array([lab[1] == "e" for lab in labels], dtype=float)
    diag = np.einsum("kii->ki", ts.states).real
    integrated = np.trapezoid(diag, ts.times, axis=0)
    if close_tail and ts.generator is not None:
        integrated = integrated + np.diagonal(
            tail_integral(ts.generator, ts.states[-1])).real
    return {"cavity": float(sys.kappa * integrated @ n_photon),
            "qd1": float(sys.gamma1 * integrated @ e1),
            "qd2": float(sys.gamma2 * integrated @ e2)}


def write_trajectory_csv(path, ts, kappa):
    obs = trajectory_observables(ts, kappa)
    tr = ts.trace_error
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "rho_ee", "P", "Q", "R", "R_prime", "trace_err"])
        for k in range(ts.times.size):
            w.writerow([f"{obs[c][k]:.17g}" for c in
                        ("t", "rho_ee", "P", "Q", "R", "R_prime")] + [f"{tr[k]:.17g}"])

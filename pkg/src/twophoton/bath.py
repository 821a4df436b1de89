"""Phonon bath: spectral function, correlation function and polaron kernels.

Units follow the rest of the package: hbar = 1 and the QD1-cavity coupling
g1 = 1, so frequencies are in units of g1 and times in units of 1/g1.  The
temperature enters only through ``coth(omega / 2 kT)`` where ``kT`` is
converted from Kelvin with ``energy_scale`` (hbar * g1 in meV).

Every rate below is a half-sided Fourier transform

    K(omega) = int_0^inf G(tau) exp(i omega tau) dtau

of one of the polaron Green functions ``G_pm = <B>^2 (exp(+-phi) - 1)``.
"""
import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import constants
from scipy.special import wofz

from .errors import ConfigurationError, HorizonError, NumericalAccuracyError

#: Boltzmann constant in meV / K.
K_B_MEV = constants.k / constants.e * 1e3

KERNEL_DECAY_TOL = 1e-10
QUAD_REL_TOL = 1e-6
_TAIL_STEP = 0.02
_MAX_HORIZON = 1e4


@dataclass(frozen=True)
class BathSpec:
    """Parameters of the super-Ohmic phonon bath.

    ``alpha_p`` is in units of 1/g1**2 and ``omega_b`` in units of g1.
    ``alpha_p = 0`` switches the electron-phonon coupling off entirely.
    ``tau_max=None`` picks the horizon automatically: ``8 / omega_b *
    (1 + T / 5 K)``, doubled until every kernel has decayed below 1e-10.
    """

    alpha_p: float = 1.42e-3
    omega_b: float = 10.0
    temperature: float = 0.0
    energy_scale: float = 0.1
    omega_cutoff_factor: float = 6.0
    omega_points: int = 2401
    tau_max: float = None
    tau_step: float = 1e-3

    def __post_init__(self):
        if self.alpha_p < 0:
            raise ConfigurationError(f"alpha_p must be >= 0, got {self.alpha_p}")
        if self.omega_b <= 0:
            raise ConfigurationError(f"omega_b must be > 0, got {self.omega_b}")
        if self.temperature < 0:
            raise ConfigurationError(
                f"temperature must be >= 0 K, got {self.temperature}")
        if self.energy_scale <= 0:
            raise ConfigurationError(
                f"energy_scale must be > 0 meV, got {self.energy_scale}")
        if self.omega_cutoff_factor <= 0 or self.omega_points < 3:
            raise ConfigurationError("omega quadrature needs a positive cutoff "
                                     "and at least 3 points")
        if self.tau_step <= 0 or (self.tau_max is not None and self.tau_max <= 0):
            raise ConfigurationError("tau_step and tau_max must be positive")

    @property
    def coupled(self):
        return self.alpha_p > 0

    @property
    def thermal_energy(self):
        """k_B T in units of hbar * g1."""
        return K_B_MEV * self.temperature / self.energy_scale

    @property
    def default_tau_max(self):
        return 8.0 / self.omega_b * (1.0 + self.temperature / 5.0)

    def with_temperature(self, temperature):
        return replace(self, temperature=temperature)


#: Bath with the electron-phonon coupling switched off.
NO_PHONONS = BathSpec(alpha_p=0.0)


def spectral_density(omega, bath):
    """``J(omega) = alpha_p omega^3 exp(-omega^2 / 2 omega_b^2)``."""
    omega = np.asarray(omega, dtype=float)
    return bath.alpha_p * omega**3 * np.exp(-omega**2 / (2 * bath.omega_b**2))


def simpson_weights(n, h):
    """Composite Simpson weights for ``n`` (odd) equally spaced samples."""
    if n % 2 == 0 or n < 3:
        raise ValueError(f"Simpson rule needs an odd number >= 3 of points, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def _phi_integrands(bath, n):
    omega = np.linspace(0.0, bath.omega_cutoff_factor * bath.omega_b, n)
    j_over_w2 = bath.alpha_p * omega * np.exp(-omega**2 / (2 * bath.omega_b**2))
    kt = bath.thermal_energy
    if kt > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            thermal = np.where(omega > 0,
                               j_over_w2 / np.tanh(omega / (2 * kt)),
                               2 * bath.alpha_p * kt)
    else:
        thermal = j_over_w2
    return omega, thermal, j_over_w2


def _phi_quadrature(tau, bath, n):
    omega, thermal, j_over_w2 = _phi_integrands(bath, n)
    w = simpson_weights(n, omega[1] - omega[0])
    out = np.empty(tau.shape, dtype=complex)
    for start in range(0, tau.size, 2048):
        arg = np.outer(tau[start:start + 2048], omega)
        out[start:start + 2048] = (np.cos(arg) @ (w * thermal)
                                   - 1j * (np.sin(arg) @ (w * j_over_w2)))
    return out, float(np.sum(w * thermal))


def _phi_zero_temperature(tau, bath):
    # closed form of alpha int_0^inf w exp(-w^2/2wb^2) exp(-i w tau) dw
    x = tau * bath.omega_b / np.sqrt(2.0)
    return bath.alpha_p * bath.omega_b**2 * (1 - 1j * np.sqrt(np.pi) * x * wofz(-x))


def correlation_phi(tau, bath, check=True):
    """Phonon correlation function ``phi(tau)``.

    Negative ``tau`` is served through ``phi(-tau) = conj(phi(tau))``.  With
    ``check`` the frequency quadrature is repeated on a doubled grid and a
    :class:`NumericalAccuracyError` is raised if the result moves by more
    than 1e-6 relative to ``phi(0)``.
    """
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    tau = np.atleast_1d(tau)
    if not bath.coupled:
        out = np.zeros(tau.shape, dtype=complex)
        return out[0] if scalar else out
    t = np.abs(tau)
    if bath.temperature == 0:
        out = _phi_zero_temperature(t, bath)
        if check:
            _, ref = _phi_quadrature(np.array([0.0]), bath, bath.omega_points | 1)
            exact = bath.alpha_p * bath.omega_b**2
            _assert_quadrature(ref, exact, exact, "phi(0) at T=0")
    else:
        n = bath.omega_points | 1
        out, scale = _phi_quadrature(t, bath, n)
        if check:
            fine, _ = _phi_quadrature(t, bath, 2 * n - 1)
            _assert_quadrature(out, fine, scale, "phi(tau)")
    out = np.where(tau < 0, out.conj(), out)
    return out[0] if scalar else out


def _assert_quadrature(coarse, fine, scale, what):
    # errors are measured relative to phi(0), the largest value phi takes
    err = np.max(np.abs(np.asarray(coarse) - fine)) / scale
    if err > QUAD_REL_TOL:
        raise NumericalAccuracyError(
            f"{what}: quadrature moved by {err:.2e} (relative) on refinement; "
            f"increase omega_points")


def mean_displacement(bath):
    """Thermal expectation ``<B> = exp(-Re phi(0) / 2)``."""
    if not bath.coupled:
        return 1.0
    return float(np.exp(-correlation_phi(0.0, bath).real / 2.0))


def green_functions(tau, bath, mean_b=None):
    """Return ``(G_g, G_u, G_+, G_-)`` at ``tau``."""
    b2 = (mean_displacement(bath) if mean_b is None else mean_b) ** 2
    phi = correlation_phi(tau, bath)
    g_g = b2 * (np.cosh(phi) - 1)
    g_u = b2 * np.sinh(phi)
    # expm1 keeps G_+- accurate where phi is tiny
    return g_g, g_u, b2 * np.expm1(phi), b2 * np.expm1(-phi)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Green functions tabulated on a (possibly two-segment) tau grid."""

    bath: BathSpec
    mean_b: float
    tau: np.ndarray
    weights: np.ndarray
    segments: tuple = field(repr=False)  # (first, last, step) per uniform segment
    kernels: dict = field(repr=False)

    @property
    def tau_max(self):
        return float(self.tau[-1])

    def kernel(self, name):
        if isinstance(name, str):
            try:
                return self.kernels[name]
            except KeyError:
                raise ConfigurationError(
                    f"unknown kernel {name!r}; use one of {sorted(self.kernels)}"
                ) from None
        values = np.asarray(name, dtype=complex)
        if values.shape != self.tau.shape:
            raise ConfigurationError(
                f"sampled kernel has shape {values.shape}, grid is {self.tau.shape}")
        return values


def _segment(t0, t1, h):
    # point count 4m + 1 so that dropping every other point stays Simpson-able
    m = max(1, int(np.ceil((t1 - t0) / (4 * h))))
    return np.linspace(t0, t0 + 4 * m * h, 4 * m + 1)


def _decayed_at(t, bath, mean_b):
    _, _, gp, gm = green_functions(np.array([t]), bath, mean_b)
    return max(abs(gp[0]), abs(gm[0])) < KERNEL_DECAY_TOL


@lru_cache(maxsize=64)
def phonon_kernels(bath):
    """Tabulate ``G_g, G_u, G_+, G_-`` and their conjugates for ``bath``.

    The grid is a fine segment of step ``tau_step`` up to the default
    horizon, followed (only when needed) by a coarse tail of step 0.02 out to
    the first doubling of the horizon at which the kernels have decayed.
    """
    mean_b = mean_displacement(bath)
    h = bath.tau_step
    t_fine = min(bath.default_tau_max, bath.tau_max or np.inf)
    if bath.tau_max is not None:
        t_end = bath.tau_max
    else:
        t_end = t_fine
        while bath.coupled and not _decayed_at(t_end, bath, mean_b):
            t_end *= 2
            if t_end > _MAX_HORIZON:
                raise HorizonError(
                    f"phonon kernels have not decayed below {KERNEL_DECAY_TOL} "
                    f"by tau = {_MAX_HORIZON:g}")
    fine = _segment(0.0, t_fine, h)
    segs, steps = [fine], [h]
    if t_end > fine[-1] + 1e-12:
        segs.append(_segment(fine[-1], t_end, max(h, _TAIL_STEP)))
        steps.append(max(h, _TAIL_STEP))
    lengths = [s.size for s in segs]
    tau = np.concatenate([segs[0]] + [s[1:] for s in segs[1:]])
    weights = np.concatenate(
        [simpson_weights(n, st) if k == 0 else simpson_weights(n, st)[1:]
         for k, (n, st) in enumerate(zip(lengths, steps))])
    # segment joints carry the sum of both end weights
    bounds, pos = [], 0
    for k, (n, st) in enumerate(zip(lengths, steps)):
        if k:
            weights[pos] += st / 3.0
        bounds.append((pos, pos + n - 1, st))
        pos += n - 1
    g_g, g_u, g_p, g_m = green_functions(tau, bath, mean_b)
    kernels = {"g": g_g, "u": g_u, "+": g_p, "-": g_m,
               "+*": g_p.conj(), "-*": g_m.conj()}
    for arr in kernels.values():
        arr.setflags(write=False)
    return KernelTable(bath, mean_b, tau, weights, tuple(bounds), kernels)


def half_fourier(kernel, omega, bath, check=True):
    """``K(omega) = int_0^inf kernel(tau) exp(i omega tau) dtau``.

    ``kernel`` is one of ``'g', 'u', '+', '-', '+*', '-*'`` or an array
    sampled on ``phonon_kernels(bath).tau``.  ``omega`` may be an array.

    Each uniform segment of the grid is integrated with Filon's rule
    (piecewise-quadratic kernel, exact oscillatory moments), so the error
    does not grow with ``omega * step`` on the coarse tail.  With ``check``
    the result is compared against the same rule on every other sample.
    """
    table = phonon_kernels(bath)
    values = table.kernel(kernel)
    omega = np.asarray(omega, dtype=float)
    scalar = omega.ndim == 0
    omega = np.atleast_1d(omega)
    if omega.size == 0:
        return np.zeros(0, dtype=complex)
    if check and np.abs(values[-1]) >= KERNEL_DECAY_TOL:
        raise HorizonError(
            f"kernel is {abs(values[-1]):.2e} at tau_max = {table.tau_max:g}; "
            f"extend tau_max")
    fine = _filon(values, table, omega)
    if check:
        coarse = _filon(values, table, omega, stride=2)
        scale = np.sum(np.abs(values) * table.weights)
        if scale > 0:
            err = np.abs(fine - coarse).max() / scale
            if err > QUAD_REL_TOL:
                raise NumericalAccuracyError(
                    f"half-Fourier transform changed by {err:.2e} under step "
                    f"halving; reduce tau_step")
    return fine[0] if scalar else fine


def _filon_coefficients(theta):
    """Filon's ``alpha, beta, gamma`` for ``theta = omega * step``."""
    th = np.asarray(theta, dtype=float)
    small = np.abs(th) < 0.2
    t = np.where(small, 1.0, th)
    sn, cs = np.sin(t), np.cos(t)
    alpha = 1 / t + sn * cs / t**2 - 2 * sn**2 / t**3
    beta = 2 * ((1 + cs**2) / t**2 - 2 * sn * cs / t**3)
    gamma = 4 * (sn / t**3 - cs / t**2)
    # series below 0.2 where the closed forms cancel
    t2 = th * th
    alpha = np.where(small, th * t2 * (2 / 45 - t2 * (2 / 315 - t2 * (
        2 / 4725 - t2 * 8 / 467775))), alpha)
    beta = np.where(small, 2 / 3 + t2 * (2 / 15 - t2 * (4 / 105 - t2 * (
        2 / 567 - t2 * (4 / 22275 - t2 * 4 / 675675)))), beta)
    gamma = np.where(small, 4 / 3 - t2 * (2 / 15 - t2 * (1 / 210 - t2 * (
        1 / 11340 - t2 * (1 / 997920 - t2 / 129729600)))), gamma)
    return alpha, beta, gamma


def _filon(values, table, omega, stride=1):
    """``int kernel exp(i omega tau)`` segment by segment with Filon's rule."""
    out = np.zeros(omega.shape, dtype=complex)
    for first, last, step in table.segments:
        f = values[first:last + 1:stride]
        x = table.tau[first:last + 1:stride]
        h = step * stride
        alpha, beta, gamma = _filon_coefficients(omega * h)
        even = np.zeros(f.size)
        even[::2] = 1.0
        even[[0, -1]] = 0.5
        odd = 1.0 - np.ceil(even)
        ends = f[-1] * np.exp(1j * omega * x[-1]) - f[0] * np.exp(1j * omega * x[0])
        out += h * (-1j * alpha * ends + beta * _transform(f * even, x, omega)
                    + gamma * _transform(f * odd, x, omega))
    return out


def _transform(weighted, tau, omega):
    out = np.zeros(omega.shape, dtype=complex)
    nz = np.nonzero(weighted)[0]
    weighted, tau = weighted[nz], tau[nz]
    for start in range(0, tau.size, 8192):
        sl = slice(start, start + 8192)
        out += np.exp(1j * np.outer(omega, tau[sl])) @ weighted[sl]
    return out


@dataclass(frozen=True)
class SystemParams:
    """Two QDs coupled to one cavity mode; rates and detunings in units of g1."""

    g1: float = 1.0
    g2: float = 1.0
    delta1: float = -5.0
    delta2: float = 0.0
    kappa: float = 0.1
    gamma1: float = 0.01
    gamma2: float = 0.01
    gamma1_d: float = 0.01
    gamma2_d: float = 0.01

    def __post_init__(self):
        for name in ("g1", "g2", "kappa", "gamma1", "gamma2", "gamma1_d", "gamma2_d"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value}")
        for name in ("delta1", "delta2"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @property
    def couplings(self):
        return (self.g1, self.g2)

    @property
    def detunings(self):
        return (self.delta1, self.delta2)

    def with_delta2(self, delta2):
        return replace(self, delta2=float(delta2))


@dataclass(frozen=True)
class PhononRates:
    """Phonon-induced shifts, couplings and rates of the far-detuned ME.

    Index ``i`` in the per-dot tuples is the dot (0 for QD1).  ``plus``
    quantities belong to the excitation channel ``sigma_i^+ a`` and ``minus``
    quantities to the cavity-feeding channel ``a^dag sigma_i^-``.  The 2x2
    cross-rate arrays are indexed ``[i, j]``; their diagonals are only used
    when same-dot terms are requested.  Cross rates are complex in general,
    with ``two_photon_pp[i, j] == conj(two_photon_mm[j, i])`` and
    ``transfer_pm[i, j] == conj(transfer_pm[j, i])``.
    """

    mean_b: float
    stark_plus: tuple
    stark_minus: tuple
    feed_plus: tuple
    feed_minus: tuple
    omega_2ph: complex
    omega_plus: complex
    omega_minus: complex
    two_photon_pp: np.ndarray
    two_photon_mm: np.ndarray
    transfer_pm: np.ndarray
    transfer_mp: np.ndarray

    @classmethod
    def zero(cls):
        z = np.zeros((2, 2), dtype=complex)
        return cls(1.0, (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0),
                   0j, 0j, 0j, z, z.copy(), z.copy(), z.copy())

    def table(self):
        """Flat ``{name: value}`` mapping, used for CSV/JSON output."""
        out = {"mean_B": self.mean_b}
        for i in range(2):
            out[f"stark_plus_{i + 1}"] = self.stark_plus[i]
            out[f"stark_minus_{i + 1}"] = self.stark_minus[i]
            out[f"feed_plus_{i + 1}"] = self.feed_plus[i]
            out[f"feed_minus_{i + 1}"] = self.feed_minus[i]
        out["omega_2ph"] = self.omega_2ph
        out["omega_plus"] = self.omega_plus
        out["omega_minus"] = self.omega_minus
        for name in ("two_photon_pp", "two_photon_mm", "transfer_pm", "transfer_mp"):
            arr = getattr(self, name)
            for i, j in ((0, 1), (1, 0)):
                out[f"{name}_{i + 1}{j + 1}"] = arr[i, j]
        return out


def compute_rates(sys, bath):
    """Evaluate every phonon-induced shift, coupling and rate for ``sys``.

    Frequencies are attached so that the far-detuned generator equals the
    full polaron dissipator with a coupling-free propagator term by term:
    ``feed_plus[i] = 2 g_i^2 Re K_+(-Delta_i)``, ``feed_minus[i] =
    2 g_i^2 Re K_+(Delta_i)`` and so on.
    """
    if not bath.coupled:
        return PhononRates.zero()
    g = np.array(sys.couplings, dtype=float)
    d = np.array(sys.detunings, dtype=float)
    freqs = np.concatenate([d, -d])
    kp = half_fourier("+", freqs, bath)
    km = half_fourier("-", freqs, bath)
    kp_pos, kp_neg = kp[:2], kp[2:]
    km_pos, km_neg = km[:2], km[2:]

    feed_plus = _nonnegative(2 * g**2 * kp_neg.real, "feed_plus")
    feed_minus = _nonnegative(2 * g**2 * kp_pos.real, "feed_minus")
    stark_plus = tuple(float(x) for x in g**2 * kp_neg.imag)
    stark_minus = tuple(float(x) for x in g**2 * kp_pos.imag)

    gg = g[0] * g[1]
    omega_2ph = 0.5 * gg * np.sum(km_pos - km_neg.conj())
    omega_plus = 0.5 * gg * (kp_pos[1] - kp_pos[0].conj())
    omega_minus = 0.5 * gg * (kp_neg[1] - kp_neg[0].conj())

    gij = np.outer(g, g)
    # [i, j] entries: K(. Delta_j) + conj K(. Delta_i)
    pp = gij * (km_neg[None, :] + km_pos.conj()[:, None])
    mm = gij * (km_pos[None, :] + km_neg.conj()[:, None])
    pm = gij * (kp_pos[None, :] + kp_pos.conj()[:, None])
    mp = gij * (kp_neg[None, :] + kp_neg.conj()[:, None])
    return PhononRates(
        mean_b=phonon_kernels(bath).mean_b,
        stark_plus=stark_plus, stark_minus=stark_minus,
        feed_plus=feed_plus, feed_minus=feed_minus,
        omega_2ph=complex(omega_2ph), omega_plus=complex(omega_plus),
        omega_minus=complex(omega_minus),
        two_photon_pp=pp, two_photon_mm=mm, transfer_pm=pm, transfer_mp=mp,
    )


def _nonnegative(values, name, tol=1e-8):
    # at T = 0 the absorption channels vanish exactly; quadrature leaves ~1e-10
    if np.any(values < -tol):
        raise NumericalAccuracyError(f"{name} rate is negative: {values}")
    return tuple(float(x) for x in np.clip(values, 0.0, None))


def kernel_dump(bath, omega_grid=None):
    """Diagnostic tables ``{name: (x, values)}`` for phi, G_+- and K_+-."""
    table = phonon_kernels(bath)
    out = {"phi": (table.tau, correlation_phi(table.tau, bath, check=False)),
           "G_plus": (table.tau, table.kernels["+"]),
           "G_minus": (table.tau, table.kernels["-"])}
    if omega_grid is not None:
        omega_grid = np.asarray(omega_grid, dtype=float)
        out["K_plus"] = (omega_grid, half_fourier("+", omega_grid, bath))
        out["K_minus"] = (omega_grid, half_fourier("-", omega_grid, bath))
    return out


def write_kernel_csv(path, x, values):
    """Write one :func:`kernel_dump` table as ``tau_or_omega, re, im`` rows."""
    values = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_or_omega", "re", "im"])
        for xi, z in zip(x, values):
            w.writerow([f"{xi:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])

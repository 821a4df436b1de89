import numpy as np
import pytest
from scipy import integrate

from twophoton.bath import (K_B_MEV, NO_PHONONS, BathSpec, PhononRates, SystemParams,
                            compute_rates, correlation_phi, green_functions,
                            half_fourier, kernel_dump, mean_displacement,
                            phonon_kernels, spectral_density,
                            write_kernel_csv)
from twophoton.errors import ConfigurationError, HorizonError, NumericalAccuracyError

DEFAULT = BathSpec()


def phi_oracle(tau, bath):
    """phi(tau) by adaptive quadrature, independent of the package grid."""
    kt = K_B_MEV * bath.temperature / bath.energy_scale

    def weight(w):
        if w == 0:
            return 2 * bath.alpha_p * kt if kt > 0 else 0.0
        base = bath.alpha_p * w * np.exp(-w**2 / (2 * bath.omega_b**2))
        return base / np.tanh(w / (2 * kt)) if kt > 0 else base

    hi = 12 * bath.omega_b
    re = integrate.quad(lambda w: weight(w) * np.cos(w * tau), 0, hi, limit=400,
                        epsabs=1e-13)[0]
    im = integrate.quad(lambda w: bath.alpha_p * w * np.exp(-w**2 / (2 * bath.omega_b**2))
                        * np.sin(w * tau), 0, hi, limit=400, epsabs=1e-13)[0]
    return re - 1j * im


def test_spectral_density_shape():
    assert spectral_density(0.0, DEFAULT) == 0
    w = np.linspace(0, 60, 600001)
    assert abs(w[np.argmax(spectral_density(w, DEFAULT))] - np.sqrt(3) * 10) < 1e-3
    val = integrate.quad(lambda x: spectral_density(x, DEFAULT) / x**2, 0, np.inf)[0]
    assert np.isclose(val, 0.142, rtol=1e-10)


def test_phi_zero_temperature_origin():
    phi0 = correlation_phi(0.0, DEFAULT)
    assert np.isclose(phi0, 0.142, rtol=1e-12)
    assert phi0.imag == 0


@pytest.mark.parametrize("temperature", [0.0, 5.0, 20.0])
@pytest.mark.parametrize("tau", [0.0, 0.05, 0.2, 0.7])
def test_phi_matches_adaptive_quadrature(temperature, tau):
    bath = BathSpec(temperature=temperature)
    # quadrature contract is 1e-6 relative to phi(0); the grid does ~1e-8
    scale = phi_oracle(0.0, bath).real
    assert abs(correlation_phi(tau, bath) - phi_oracle(tau, bath)) < 1e-7 * scale


def test_phi_conjugation_symmetry():
    bath = BathSpec(temperature=10)
    tau = np.array([0.03, 0.1, 0.4])
    assert np.allclose(correlation_phi(-tau, bath), correlation_phi(tau, bath).conj())


def test_phi_at_zero_matches_mean_displacement_5K():
    re0 = correlation_phi(0.0, BathSpec(temperature=5)).real
    assert abs(re0 - (-2 * np.log(0.90))) < 0.023


def test_phi_refinement_error():
    with pytest.raises(NumericalAccuracyError):
        correlation_phi(np.linspace(0, 1, 5), BathSpec(temperature=10, omega_points=21))


@pytest.mark.parametrize("temperature, expected", [(5, 0.90), (10, 0.84), (20, 0.73)])
def test_mean_displacement_values(temperature, expected):
    assert abs(mean_displacement(BathSpec(temperature=temperature)) - expected) < 0.01


def test_mean_displacement_limits():
    assert abs(mean_displacement(DEFAULT) - np.exp(-0.071)) < 1e-10
    assert mean_displacement(NO_PHONONS) == 1.0
    values = [mean_displacement(BathSpec(temperature=t)) for t in (0, 5, 10, 20)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_green_function_identities():
    bath = BathSpec(temperature=10)
    tau = np.linspace(0, 2, 51)
    gg, gu, gp, gm = green_functions(tau, bath)
    assert np.abs(gp - (gg + gu)).max() < 1e-12
    assert np.abs(gm - (gg - gu)).max() < 1e-12
    assert np.abs(gp + gm - 2 * gg).max() < 1e-12
    assert abs(green_functions(np.array([50.0]), bath)[0][0]) < 1e-10
    for g in green_functions(tau, NO_PHONONS):
        assert np.all(g == 0)


def test_kernel_horizon_is_decayed():
    for t in (0.0, 5.0, 20.0):
        table = phonon_kernels(BathSpec(temperature=t))
        for name in ("+", "-", "g", "u"):
            assert abs(table.kernel(name)[-1]) < 1e-10


def test_half_fourier_against_adaptive_quadrature():
    bath = BathSpec(temperature=10)
    table = phonon_kernels(bath)
    b2 = table.mean_b**2

    def g_plus(t):
        return b2 * np.expm1(correlation_phi(t, bath, check=False))

    for w in (-5.0, 0.0, 2.4):
        re = integrate.quad(lambda t: (g_plus(t) * np.exp(1j * w * t)).real,
                            0, table.tau_max, limit=400, epsabs=1e-12)[0]
        im = integrate.quad(lambda t: (g_plus(t) * np.exp(1j * w * t)).imag,
                            0, table.tau_max, limit=400, epsabs=1e-12)[0]
        assert abs(half_fourier("+", w, bath) - (re + 1j * im)) < 1e-8


def test_half_fourier_conjugation():
    bath = BathSpec(temperature=5)
    w = np.array([-7.0, -1.0, 0.5, 3.0])
    for key in ("+", "-"):
        assert np.allclose(half_fourier(key + "*", w, bath),
                           half_fourier(key, -w, bath).conj(), atol=1e-14)


def test_half_fourier_trivial_kernels():
    bath = BathSpec(temperature=5)
    zero = np.zeros_like(phonon_kernels(bath).tau)
    assert np.all(half_fourier(zero, np.array([-3.0, 0.0, 3.0]), bath) == 0)
    assert np.all(half_fourier("+", np.array([1.0, 2.0]), NO_PHONONS) == 0)


def test_half_fourier_linearity(rng):
    bath = BathSpec(temperature=10)
    tau = phonon_kernels(bath).tau
    f = np.exp(-rng.uniform(1, 5) * tau) * np.cos(rng.uniform(0, 3) * tau)
    g = np.exp(-rng.uniform(1, 5) * tau**2) + 0j
    alpha, beta = rng.normal(size=2) + 1j * rng.normal(size=2)
    w = rng.uniform(-8, 8, size=5)
    hf = lambda k: half_fourier(k, w, bath, check=False)
    lhs = hf(alpha * f + beta * g)
    rhs = alpha * hf(f) + beta * hf(g)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


def test_half_fourier_analytic_kernel():
    bath = BathSpec(temperature=10)
    tau = phonon_kernels(bath).tau
    lam = 3.0
    w = np.array([-2.0, 0.0, 4.0])
    got = half_fourier(np.exp(-lam * tau), w, bath, check=False)
    assert np.allclose(got, 1 / (lam - 1j * w), atol=1e-10)


def test_half_fourier_horizon_error():
    bath = BathSpec(temperature=10, tau_max=0.05)
    with pytest.raises(HorizonError):
        half_fourier("+", 0.0, bath)


def test_half_fourier_step_halving_error():
    bath = BathSpec(temperature=10, tau_step=0.05)
    with pytest.raises(NumericalAccuracyError):
        half_fourier("+", np.array([0.0, 5.0]), bath)


def test_feed_rates_reduce_to_real_parts():
    sys = SystemParams(g2=2.0, delta1=-5.0, delta2=3.0)
    bath = BathSpec(temperature=10)
    r = compute_rates(sys, bath)
    for i, (g, d) in enumerate(zip(sys.couplings, sys.detunings)):
        # direct evaluation of g^2 int (G+ e^{iwt} + G+^* e^{-iwt}) for w = +-d
        for w, value in ((d, r.feed_minus[i]), (-d, r.feed_plus[i])):
            direct = g**2 * (half_fourier("+", w, bath) + half_fourier("+*", -w, bath))
            assert abs(direct.imag) < 1e-12
            assert np.isclose(direct.real, value, rtol=1e-12)


def test_rates_without_second_dot_coupling():
    r = compute_rates(SystemParams(g2=0.0, delta1=-5.0, delta2=3.0), BathSpec(temperature=10))
    assert r.omega_2ph == 0 and r.omega_plus == 0 and r.omega_minus == 0
    for arr in (r.two_photon_pp, r.two_photon_mm, r.transfer_pm, r.transfer_mp):
        assert arr[0, 1] == 0 and arr[1, 0] == 0
    assert r.feed_plus[1] == 0 and r.feed_minus[1] == 0


def test_rates_symmetric_dots():
    r = compute_rates(SystemParams(g2=1.0, delta1=5.0, delta2=5.0), BathSpec(temperature=20))
    assert np.isclose(r.feed_plus[0], r.feed_plus[1])
    assert np.isclose(r.feed_minus[0], r.feed_minus[1])
    assert np.isclose(r.two_photon_pp[0, 1], r.two_photon_pp[1, 0])


def test_cross_rate_conjugate_partners():
    r = compute_rates(SystemParams(g2=2.0, delta1=5.0, delta2=2.4), BathSpec(temperature=10))
    assert np.allclose(r.two_photon_pp, r.two_photon_mm.T.conj())
    assert np.allclose(r.transfer_pm, r.transfer_pm.T.conj())
    assert np.allclose(r.transfer_mp, r.transfer_mp.T.conj())


def test_emission_absorption_asymmetry():
    sys = SystemParams(g2=1.0, delta1=5.0, delta2=5.0)
    cold = compute_rates(sys, DEFAULT)
    hot = compute_rates(sys, BathSpec(temperature=20))
    # QD above the cavity: feeding needs phonon emission, the reverse needs absorption
    assert cold.feed_minus[0] > 100 * max(cold.feed_plus[0], 1e-12)
    ratio_hot = hot.feed_plus[0] / hot.feed_minus[0]
    assert ratio_hot > 0.5
    assert ratio_hot > cold.feed_plus[0] / cold.feed_minus[0]


def test_zero_rates_record():
    z = PhononRates.zero()
    assert z.mean_b == 1.0
    assert all(v == 0 for k, v in z.table().items() if k != "mean_B")
    assert compute_rates(SystemParams(), NO_PHONONS).table() == z.table()


@pytest.mark.parametrize("kwargs", [{"alpha_p": -1}, {"omega_b": 0}, {"temperature": -1},
                                    {"energy_scale": 0}, {"tau_step": 0}])
def test_bath_validation(kwargs):
    with pytest.raises(ConfigurationError):
        BathSpec(**kwargs)


def test_system_validation():
    with pytest.raises(ConfigurationError):
        SystemParams(kappa=-1.0)
    with pytest.raises(ConfigurationError):
        SystemParams(delta1=float("nan"))


def test_kernel_csv(tmp_path):
    bath = BathSpec(temperature=5)
    tau, gp = kernel_dump(bath)["G_plus"]
    path = tmp_path / "gplus.csv"
    write_kernel_csv(path, tau, gp)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert open(path).readline().strip() == "tau_or_omega,re,im"
    assert np.array_equal(data[:, 1] + 1j * data[:, 2], gp)


def test_kernel_dump_tables():
    out = kernel_dump(BathSpec(temperature=5), omega_grid=np.linspace(-5, 5, 11))
    assert set(out) == {"phi", "G_plus", "G_minus", "K_plus", "K_minus"}
    tau, phi = out["phi"]
    assert tau.shape == phi.shape and np.isclose(phi[0].real, -2 * np.log(
        mean_displacement(BathSpec(temperature=5))))

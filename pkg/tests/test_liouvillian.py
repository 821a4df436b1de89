import numpy as np
import pytest
from scipy.linalg import expm

from twophoton.bath import NO_PHONONS, BathSpec, PhononRates, SystemParams, compute_rates
from twophoton.errors import ConfigurationError
from twophoton.liouvillian import (Superoperator, approx_liouvillian, build_liouvillian,
                                   commutator_super, effective_hamiltonian,
                                   full_liouvillian, lindblad_dissipator,
                                   phonon_dissipator_approx, phonon_dissipator_full,
                                   sprepost, system_hamiltonian, unvec, vec)
from twophoton.operators import basis_projector, basis_state

from conftest import random_density_matrix

FIG5B = SystemParams(g2=2.0, delta1=5.0, delta2=2.4)
T10 = BathSpec(temperature=10)


def test_vectorization_convention(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(sprepost(a, b) @ vec(rho), vec(a @ rho @ b))
    assert np.array_equal(unvec(vec(rho), 4), rho)


def test_system_hamiltonian_examples(ops):
    sys = SystemParams(g2=0.0, delta1=0.0, delta2=3.0, kappa=0, gamma1=0, gamma2=0,
                       gamma1_d=0, gamma2_d=0)
    h = system_hamiltonian(sys, 1.0, ops)
    assert np.allclose(h, h.conj().T)
    # one-excitation block of QD1 and the cavity: splitting 2 g1
    idx = [ops.space.index("e", "g", 0), ops.space.index("g", "g", 1)]
    ev = np.linalg.eigvalsh(h[np.ix_(idx, idx)])
    assert np.isclose(ev[1] - ev[0], 2.0)
    bare = system_hamiltonian(SystemParams(g1=0, g2=0, delta1=-5, delta2=3), 1.0, ops)
    assert np.allclose(bare, np.diag(np.diag(bare)))
    assert np.isclose(bare[9, 9], -5.0)  # |e g 1>
    assert np.all(np.isreal(np.linalg.eigvalsh(h)))


def test_lindblad_examples(ops):
    assert np.all(lindblad_dissipator(ops.a, 0.0) == 0)
    with pytest.raises(ConfigurationError):
        lindblad_dissipator(ops.a, -0.1)
    rho = basis_projector("g", "g", 1, ops.space)
    drho = unvec(lindblad_dissipator(ops.a, 0.1) @ vec(rho), ops.space.dim)
    assert np.isclose(np.trace(ops.num @ drho), -0.1)


@pytest.mark.parametrize("kind", ["full", "approx"])
def test_generators_preserve_trace_and_hermiticity(kind, ops, rng):
    gen = build_liouvillian(kind, FIG5B, T10, ops)
    for _ in range(100):
        rho = random_density_matrix(rng, ops.space.dim)
        drho = gen.apply(rho)
        assert abs(np.trace(drho)) < 1e-10
        assert np.abs(drho - drho.conj().T).max() < 1e-10


def test_generators_are_stable(ops):
    for kind in ("full", "approx"):
        gen = build_liouvillian(kind, SystemParams(g2=2.0, delta1=-5.0, delta2=3.0), T10, ops)
        assert gen.eigenvalues().real.max() < 1e-8


def test_unitary_limit(ops):
    sys = SystemParams(g2=2.0, delta1=-5.0, delta2=3.0, kappa=0, gamma1=0, gamma2=0,
                       gamma1_d=0, gamma2_d=0)
    gen = full_liouvillian(sys, NO_PHONONS, ops)
    h = system_hamiltonian(sys, 1.0, ops)
    assert np.allclose(gen.matrix, commutator_super(h))
    rho = basis_projector("e", "e", 0, ops.space)
    out = unvec(expm(gen.matrix * 200.0) @ vec(rho), ops.space.dim)
    assert abs(np.trace(out @ out).real - 1) < 1e-8


def test_fock_two_photon_decay(ops):
    sys = SystemParams(g1=0, g2=0, kappa=0.3, gamma1=0, gamma2=0, gamma1_d=0, gamma2_d=0)
    gen = full_liouvillian(sys, NO_PHONONS, ops)
    rho = basis_projector("g", "g", 2, ops.space)
    i = ops.space.index("g", "g", 2)
    for t in (0.5, 2.0, 7.0):
        out = unvec(expm(gen.matrix * t) @ vec(rho), ops.space.dim)
        assert np.isclose(out[i, i].real, np.exp(-2 * 0.3 * t), rtol=1e-12)


def test_no_phonons_reduce_both_generators(ops):
    sys = SystemParams(g2=2.0, delta1=-5.0, delta2=3.0)
    rates = compute_rates(sys, NO_PHONONS)
    assert np.allclose(effective_hamiltonian(sys, rates, ops), system_hamiltonian(sys, 1.0, ops))
    full = full_liouvillian(sys, NO_PHONONS, ops)
    approx = approx_liouvillian(sys, NO_PHONONS, ops)
    assert np.allclose(full.matrix, approx.matrix)
    phonon = phonon_dissipator_full(system_hamiltonian(sys, 1.0, ops), ops, NO_PHONONS, sys)
    assert np.all(phonon == 0)


def test_effective_hamiltonian_two_photon_element(ops):
    rates = compute_rates(FIG5B, T10)
    h = effective_hamiltonian(FIG5B, rates, ops)
    assert np.abs(h - h.conj().T).max() < 1e-12
    bra = basis_state("g", "g", 2, ops.space)
    ket = basis_state("e", "e", 0, ops.space)
    # brute force: the only contribution is -i Omega sigma1- sigma2- a^dag^2
    brute = -1j * rates.omega_2ph * (ops.sm1 @ ops.sm2 @ ops.ad @ ops.ad)
    assert np.isclose(bra @ h @ ket, bra @ brute @ ket)
    assert np.isclose(bra @ h @ ket, -1j * rates.omega_2ph * np.sqrt(2))


@pytest.mark.parametrize("temperature", [5.0, 20.0])
@pytest.mark.parametrize("sys", [SystemParams(g2=2.0, delta1=-5.0, delta2=3.0),
                                 SystemParams(g2=1.0, delta1=5.0, delta2=5.0)])
def test_approx_equals_full_with_bare_propagator(sys, temperature, ops):
    """With the couplings dropped from the kernel propagator the two coincide."""
    bath = BathSpec(temperature=temperature)
    rates = compute_rates(sys, bath)
    bare = system_hamiltonian(sys, rates, ops, coupling=False)
    full = phonon_dissipator_full(bare, ops, bath, sys)
    shifts = commutator_super(effective_hamiltonian(sys, rates, ops)
                              - system_hamiltonian(sys, rates, ops))
    approx = shifts + phonon_dissipator_approx(rates, ops, include_same_dot=True)
    assert np.abs(full - approx).max() < 1e-12
    truncated = shifts + phonon_dissipator_approx(rates, ops, include_same_dot=False)
    assert np.abs(full - truncated).max() > 1e-3


@pytest.mark.parametrize("kind", ["full", "approx"])
def test_excitation_never_increases(kind, ops):
    gen = build_liouvillian(kind, FIG5B, BathSpec(temperature=20), ops)
    n = np.diag(ops.space.excitation_numbers()).astype(complex)
    drho = gen.apply(basis_projector("e", "e", 0, ops.space))
    assert np.trace(n @ drho).real <= 1e-12
    high = ops.space.excitation_numbers() >= 3
    rho = basis_projector("e", "e", 0, ops.space)
    for t in (1.0, 10.0, 100.0):
        out = unvec(expm(gen.matrix * t) @ vec(rho), ops.space.dim)
        assert np.diagonal(out).real[high].sum() < 1e-10


def test_superoperator_container(ops, tmp_path):
    gen = full_liouvillian(FIG5B, NO_PHONONS, ops)
    with pytest.raises(ValueError):
        gen.matrix[0, 0] = 1
    with pytest.raises(ConfigurationError):
        Superoperator(np.zeros((4, 4)), ops.space)
    path = tmp_path / "L.csv"
    gen.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    rebuilt = np.zeros_like(gen.matrix)
    rebuilt[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2] + 1j * data[:, 3]
    assert np.array_equal(rebuilt, gen.matrix)
    with pytest.raises(ConfigurationError):
        build_liouvillian("exact", FIG5B, T10, ops)


def test_zero_rates_record_builds(ops):
    gen = approx_liouvillian(FIG5B, NO_PHONONS, ops, rates=PhononRates.zero())
    assert gen.kind == "approximate"

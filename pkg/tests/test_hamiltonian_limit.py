import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermibrick.hamiltonian_limit import (
    assemble_block,
    bdg_block,
    bloch_blocks,
    build_h0,
    build_hgamma,
    dispersion_hgamma,
    gaplessness_identity,
    h0_spin_dense,
    hgamma_coefficients,
    k0_block_entries,
    supercharge_commutators,
    to_dense,
    zero_mode_check,
    zero_mode_vector,
)

alphas = st.floats(0.1, 10.0)
gammas = st.floats(-4.0, 4.0)


def kitaev_energies(mu, t, delta, L):
    ks = 2 * np.pi * np.arange(L) / L
    return np.sort(np.sqrt((mu - 2 * t * np.cos(ks)) ** 2 + (2 * delta * np.sin(ks)) ** 2))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_h0_is_critical_kitaev_chain(alpha):
    H = build_h0(alpha, 8)
    assert np.abs(to_dense(H) - h0_spin_dense(alpha, 8)).max() < 1e-12
    assert np.allclose(H.single_particle_energies(), kitaev_energies(1 / alpha, 1 / (2 * alpha), 0.5, 8))
    assert H.single_particle_energies()[0] < 1e-12


def test_ground_energy_matches_dense():
    H = build_hgamma(0.9, 0.6, 8)
    assert math.isclose(H.ground_energy(), np.linalg.eigvalsh(to_dense(H))[0], abs_tol=1e-10)


@pytest.mark.parametrize("alpha,gamma", [(1.0, 0.0), (1.3, 0.8), (0.6, -1.2)])
def test_analytic_hamiltonian_matches_circuit_derivative(alpha, gamma):
    Ha = to_dense(build_hgamma(alpha, gamma, 6))
    Hc = to_dense(build_hgamma(alpha, gamma, 6, source="CIRCUIT"))
    assert np.abs(Ha - Hc).max() < 1e-8


def test_hgamma_reduces_to_h0():
    assert np.allclose(to_dense(build_hgamma(1.4, 0.0, 6)), to_dense(build_h0(1.4, 6)))


@pytest.mark.parametrize("g", [0.0, 0.8, -1.1])
@pytest.mark.parametrize("k", [0.0, 0.3, 1.2, -0.7])
def test_closed_form_block_matches_fourier_transform(g, k):
    b = assemble_block(bdg_block(1.3, g, k))
    n = bloch_blocks(hgamma_coefficients(1.3, g), [k])[0]
    assert np.abs(b - n).max() < 1e-12


@given(alphas, gammas, st.floats(-np.pi / 2, np.pi / 2))
def test_dispersion_matches_block_eigenvalues(a, g, k):
    lam = bloch_blocks(hgamma_coefficients(a, g), [k])[0]
    ev = np.sort(np.abs(np.linalg.eigvalsh(lam)))
    e1, e2 = dispersion_hgamma(a, g, k)
    scale = max(1.0, float(e2))
    assert np.allclose(ev, np.sort([e1, e1, e2, e2]), atol=1e-7 * scale)


def test_dispersion_matches_real_space_spectrum():
    a, g, L = 1.3, 0.7, 12
    H = build_hgamma(a, g, L)
    # folded zone: each k in [-pi/2, pi/2) carries the pair (k, k - pi)
    ks = 2 * np.pi * np.arange(-(L // 4), L // 4) / L
    pred = np.sort(np.concatenate([np.array(dispersion_hgamma(a, g, k)) for k in ks]))
    assert pred.size == L
    assert np.allclose(H.single_particle_energies(), pred, atol=1e-10)


@given(alphas, gammas)
def test_gaplessness_identity(a, g):
    lhs, mid, rhs = gaplessness_identity(a, g)
    assert math.isclose(lhs, rhs, rel_tol=1e-10)
    assert math.isclose(mid, rhs, rel_tol=1e-10)


@given(alphas, gammas)
def test_k0_energies(a, g):
    e1, e2 = dispersion_hgamma(a, g, 0.0)
    assert abs(e1) < 1e-10 * max(1.0, e2)
    assert math.isclose(e2, 2 / (a * math.cosh(g / 2)), rel_tol=1e-10)
    n1, n2, h0 = k0_block_entries(a, g)
    assert math.isclose(h0**2, n1 * n2, rel_tol=1e-12)


@pytest.mark.parametrize("a,g", [(1.0, 0.0), (0.4, 1.7), (2.5, -0.9)])
def test_zero_mode(a, g):
    assert zero_mode_check(a, g) < 1e-10
    phi = zero_mode_vector(g, 8)
    assert math.isclose(np.linalg.norm(phi), 1.0)
    assert phi[0] / phi[1] == pytest.approx(math.exp(g / 2))


@pytest.mark.parametrize("a,g", [(1.0, 0.0), (0.7, 1.2), (2.0, -0.5)])
def test_hamiltonian_keeps_fermionic_symmetry(a, g):
    assert max(supercharge_commutators(a, g, 6)) < 1e-9


def test_invalid_lengths():
    with pytest.raises(ValueError):
        build_hgamma(1.0, 0.0, 7)
    with pytest.raises(ValueError):
        build_hgamma(1.0, 0.0, 8, source="NUMERIC")

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_params
from fermibrick.gate_core import GateParams
from fermibrick.graded_dense import dense_sz_trace
from fermibrick.quench_dynamics import (
    DriftVelocityError,
    covariance_evolve,
    drift_velocity,
    evolve_covariance,
    gge_data,
    gge_equilibrium,
    initial_covariance,
    light_cone_violation,
    momentum_block_evolve_allzero,
    nbar_at_layer,
    pfaffian,
    real_eigvecs_n4,
    seed_bits,
    six_block,
)


def pf4(A):
    return A[0, 1] * A[2, 3] - A[0, 2] * A[1, 3] + A[0, 3] * A[1, 2]


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_pfaffian_of_4x4(vals):
    A = np.zeros((4, 4))
    A[np.triu_indices(4, 1)] = vals
    A = A - A.T
    assert math.isclose(pfaffian(A), pf4(A), abs_tol=1e-9)


def test_pfaffian_squares_to_determinant(rng):
    B = rng.normal(size=(10, 10))
    A = B - B.T
    assert math.isclose(pfaffian(A) ** 2, np.linalg.det(A), rel_tol=1e-9)
    assert pfaffian(np.zeros((3, 3))) == 0.0


@pytest.mark.parametrize("boundary", ["PBC", "OBC"])
@pytest.mark.parametrize("L", [4, 6, 8])
def test_covariance_matches_dense(boundary, L, rng):
    for p in random_params(rng, 2):
        bits = rng.integers(0, 2, L)
        cov = covariance_evolve(p, L, bits, 8, boundary).sz
        dense = dense_sz_trace(p, bits, 8, boundary)
        assert np.abs(cov - dense).max() < 1e-10


@pytest.mark.parametrize("L", [6, 10])
def test_momentum_blocks_match_dense(L, rng):
    for p in random_params(rng, 2):
        mom = momentum_block_evolve_allzero(p, L, 12).sz
        dense = dense_sz_trace(p, np.zeros(L, dtype=int), 12)
        assert np.abs(mom - dense).max() < 1e-10


def test_six_block_is_unitary():
    U = six_block(GateParams(1.0, 0.6, 0.9), 0.4)
    assert np.allclose(U.conj().T @ U, np.eye(6))


def test_gaussian_state_stays_pure_and_keeps_parity():
    bits = seed_bits(20, 7)
    st0 = initial_covariance(bits)
    st1 = evolve_covariance(st0, GateParams(0.8, 1.1, 0.7), 300, "PBC")
    assert st1.layer_count == 300
    assert st1.antisymmetry_residual() < 1e-12
    assert st1.purity_residual() < 1e-10
    assert st0.parity() == pytest.approx(-1.0)
    assert st1.parity() == pytest.approx(-1.0, abs=1e-9)


def test_translation_covariance_under_pbc():
    p = GateParams(1.0, 0.7, 0.4)
    a = covariance_evolve(p, 12, seed_bits(12, 2), 10).sz
    b = covariance_evolve(p, 12, seed_bits(12, 6), 10).sz
    assert np.allclose(np.roll(a, 4, axis=1), b, atol=1e-12)


@pytest.mark.parametrize("p", [(1.0, 0.0, 0.5), (1.0, 1.0, 0.5), (0.7, -0.8, 1.2)])
def test_mode_occupations_are_conserved(p):
    P = GateParams(*p)
    d = gge_data(P, 18)
    for layers in (0, 7, 40):
        assert np.abs(nbar_at_layer(P, 18, layers) - d.nbar).max() < 1e-10


@pytest.mark.parametrize("k", [0.3, 1.1])
def test_n4_eigenvectors_are_real_orthogonal(k):
    V, _ = real_eigvecs_n4(GateParams(1.0, 1.0, 0.5), k)
    assert np.isrealobj(V) or np.abs(V.imag).max() < 1e-12
    assert np.allclose(V.real @ V.real.T, np.eye(4), atol=1e-10)


@pytest.mark.parametrize("p", [(1.0, 0.0, 0.5), (1.0, 1.0, 0.5)])
def test_time_average_approaches_gge(p):
    P = GateParams(*p)
    tr = momentum_block_evolve_allzero(P, 50, 3000)
    e, o = gge_equilibrium(P, 50)
    assert abs(tr.sz_even[500:].mean() - e) < 1e-3
    assert abs(tr.sz_odd[500:].mean() - o) < 1e-3


def test_equal_masses_give_equal_sublattices():
    e, o = gge_equilibrium(GateParams(1.0, 0.0, 0.5), 30)
    assert e == pytest.approx(o, abs=1e-12)
    e, o = gge_equilibrium(GateParams(1.0, 1.0, 0.5), 30)
    assert abs(e - o) > 0.1


@pytest.mark.parametrize("boundary", ["PBC", "OBC"])
def test_light_cone(boundary):
    assert light_cone_violation(GateParams(1.0, 1.0, 0.7), 40, 20, 15, boundary) < 1e-8


@pytest.fixture(scope="module")
def strong_mass_runs():
    p = GateParams(1.0, 10.0, 1.0)
    bg = covariance_evolve(p, 200, np.zeros(200, dtype=int), 40, "OBC").sz
    runs = {s: covariance_evolve(p, 200, seed_bits(200, s), 40, "OBC") for s in (100, 101)}
    return bg, runs


@pytest.mark.parametrize("method", ["peak", "centroid"])
def test_drift_direction_follows_seed_parity(strong_mass_runs, method):
    bg, runs = strong_mass_runs
    v_even = drift_velocity(runs[100], bg, method=method)
    v_odd = drift_velocity(runs[101], bg, method=method)
    assert abs(abs(v_even) - 2) < 0.05 * 2
    assert v_even * v_odd < 0


def test_drift_velocity_validation(strong_mass_runs):
    bg, runs = strong_mass_runs
    with pytest.raises(ValueError):
        drift_velocity(runs[100], bg, method="median")
    short = covariance_evolve(GateParams(1, 1, 1), 40, seed_bits(40, 20), 10, "OBC")
    with pytest.raises(ValueError):
        drift_velocity(short)
    flat = covariance_evolve(GateParams(1, 1, 1), 60, np.zeros(60, dtype=int), 40, "OBC")
    with pytest.raises(DriftVelocityError):
        drift_velocity(flat, flat.sz, method="centroid")


def test_input_validation():
    p = GateParams(1, 1, 1)
    with pytest.raises(ValueError):
        covariance_evolve(p, 7, "0000000", 2)
    with pytest.raises(ValueError):
        covariance_evolve(p, 6, "000200", 2)
    with pytest.raises(ValueError):
        covariance_evolve(p, 6, "0000", 2)
    with pytest.raises(ValueError):
        covariance_evolve(p, 6, "000000", 2, "OBC_EXTENDED")
    with pytest.raises(ValueError):
        momentum_block_evolve_allzero(p, 8, 2)
    assert covariance_evolve(p, 6, "000000", 0).sz.shape == (1, 6)

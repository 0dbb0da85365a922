import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermibrick.hamiltonian_limit import assemble_quadratic
from fermibrick.topology import (
    EPS_EQUAL,
    EPS_OPPOSITE,
    U_M,
    Perturbation,
    lambda_k,
    off_diagonal,
    one_sided_limits,
    perturbed_coefficients,
    phase_scan,
    symmetry_relations_check,
    winding_number,
)

small = st.floats(-0.8, 0.8)


@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0), small, small, small)
def test_bdi_symmetries(a, g, d, e1, e2):
    r = symmetry_relations_check(a, g, Perturbation(d, e1, e2), n_k=21)
    assert max(r) < 1e-12


def test_rotation_is_unitary():
    assert np.allclose(U_M @ U_M.conj().T, np.eye(4))


@pytest.mark.parametrize("pert", [Perturbation(), Perturbation(0.2, -0.3, 0.1)])
def test_chiral_rotation_off_diagonalises(pert):
    lam = lambda_k(1.2, 0.7, np.linspace(-1.5, 1.5, 7), pert)
    od = off_diagonal(lam)
    assert np.abs(od[:, :2, :2]).max() < 1e-12
    assert np.abs(od[:, 2:, 2:]).max() < 1e-12


def kitaev_w(mu, t):
    """Winding of the Kitaev chain: nontrivial iff |mu| < 2|t|."""
    return 1 if abs(mu) < 2 * abs(t) else 0


@pytest.mark.parametrize("eps", [-1.8, -1.0, -0.5, -0.1, 0.3, 0.5, 1.0])
def test_equal_mass_winding_follows_kitaev_criterion(eps):
    # alpha = 1, gamma = 0: chemical potential 1 + eps, hopping 1/2 on every bond,
    # folded onto the two-site cell
    r = winding_number(1.0, 0.0, Perturbation(0.0, eps, eps))
    assert not r.gapless
    assert abs(r.w) == kitaev_w(1.0 + eps, 0.5)


@pytest.mark.parametrize("eps", [-0.5, 0.5])
def test_winding_is_grid_stable(eps):
    ws = {winding_number(1.0, 0.0, Perturbation(0.0, eps, eps), grid=n).w for n in (256, 512, 2048)}
    assert len(ws) == 1


@pytest.mark.parametrize("a,g", [(1.0, 0.0), (5.0, 1.0), (0.3, -2.0), (2.0, 3.0)])
def test_unperturbed_surface_is_gapless(a, g):
    r = winding_number(a, g)
    assert r.gapless and r.w is None
    assert r.min_det < 1e-8


def test_one_sided_limits_on_critical_surface():
    assert one_sided_limits(1.0, 0.0) == (1, 0)


def test_grid_and_mode_validation():
    with pytest.raises(ValueError):
        winding_number(1.0, 0.0, Perturbation(0, 0.5, 0.5), grid=128)
    with pytest.raises(ValueError):
        phase_scan(1.0, 0.0, [0.0], [0.5], mode="EPS_SAME")
    with pytest.raises(ValueError):
        phase_scan(1.0, 0.0, [np.nan], [0.5])


@pytest.mark.parametrize("mode", [EPS_EQUAL, EPS_OPPOSITE])
def test_scan_is_thread_independent(mode):
    d = np.linspace(-1, 1, 5)
    e = np.linspace(-1.5, 1.5, 7)
    one = phase_scan(5.0, 1.0, d, e, mode, grid=256, threads=1)
    many = phase_scan(5.0, 1.0, d, e, mode, grid=256, threads=4)
    assert one == many
    assert [(r.delta, r.eps1) for r in one] == [(x, y) for x in d for y in e]
    sgn = 1 if mode == EPS_EQUAL else -1
    assert all(r.eps2 == sgn * r.eps1 for r in one)
    assert {r.w for r in one} <= {-1, 0, 1, None}


@pytest.mark.parametrize(
    "a,g,pert,w",
    [
        (1.0, 0.0, (0.0, -0.5, -0.5), 1),
        (1.0, 0.0, (0.0, 0.5, 0.5), 0),
        (5.0, 1.0, (-1.0, -0.9, -0.9), 1),
        (5.0, 1.0, (0.6, -0.5, -0.5), -1),
        (5.0, 1.0, (-1.0, -0.7, -0.7), 0),
        # longer-range couplings allow two Majorana modes per edge
        (5.0, 1.0, (-1.5, 1.2, 1.2), 2),
    ],
)
def test_winding_counts_open_chain_zero_modes(a, g, pert, w):
    r = winding_number(a, g, Perturbation(*pert))
    assert r.w == w
    ev = assemble_quadratic(perturbed_coefficients(a, g, Perturbation(*pert)), 300, "OBC").single_particle_energies()
    n_zero = int(np.sum(ev < 1e-3))
    assert n_zero == abs(w)
    assert ev[abs(w)] > 10 * 1e-3

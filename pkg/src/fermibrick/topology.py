"""BDI symmetries, chiral off-diagonalisation and the winding number of H_gamma."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .gate_core import PAULI_I, PAULI_X, PAULI_Z
from .hamiltonian_limit import bloch_blocks, hgamma_coefficients

GAP_THRESHOLD = 1e-8
MIN_GRID = 256
EPS_EQUAL = "EPS_EQUAL"
EPS_OPPOSITE = "EPS_OPPOSITE"

U_P = np.kron(PAULI_X, PAULI_I)
U_T = 1j * np.kron(PAULI_Z, PAULI_I)
U_C = U_P @ U_T
U_M = 0.5 * np.array(
    [
        [1 + 1j, 0, 1 - 1j, 0],
        [0, 1 + 1j, 0, 1 - 1j],
        [1 + 1j, 0, -1 + 1j, 0],
        [0, 1 + 1j, 0, -1 + 1j],
    ]
)


class Perturbation(NamedTuple):
    """delta shifts J^L_AB, eps1 shifts N_A, eps2 shifts N_B."""

    delta: float = 0.0
    eps1: float = 0.0
    eps2: float = 0.0


class SymmetryReport(NamedTuple):
    particle_hole: float
    time_reversal: float
    chiral: float


class WindingResult(NamedTuple):
    w: int | None
    min_det: float
    min_gap: float
    phase_trace: np.ndarray
    gapless: bool


class ScanRow(NamedTuple):
    delta: float
    eps1: float
    eps2: float
    w: int | None
    min_gap: float


def perturbed_coefficients(alpha, gamma, pert=Perturbation()):
    pert = Perturbation(*pert)
    return hgamma_coefficients(alpha, gamma).perturbed(pert.delta, pert.eps1, pert.eps2)


def lambda_k(alpha, gamma, ks, pert=Perturbation()) -> np.ndarray:
    """BdG blocks, shape (len(ks), 4, 4)."""
    return bloch_blocks(perturbed_coefficients(alpha, gamma, pert), ks)


def symmetry_relations_check(alpha, gamma, pert=Perturbation(), n_k=101) -> SymmetryReport:
    ks = np.linspace(-np.pi / 2, np.pi / 2, n_k)
    lam = lambda_k(alpha, gamma, ks, pert)
    lam_m = lambda_k(alpha, gamma, -ks, pert)
    P = U_P @ lam.conj() @ U_P.conj().T + lam_m
    T = U_T @ lam.conj() @ U_T.conj().T - lam_m
    C = U_C @ lam @ U_C.conj().T + lam
    return SymmetryReport(*(float(np.abs(x).max()) for x in (P, T, C)))


def off_diagonal(lam) -> np.ndarray:
    """U_M Lambda U_M^+; block off-diagonal when chiral symmetry holds."""
    return U_M @ lam @ U_M.conj().T


def winding_number(alpha, gamma, pert=Perturbation(), grid=1024) -> WindingResult:
    """Winding of det V(k) over k in [-pi/2, pi/2].

    W is None and `gapless` is set when min_k |det V(k)| < GAP_THRESHOLD.
    """
    if grid < MIN_GRID:
        raise ValueError(f"grid must be >= {MIN_GRID}, got {grid}")
    ks = np.linspace(-np.pi / 2, np.pi / 2, grid + 1)
    lam = lambda_k(alpha, gamma, ks, pert)
    V = off_diagonal(lam)[:, :2, 2:]
    det = np.linalg.det(V)
    mod = np.abs(det)
    min_det = float(mod.min())
    min_gap = float(np.abs(np.linalg.eigvalsh(lam)).min())
    phase = np.unwrap(np.angle(det))
    if min_det < GAP_THRESHOLD:
        return WindingResult(None, min_det, min_gap, phase, True)
    total = (phase[-1] - phase[0]) / (2 * np.pi)
    w = int(round(total))
    if abs(total - w) > 1e-6:
        raise ArithmeticError(f"accumulated phase {total} is not an integer; refine the grid")
    return WindingResult(w, min_det, min_gap, phase, False)


def one_sided_limits(alpha, gamma, direction=(0.0, 1.0, 1.0), h=1e-3, grid=2048):
    """(W at -h * direction, W at +h * direction); used on the critical surface."""
    d = np.asarray(direction, dtype=float)
    lo = winding_number(alpha, gamma, Perturbation(*(-h * d)), grid)
    hi = winding_number(alpha, gamma, Perturbation(*(h * d)), grid)
    return lo.w, hi.w


def default_threads() -> int:
    env = os.environ.get("FERMIBRICK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _cell(args):
    alpha, gamma, pert, grid = args
    r = winding_number(alpha, gamma, pert, grid)
    return ScanRow(pert.delta, pert.eps1, pert.eps2, r.w, 0.0 if r.gapless else r.min_det)


def phase_scan(alpha, gamma, delta_range, eps_range, mode=EPS_EQUAL, grid=512, threads=None):
    """W over the (delta, eps) grid; rows come back in row-major (delta, eps) order."""
    if mode not in (EPS_EQUAL, EPS_OPPOSITE):
        raise ValueError(f"mode must be {EPS_EQUAL} or {EPS_OPPOSITE}, got {mode!r}")
    deltas = np.asarray(delta_range, dtype=float)
    epss = np.asarray(eps_range, dtype=float)
    if not (np.all(np.isfinite(deltas)) and np.all(np.isfinite(epss))):
        raise ValueError("scan ranges must be finite")
    sgn = 1.0 if mode == EPS_EQUAL else -1.0
    jobs = [
        (alpha, gamma, Perturbation(float(d), float(e), float(sgn * e)), grid)
        for d in deltas
        for e in epss
    ]
    n = threads or default_threads()
    if n == 1:
        return [_cell(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(_cell, jobs))

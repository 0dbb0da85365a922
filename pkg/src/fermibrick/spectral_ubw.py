"""Momentum-space spectral structure of the brick-wall unitary U_F.

For 0 < k < pi/2 the four modes (k, -k, k-pi, pi-k) span a 16-dimensional Fock
space on which both layer exponents act.  Fock states are indexed by
sum_i n_i 2^(3-i) with the mode order above.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq, linear_sum_assignment

from .gate_core import PAULI_I, PAULI_Z, as_params, exponent_coefficients

MODE_K, MODE_MINUS_K, MODE_K_MINUS_PI, MODE_PI_MINUS_K = 0, 1, 2, 3

# block bases on the 16-dim sector Fock space
BLOCKS = {
    "M1": [10],
    "M1p": [5],
    "M6": [0, 12, 9, 6, 3, 15],
    "N4": [8, 2, 14, 11],
    "N4p": [4, 1, 13, 7],
}

SPECIAL_SECTORS = ("K0_M", "K0_N", "KPI2_M", "KPI2_N")

_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


def _fock_ops(n=4):
    c = [reduce(np.kron, [PAULI_Z] * i + [_LOWER] + [PAULI_I] * (n - i - 1)) for i in range(n)]
    return c, [x.conj().T for x in c]


_C, _CD = _fock_ops()
_N = [cd @ c for c, cd in zip(_C, _CD)]
_OCC = np.array([[(s >> (3 - i)) & 1 for i in range(4)] for s in range(16)])


@dataclass(frozen=True)
class SymmetryBreaking:
    """Scale t_a applied to a12; t_a = 1 is the supersymmetric point."""

    t_a: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.t_a) and self.t_a > 0):
            raise ValueError(f"t_a must be a positive real, got {self.t_a!r}")


def _ta(t_a) -> float:
    if isinstance(t_a, SymmetryBreaking):
        return t_a.t_a
    return SymmetryBreaking(float(t_a)).t_a


class SectorExponents(NamedTuple):
    k: float
    e_odd: np.ndarray
    e_even: np.ndarray
    blocks: dict


class CharPolyCoeffs(NamedTuple):
    a4: complex
    b4: float
    k: float


class QuasiEnergies(NamedTuple):
    eps: np.ndarray
    cij: np.ndarray
    method: str


class VelocityReport(NamedTuple):
    v_plus: float
    v_minus: float
    v0: float
    v1: float


def _check_k(k):
    if not (0 < k < np.pi / 2):
        raise ValueError(
            f"k must lie in the open interval (0, pi/2), got {k!r}; "
            "use charpoly_special for k = 0 and k = pi/2"
        )


def _layer_exponent(coeffs, k, sign):
    a11, a12, phi, b12 = coeffs
    c, cd, n = _C, _CD, _N
    K, MK, KP, PK = MODE_K, MODE_MINUS_K, MODE_K_MINUS_PI, MODE_PI_MINUS_K
    E = -a11 * (n[K] + n[MK] + n[KP] + n[PK] - 2 * np.eye(16))
    E = E + a12 * np.cos(k - phi) * (n[K] - n[KP]) + a12 * np.cos(k + phi) * (n[MK] - n[PK])
    E = E + sign * 1j * a12 * np.sin(k - phi) * (cd[K] @ c[KP] - cd[KP] @ c[K])
    E = E + sign * 1j * a12 * np.sin(k + phi) * (cd[PK] @ c[MK] - cd[MK] @ c[PK])
    E = E - sign * 1j * b12 * np.cos(k) * (
        cd[K] @ cd[PK] - c[PK] @ c[K] + cd[MK] @ cd[KP] - c[KP] @ c[MK]
    )
    E = E + b12 * np.sin(k) * (cd[K] @ cd[MK] + c[MK] @ c[K] + cd[PK] @ cd[KP] + c[KP] @ c[PK])
    return E


def _scaled_coefficients(params, t_a):
    a11, a12, phi, b12 = exponent_coefficients(as_params(params))
    return a11, a12 * _ta(t_a), phi, b12


def sector_exponents(params, t_a=1.0, k=0.5) -> SectorExponents:
    """Odd- and even-layer exponents on the Fock space of (k, -k, k-pi, pi-k)."""
    _check_k(k)
    co = _scaled_coefficients(params, t_a)
    return SectorExponents(
        float(k), _layer_exponent(co, k, +1), _layer_exponent(co, k, -1), dict(BLOCKS)
    )


def sector_unitary(params, t_a=1.0, k=0.5) -> np.ndarray:
    se = sector_exponents(params, t_a, k)
    return expm(1j * se.e_odd) @ expm(1j * se.e_even)


def block_residual(op) -> float:
    """Largest coupling of op between different labelled blocks."""
    op = np.asarray(op)
    label = np.empty(16, dtype=int)
    for i, idx in enumerate(BLOCKS.values()):
        label[idx] = i
    mask = label[:, None] != label[None, :]
    return float(np.abs(op[mask]).max())


def block_matrix(op, name) -> np.ndarray:
    idx = BLOCKS[name]
    return np.asarray(op)[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# k = 0 and k = pi/2


def special_sector_exponents(params, sector):
    """(E_odd, E_even) 2x2 blocks for one of K0_M, K0_N, KPI2_M, KPI2_N."""
    a11, a12, phi, b12 = exponent_coefficients(as_params(params))
    cp, sp = math.cos(phi), math.sin(phi)
    if sector == "K0_M":
        eo = np.array([[a11, -1j * b12], [1j * b12, -a11]])
        ee = eo.conj()
    elif sector == "K0_N":
        eo = a12 * np.array([[cp, -1j * sp], [1j * sp, -cp]])
        ee = eo.conj()
    elif sector == "KPI2_M":
        eo = np.array([[a11, b12], [b12, -a11]], dtype=complex)
        ee = eo.copy()
    elif sector == "KPI2_N":
        eo = a12 * np.array([[sp, 1j * cp], [-1j * cp, -sp]])
        ee = eo.conj()
    else:
        raise ValueError(f"unknown sector {sector!r}; expected one of {SPECIAL_SECTORS}")
    return eo, ee


def special_sector_unitary(params, sector) -> np.ndarray:
    eo, ee = special_sector_exponents(params, sector)
    return expm(1j * eo) @ expm(1j * ee)


def _den(a, g, t):
    return 2 * a * a * (math.cosh(g) + math.cosh(t)) + math.sinh(t) ** 2


def charpoly_special(params, sector) -> float:
    """Trace coefficient c of the sector quadratic x^2 - c x + 1."""
    p = as_params(params)
    a, g, t = p.alpha, p.gamma, p.theta
    den = _den(a, g, t)
    if sector in ("K0_M", "K0_N"):
        return 2 * (2 * a * a * (math.cosh(g) + math.cosh(t)) - math.sinh(t) ** 2) / den
    if sector == "KPI2_N":
        return 2 - 8 * a * a * (math.cosh(g) - 1) / den
    if sector == "KPI2_M":
        return -2 + 8 * a * a * (math.cosh(g) + 1) / den
    raise ValueError(f"unknown sector {sector!r}; expected one of {SPECIAL_SECTORS}")


def k0_energies(params):
    """(eps1, eps2) at k = 0: the zero mode and 2 arccos of the trace ratio."""
    c = charpoly_special(params, "K0_M") / 2
    return 0.0, 2 * math.acos(min(1.0, max(-1.0, c)))


def kpi2_energies(params):
    """(eps_a, eps_b) at k = pi/2 with eps_a >= eps_b >= 0.

    The M and N sector phases give eps_a + eps_b and eps_a - eps_b; which is
    which is fixed by size, so eps_b vanishes where the two sectors coincide.
    """
    cm = min(1.0, max(-1.0, charpoly_special(params, "KPI2_M") / 2))
    cn = min(1.0, max(-1.0, charpoly_special(params, "KPI2_N") / 2))
    s, d = 2 * math.acos(cm), 2 * math.acos(cn)  # eps_a + eps_b, eps_a - eps_b
    return (s + d) / 2, abs(s - d) / 2


# ---------------------------------------------------------------------------
# general k: quartic characteristic polynomial


def _a4b4_general(a, g, t, k):
    ch, sh = math.cosh, math.sinh
    den = 2 * _den(a, g, t) ** 2
    a4 = (
        8 * a**2 * (8 * a**2 * ch(g) * ch(t) + 8 * a**2 + ch(t) - ch(3 * t))
        + (
            16 * a**4 * (ch(2 * g) + ch(2 * t))
            - 32 * a**4
            - 32 * a**2 * ch(g) * sh(t) ** 2
            - 4 * ch(2 * t)
            + ch(4 * t)
            + 3
        )
        * math.cos(2 * k)
        - 64j * a**2 * sh(g) * sh(t) ** 2 * math.sin(2 * k)
    ) / den
    b4 = (
        16 * a**4 * (ch(2 * g) + ch(2 * t))
        + 160 * a**4
        - 96 * a**2 * ch(g) * sh(t) ** 2
        - 4 * ch(2 * t)
        + ch(4 * t)
        + 3
        + 64 * a**2 * (-2 * a**2 + ch(t) * (2 * a**2 * ch(g) - sh(t) ** 2)) * math.cos(2 * k)
        + (4 * a**2 * (ch(g) - ch(t)) + 2 * sh(t) ** 2) ** 2 * math.cos(4 * k)
    ) / den
    return complex(a4), float(b4)


def _a4b4_equal_mass(a, t, k):
    ch, th = math.cosh, math.tanh
    d = (-1 + 2 * a**2 + ch(t)) ** 2
    a4 = -(
        4 * a**2 / ch(t / 2) ** 2 * (1 - 4 * a**2 - 2 * ch(t) + ch(2 * t))
        - 2 * th(t / 2) ** 2 * (-1 - 8 * a**2 + 8 * a**4 + ch(2 * t)) * math.cos(2 * k)
    ) / d
    b4 = (
        (3 + 48 * a**2 + 176 * a**4 + 4 * (-1 + 4 * a**2 * (-3 + a**2)) * ch(2 * t) + ch(4 * t))
        / (8 * ch(t / 2) ** 4)
        - 8 * a**2 * math.sinh(t / 2) ** 2 / ch(t / 2) ** 4
        * (1 - 4 * a**2 + 2 * ch(t) + ch(2 * t)) * math.cos(2 * k)
        + 2 * th(t / 2) ** 4 * (1 + ch(t) - 2 * a**2) ** 2 * math.cos(4 * k)
    ) / d
    return complex(a4), float(b4)


def _a4b4_gamma_eq_theta(a, t, k):
    ch, sh = math.cosh, math.sinh
    d = (4 * a**2 * ch(t) + sh(t) ** 2) ** 2
    a4 = (
        4 * a**2 * (ch(t) + 4 * a**2 * (3 + ch(2 * t)) - ch(3 * t))
        + 2 * sh(t) ** 2 * (-1 + 16 * a**4 - 8 * a**2 * ch(t) + ch(2 * t)) * math.cos(2 * k)
        - 32j * a**2 * sh(t) ** 3 * math.sin(2 * k)
    ) / d
    b4 = 0.5 * (
        3
        + 160 * a**4
        - 4 * ch(2 * t)
        + 8 * a**2 * (3 * ch(t) + 4 * a**2 * ch(2 * t) - 3 * ch(3 * t))
        + ch(4 * t)
        - 64 * a**2 * (-2 * a**2 + ch(t)) * sh(t) ** 2 * math.cos(2 * k)
        + 4 * sh(t) ** 4 * math.cos(4 * k)
    ) / d
    return complex(a4), float(b4)


def charpoly_numeric(params, t_a=1.0, k=0.5, block="N4") -> CharPolyCoeffs:
    """a4, b4 read off the characteristic polynomial of the numerical N4 block."""
    U = sector_unitary(params, t_a, k)
    cp = np.poly(block_matrix(U, block))
    return CharPolyCoeffs(complex(-cp[1]), float(cp[2].real), float(k))


def charpoly_general(params, t_a=1.0, k=0.5) -> CharPolyCoeffs:
    """Coefficients of x^4 - a4 x^3 + b4 x^2 - conj(a4) x + 1 on the N4 block."""
    _check_k(k)
    p = as_params(params)
    if _ta(t_a) != 1.0:
        return charpoly_numeric(p, t_a, k)
    if p.gamma == 0.0:
        a4, b4 = _a4b4_equal_mass(p.alpha, p.theta, k)
    elif p.gamma == p.theta:
        a4, b4 = _a4b4_gamma_eq_theta(p.alpha, p.theta, k)
    else:
        a4, b4 = _a4b4_general(p.alpha, p.gamma, p.theta, k)
    return CharPolyCoeffs(a4, b4, float(k))


def quartic(cc: CharPolyCoeffs) -> np.ndarray:
    return np.array([1, -cc.a4, cc.b4, -np.conj(cc.a4), 1], dtype=complex)


def resolvent_cubic(cc: CharPolyCoeffs) -> np.ndarray:
    """Monic cubic whose roots are c12, c13, c23."""
    a, b = cc.a4, cc.b4
    e1 = b / 2
    e2 = (abs(a) ** 2 - 4) / 4
    e3 = ((a**2 + np.conj(a) ** 2).real - 4 * b) / 8
    return np.array([1, -e1, e2, -e3])


def _wrap(x):
    # map to (-pi, pi]
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def _from_resolvent(cc, cij):
    P = quartic(cc)
    s = np.arccos(np.clip(cij, -1, 1))
    best, best_res = None, np.inf
    for signs in itertools.product((1, -1), repeat=3):
        for shift in ((0, 0, 0), (2 * np.pi, 0, 0), (0, 2 * np.pi, 0), (0, 0, 2 * np.pi)):
            s12, s13, s23 = np.array(signs) * s + np.array(shift)
            e = np.array(
                [(s12 + s13 - s23) / 2, (s12 - s13 + s23) / 2, (-s12 + s13 + s23) / 2, 0.0]
            )
            e[3] = -e[:3].sum()
            res = np.abs(np.polyval(P, np.exp(1j * e))).max()
            if res < best_res:
                best, best_res = e, res
    return _wrap(best), best_res


def _polish(P, eps, steps=3):
    """Newton steps on the quartic from each root estimate.

    arccos of a resolvent value near +-1 costs half the digits; the roots of
    the quartic itself are simple away from band touchings, so a few Newton
    steps restore full precision.  A step is kept only if it lowers |P| and
    stays well inside the gap to the nearest other root.
    """
    z = np.exp(1j * np.asarray(eps, dtype=float))
    dP = np.polyder(P)
    for i in range(len(z)):
        others = np.delete(z, i)
        reach = 0.25 * np.abs(others - z[i]).min() if len(others) else np.inf
        zi = z[i]
        for _ in range(steps):
            d = np.polyval(dP, zi)
            if d == 0:
                break
            cand = zi - np.polyval(P, zi) / d
            cand /= abs(cand)
            if abs(cand - z[i]) > reach or abs(np.polyval(P, cand)) >= abs(np.polyval(P, zi)):
                break
            zi = cand
        z[i] = zi
    return np.angle(z)


def quasi_energies(params, t_a=1.0, k=0.5, tol=1e-8) -> QuasiEnergies:
    """The four eps_i^k on the N4 block, ordered by |eps|, via the cubic resolvent.

    Falls back to companion-matrix roots of the quartic when the resolvent
    reconstruction fails to reproduce the quartic's roots.
    """
    cc = charpoly_general(params, t_a, k)
    cij = np.sort(np.roots(resolvent_cubic(cc)).real)
    eps, res = _from_resolvent(cc, cij)
    direct = np.roots(quartic(cc))
    method = "resolvent"
    if res > tol or _circ_mismatch(np.exp(1j * eps), direct) > 1e-6:
        eps = _wrap(np.angle(direct))
        method = "companion"
    eps = _wrap(_polish(quartic(cc), eps))
    eps = eps[np.argsort(np.abs(eps), kind="stable")]
    return QuasiEnergies(eps, cij, method)


def _circ_mismatch(z1, z2):
    cost = np.abs(np.asarray(z1)[:, None] - np.asarray(z2)[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def quasi_energy_scan(params, ks, t_a=1.0) -> np.ndarray:
    """Array (len(ks), 4) of quasi-energies with branches tracked by continuity.

    Branches are ordered by |eps| at ks[0] and followed by matching each step to
    a linear extrapolation of the previous two points.
    """
    ks = np.asarray(ks, dtype=float)
    out = np.empty((len(ks), 4))
    for n, k in enumerate(ks):
        e = quasi_energies(params, t_a, k).eps
        if n == 0:
            out[0] = e
            continue
        guess = out[n - 1] if n == 1 else 2 * out[n - 1] - out[n - 2]
        cost = np.abs(_wrap(guess[:, None] - e[None, :]))
        r, c = linear_sum_assignment(cost)
        out[n, r] = e[c]
    return out


# ---------------------------------------------------------------------------
# full-chain predictions


def momentum_grid(L):
    ks = 2 * np.pi * np.arange(L) / L
    general = [k for k in ks if 0 < k < np.pi / 2 - 1e-12]
    has_pi2 = L % 4 == 0
    return general, has_pi2


def single_particle_energies(params, L, t_a=1.0) -> np.ndarray:
    """All L single-particle quasi-energies of the periodic chain."""
    if L % 2:
        raise ValueError(f"L must be even, got {L}")
    general, has_pi2 = momentum_grid(L)
    eps = list(k0_energies(params))
    if has_pi2:
        eps.extend(kpi2_energies(params))
    for k in general:
        eps.extend(quasi_energies(params, t_a, k).eps)
    return np.array(eps)


def predicted_phases(params, L, t_a=1.0) -> np.ndarray:
    """Eigenphases sum_j s_j eps_j / 2 of U_F on L sites, s_j = +-1."""
    eps = single_particle_energies(params, L, t_a)
    signs = np.array(list(itertools.product((1, -1), repeat=len(eps))))
    return _wrap(signs @ eps / 2)


def sector_phases(params, L, t_a=1.0) -> np.ndarray:
    """Eigenphases of U_F assembled as products of exact sector-unitary eigenvalues."""
    general, has_pi2 = momentum_grid(L)
    sets = [
        np.r_[
            np.linalg.eigvals(special_sector_unitary(params, "K0_M")),
            np.linalg.eigvals(special_sector_unitary(params, "K0_N")),
        ]
    ]
    if has_pi2:
        sets.append(
            np.r_[
                np.linalg.eigvals(special_sector_unitary(params, "KPI2_M")),
                np.linalg.eigvals(special_sector_unitary(params, "KPI2_N")),
            ]
        )
    for k in general:
        sets.append(np.linalg.eigvals(sector_unitary(params, t_a, k)))
    z = reduce(lambda x, y: np.outer(x, y).ravel(), sets)
    return np.angle(z)


def phase_multiset_distance(ph1, ph2) -> float:
    """Max circular distance under the optimal one-to-one matching of two phase sets."""
    z1, z2 = np.exp(1j * np.asarray(ph1)), np.exp(1j * np.asarray(ph2))
    if len(z1) != len(z2):
        raise ValueError("phase sets differ in size")
    # sort then match locally; full assignment on a 2^L x 2^L matrix is fine for L <= 12
    return _circ_mismatch(z1, z2)


# ---------------------------------------------------------------------------
# critical points and velocities


def _crit_fn(theta, alpha, gamma):
    return 2 * alpha**2 * (math.cosh(gamma) - math.cosh(theta)) - math.sinh(theta) ** 2


def theta_critical(alpha, gamma):
    """Positive root of 2 a^2 (cosh g - cosh th) = sinh^2 th, or None when there is none."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    g = abs(gamma)
    if g == 0:
        return None
    # decreasing on [0, g]: positive at 0, -sinh^2 g at g
    return brentq(_crit_fn, 0.0, g, args=(alpha, g), xtol=1e-15, rtol=4 * np.finfo(float).eps)


def group_velocities(params) -> VelocityReport:
    p = as_params(params)
    a, g, t = p.alpha, p.gamma, p.theta
    vp = 2 * math.tanh((g + t) / 2)
    vm = 2 * math.tanh((g - t) / 2)
    v0 = 2 * math.sinh(g) / (math.cosh(g) + math.cosh(t))
    v1 = 2 * math.sinh(t) / (
        math.sqrt(-1 + 2 * a * a + math.cosh(t)) * math.sqrt(1 + 2 * a * a + math.cosh(t))
    )
    return VelocityReport(vp, vm, v0, v1)


def small_k_fit(params, ks, t_a=1.0):
    """Fit the two branches that vanish at k -> 0.

    Returns (slopes, cubics): least-squares coefficients of eps = v k + c k^3 for
    the two smallest |eps| branches, sorted by |slope| descending.
    """
    ks = np.asarray(ks, dtype=float)
    scan = quasi_energy_scan(params, ks, t_a)
    A = np.column_stack([ks, ks**3])
    slopes, cubics = [], []
    for b in range(2):
        coef, *_ = np.linalg.lstsq(A, scan[:, b], rcond=None)
        slopes.append(coef[0])
        cubics.append(coef[1])
    order = np.argsort(-np.abs(slopes))
    return np.array(slopes)[order], np.array(cubics)[order]


def min_gap(params, t_a=1.0, n_k=200) -> float:
    """min over an interior k-grid of min_i |eps_i^k|."""
    ks = np.linspace(0, np.pi / 2, n_k + 2)[1:-1]
    vals = [np.abs(quasi_energies(params, t_a, k).eps).min() for k in ks]
    return float(min(vals))

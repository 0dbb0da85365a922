"""Exact quench dynamics of U_F.

Two independent routes:

* Gaussian (covariance-matrix) evolution in real space, valid for any product
  initial state and either boundary condition.  Majoranas are
  m_{2j} = Z_{<j} X_j and m_{2j+1} = Z_{<j} Y_j, and
  Gamma_ab = -(i/2) <[m_a, m_b]>, so that Gamma_{2j,2j+1} = <sigma_z_j>.
* Momentum-sector evolution of the all-0 state for PBC with L = 4l + 2.

One layer applies the bonds (0,1), (2,3), ... first and then (1,2), ...,
(L-1, 0); sites are 0-based throughout, "even" means j = 0, 2, 4, ...
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .gate_core import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    GateParams,
    as_params,
    build_boundary_k,
    exponent_coefficients,
    exponent_matrix,
)
from .spectral_ubw import _C, _CD, BLOCKS, sector_exponents, special_sector_exponents

D_EVEN = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [0, 1, 0.5, 0.5, 0, 0],
        [0, 0.5, 1, 0, 0.5, 0],
        [0, 0.5, 0, 1, 0.5, 0],
        [0, 0, 0.5, 0.5, 1, 0],
        [0, 0, 0, 0, 0, 2],
    ]
)
D_ODD = np.where(D_EVEN == 0.5, -0.5, D_EVEN)

# sign of each M6 basis state relative to the Fock state it is stored in, from
# the creation-operator order |k,-k>, |k,-k+pi>, |k+pi,-k>, |k+pi,-k+pi>, |k,k+pi,-k,-k+pi>
M6_SIGNS = np.array([1, 1, 1, -1, 1, -1])
N4_SIGNS = np.array([1, 1, -1, 1])
N4P_SIGNS = np.array([1, 1, 1, -1])

# V^{-k} = V^k M
M_SWAP = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float)

_MAJ2 = [
    np.kron(PAULI_X, PAULI_I),
    np.kron(PAULI_Y, PAULI_I),
    np.kron(PAULI_Z, PAULI_X),
    np.kron(PAULI_Z, PAULI_Y),
]
_MAJ1 = [PAULI_X, PAULI_Y]


class DriftVelocityError(ArithmeticError):
    """No ballistic front could be identified in a seed trace."""


@dataclass
class MagnetizationTrace:
    """<sigma_z_j> per layer: sz has shape (layers + 1, L)."""

    sz: np.ndarray
    params: GateParams
    L: int
    boundary: str
    initial: str
    meta: dict = field(default_factory=dict)

    @property
    def layers(self) -> int:
        return self.sz.shape[0] - 1

    @property
    def sz_even(self) -> np.ndarray:
        return self.sz[:, 0::2].mean(axis=1)

    @property
    def sz_odd(self) -> np.ndarray:
        return self.sz[:, 1::2].mean(axis=1)


@dataclass
class CovarianceState:
    gamma_matrix: np.ndarray
    L: int
    layer_count: int = 0

    def sz(self) -> np.ndarray:
        G = self.gamma_matrix
        return G[0::2, 1::2].diagonal().copy()

    def antisymmetry_residual(self) -> float:
        G = self.gamma_matrix
        return float(np.abs(G + G.T).max())

    def purity_residual(self) -> float:
        G = self.gamma_matrix
        return float(np.abs(G @ G + np.eye(2 * self.L)).max())

    def parity(self) -> float:
        """Fermion parity <prod_j sigma_z_j> = Pf(Gamma) of a pure Gaussian state."""
        return pfaffian(self.gamma_matrix)


class SixBlockState(NamedTuple):
    k: float
    v6: np.ndarray


class GGEData(NamedTuple):
    ks: np.ndarray
    nbar: np.ndarray  # (n_sectors, 4) conserved Nambu-mode occupations
    eigvecs: list  # real orthogonal V^k (rows v_i) of the N4 block
    sz_even: float
    sz_odd: float


def pfaffian(A) -> float:
    """Pfaffian of a real antisymmetric matrix by Gaussian elimination with pivoting."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(A[k + 1 :, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(tau, A[k + 2 :, k + 1]) - np.outer(A[k + 2 :, k + 1], tau)
    return float(pf)


def _parse_bits(initial, L=None) -> np.ndarray:
    if isinstance(initial, str):
        bits = np.array([int(ch) for ch in initial.strip()], dtype=int)
    else:
        bits = np.asarray(initial, dtype=int)
    if bits.ndim != 1 or not np.all((bits == 0) | (bits == 1)):
        raise ValueError("initial state must be a 0/1 bitstring")
    if L is not None and bits.size != L:
        raise ValueError(f"bitstring has length {bits.size}, expected {L}")
    return bits


def seed_bits(L, site) -> np.ndarray:
    bits = np.zeros(L, dtype=int)
    bits[site] = 1
    return bits


def initial_covariance(bits) -> CovarianceState:
    bits = _parse_bits(bits)
    L = bits.size
    G = np.zeros((2 * L, 2 * L))
    z = 1.0 - 2.0 * bits
    idx = np.arange(L)
    G[2 * idx, 2 * idx + 1] = z
    G[2 * idx + 1, 2 * idx] = -z
    return CovarianceState(G, L, 0)


def _rotation(ops, G):
    """Real orthogonal R with G^+ m_a G = sum_b R_ab m_b."""
    n = len(ops)
    d = ops[0].shape[0]
    R = np.empty((n, n))
    for a in range(n):
        conj = G.conj().T @ ops[a] @ G
        for b in range(n):
            R[a, b] = np.trace(ops[b] @ conj).real / d
    return R


def gate_rotation(params) -> np.ndarray:
    """4x4 Majorana rotation of one gate, from its free-fermion exponent."""
    E = exponent_matrix(exponent_coefficients(as_params(params)))
    K = np.empty((4, 4))
    for a in range(4):
        comm = -1j * (E @ _MAJ2[a] - _MAJ2[a] @ E)
        for b in range(4):
            K[a, b] = np.trace(_MAJ2[b] @ comm).real / 4
    return expm(K)


def boundary_rotation(theta) -> np.ndarray:
    return _rotation(_MAJ1, build_boundary_k(theta))


@lru_cache(maxsize=64)
def _layer_plan(params: GateParams, L: int, boundary: str):
    """Per sublayer: (shift, stacked 4x4 rotations over the L/2 blocks)."""
    R = gate_rotation(params)
    first = np.broadcast_to(R, (L // 2, 4, 4)).copy()
    second = first.copy()
    if boundary == "OBC":
        wrap = np.zeros((4, 4))
        wrap[:2, :2] = boundary_rotation(params.theta / 2)  # site L-1
        wrap[2:, 2:] = boundary_rotation(-params.theta / 2)  # site 0
        second[-1] = wrap
    return ((0, first), (2, second))


def _apply(G, Rs, shift):
    n = Rs.shape[0]
    if shift:
        G = np.roll(G, (-shift, -shift), axis=(0, 1))
    G4 = G.reshape(n, 4, n, 4)
    G4 = np.einsum("aij,ajbk,blk->aibl", Rs, G4, Rs, optimize=True)
    G = G4.reshape(4 * n, 4 * n)
    if shift:
        G = np.roll(G, (shift, shift), axis=(0, 1))
    return G


def _check_chain(L, boundary):
    if L % 2 or L < 4:
        raise ValueError(f"L must be even and >= 4, got {L}")
    if boundary not in ("PBC", "OBC"):
        raise ValueError(f"boundary must be PBC or OBC, got {boundary!r}")


def evolve_covariance(state: CovarianceState, params, layers: int, boundary="PBC") -> CovarianceState:
    p = as_params(params)
    _check_chain(state.L, boundary)
    if layers < 0:
        raise ValueError("layers must be >= 0")
    G = state.gamma_matrix
    plan = _layer_plan(p, state.L, boundary)
    for _ in range(layers):
        for shift, Rs in plan:
            G = _apply(G, Rs, shift)
    return CovarianceState(G, state.L, state.layer_count + layers)


def covariance_evolve(params, L, initial, layers, boundary="PBC") -> MagnetizationTrace:
    """<sigma_z_j> after 0..layers layers of U_F from a product bitstring."""
    p = as_params(params)
    _check_chain(L, boundary)
    if layers < 0:
        raise ValueError("layers must be >= 0")
    bits = _parse_bits(initial, L)
    st = initial_covariance(bits)
    plan = _layer_plan(p, L, boundary)
    out = np.empty((layers + 1, L))
    G = st.gamma_matrix
    out[0] = 1.0 - 2.0 * bits
    for t in range(1, layers + 1):
        for shift, Rs in plan:
            G = _apply(G, Rs, shift)
        out[t] = G[0::2, 1::2].diagonal()
    return MagnetizationTrace(out, p, L, boundary, "".join(map(str, bits)))


# ---------------------------------------------------------------------------
# momentum sectors (PBC, L = 4l + 2)


def _check_4l2(L):
    if L % 4 != 2:
        raise ValueError(f"momentum-sector dynamics needs L = 4l + 2, got L = {L}")


def sector_momenta(L) -> np.ndarray:
    _check_4l2(L)
    return 2 * np.pi * np.arange(1, (L - 2) // 4 + 1) / L


def sector_layer_unitary(params, k) -> np.ndarray:
    """One layer on the 16-dim sector Fock space, odd exponent applied first."""
    se = sector_exponents(params, 1.0, k)
    return expm(1j * se.e_even) @ expm(1j * se.e_odd)


def k0_layer_unitary(params) -> np.ndarray:
    """One layer on the {|empty>, |0,pi>} block of the k = 0, pi sector."""
    eo, ee = special_sector_exponents(params, "K0_M")
    return expm(1j * ee) @ expm(1j * eo)


def six_block(params, k) -> np.ndarray:
    """U_F restricted to M6, in the signed M6 basis."""
    U = sector_layer_unitary(params, k)
    idx = BLOCKS["M6"]
    return U[np.ix_(idx, idx)] * np.outer(M6_SIGNS, M6_SIGNS)


def momentum_block_evolve_allzero(params, L, layers) -> MagnetizationTrace:
    """<sigma_z> on even and odd sites from the M6 blocks and the D matrices."""
    p = as_params(params)
    _check_4l2(L)
    if layers < 0:
        raise ValueError("layers must be >= 0")
    n_even = np.zeros(layers + 1)
    n_odd = np.zeros(layers + 1)
    for k in sector_momenta(L):
        U6 = six_block(p, k)
        v = np.zeros(6, dtype=complex)
        v[0] = 1
        for t in range(layers + 1):
            n_even[t] += (v.conj() @ D_EVEN @ v).real
            n_odd[t] += (v.conj() @ D_ODD @ v).real
            v = U6 @ v
    # k = 0, pi: both sublattices receive the |0,pi> weight
    U0 = k0_layer_unitary(p)
    v = np.array([1, 0], dtype=complex)
    for t in range(layers + 1):
        w = abs(v[1]) ** 2
        n_even[t] += w
        n_odd[t] += w
        v = U0 @ v
    sz = np.empty((layers + 1, L))
    sz[:, 0::2] = (1 - 4 * n_even / L)[:, None]
    sz[:, 1::2] = (1 - 4 * n_odd / L)[:, None]
    return MagnetizationTrace(sz, p, L, "PBC", "0" * L, {"route": "momentum"})


def six_block_states(params, L, layers) -> list:
    return [
        SixBlockState(k, np.linalg.matrix_power(six_block(params, k), layers)[:, 0])
        for k in sector_momenta(L)
    ]


# ---------------------------------------------------------------------------
# generalized Gibbs ensemble


def _nambu_map(U, psi_ops):
    """Single-particle matrix W with U^+ Psi_a U = sum_b W_ab Psi_b."""
    n = len(psi_ops)
    W = np.empty((n, n), dtype=complex)
    for a in range(n):
        conj = U.conj().T @ psi_ops[a] @ U
        for b in range(n):
            ob = psi_ops[b]
            W[a, b] = np.trace(ob.conj().T @ conj) / np.trace(ob.conj().T @ ob)
    return W


def _two_mode_ops():
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    c0 = np.kron(lower, PAULI_I)
    cpi = np.kron(PAULI_Z, lower)
    return c0, cpi


def _dephase(W, C0, tol=1e-9):
    """Infinite-time average of conj(W^n) C0 (W^n)^T."""
    lam, S = np.linalg.eig(W)
    Si = np.linalg.inv(S)
    # conj(W^n) = conj(S) conj(lam)^n conj(Si); (W^n)^T = Si^T lam^n S^T
    X = Si.conj() @ C0 @ Si.T
    keep = np.abs(lam.conj()[:, None] * lam[None, :] - 1) < tol
    return S.conj() @ (X * keep) @ S.T, X.diagonal().real


def _sector_number(C, sign):
    """<(c_k^+ + s c_q^+)(c_k + s c_q)/2 + (c_-k^+ + s c_-q^+)(c_-k + s c_-q)/2>.

    C_ab = <Psi_a^+ Psi_b> with Psi = (c_k, c_q, c_-k^+, c_-q^+), q = k - pi.
    """
    s = np.array([1.0, sign])
    part = s @ C[:2, :2] @ s
    hole = s @ C[2:, 2:] @ s
    return float((part + 2 - hole).real / 2)


def real_eigvecs_n4(params, k, block="N4") -> tuple[np.ndarray, np.ndarray]:
    """(V, lam): rows of V are real orthonormal eigenvectors of the signed N4 block."""
    U = sector_layer_unitary(params, k)
    idx = BLOCKS[block]
    sg = N4_SIGNS if block == "N4" else N4P_SIGNS
    B = U[np.ix_(idx, idx)] * np.outer(sg, sg)
    # B is complex symmetric and unitary: Re B and Im B commute
    _, V = np.linalg.eigh(B.real + np.pi / 7 * B.imag)
    V = V.T
    lam = np.diag(V @ B @ V.T)
    return V, lam


def gge_data(params, L) -> GGEData:
    p = as_params(params)
    ks = sector_momenta(L)
    c, cd = _C, _CD
    psi = [c[0], c[2], cd[1], cd[3]]
    C0 = np.diag([0, 0, 1, 1]).astype(complex)
    n_even = n_odd = 0.0
    nbars, vecs = [], []
    for k in ks:
        W = _nambu_map(sector_layer_unitary(p, k), psi)
        C, nb = _dephase(W, C0)
        n_even += _sector_number(C, +1)
        n_odd += _sector_number(C, -1)
        nbars.append(nb)
        vecs.append(real_eigvecs_n4(p, k)[0])
    c0, cpi = _two_mode_ops()
    U0 = np.zeros((4, 4), dtype=complex)
    # embed the M block {|00>, |11>} and the N block {|10>, |01>} of the k = 0, pi sector
    eo, ee = special_sector_exponents(p, "K0_N")
    UN = expm(1j * ee) @ expm(1j * eo)
    U0[np.ix_([0, 3], [0, 3])] = k0_layer_unitary(p)
    U0[np.ix_([2, 1], [2, 1])] = UN
    W0 = _nambu_map(U0, [c0, cpi, c0.conj().T, cpi.conj().T])
    C00 = np.diag([0, 0, 1, 1]).astype(complex)
    C, _ = _dephase(W0, C00)
    # occupation of the sublattice modes (c_0 +- c_pi)/sqrt(2) from the dephased k = 0, pi block
    for sgn in (+1, -1):
        s = np.array([1.0, sgn])
        val = float((s @ C[:2, :2] @ s).real / 2)
        if sgn > 0:
            n_even += val
        else:
            n_odd += val
    return GGEData(ks, np.array(nbars), vecs, 1 - 4 * n_even / L, 1 - 4 * n_odd / L)


def gge_equilibrium(params, L) -> tuple[float, float]:
    """(sz_even, sz_odd) predicted by the generalized Gibbs ensemble."""
    d = gge_data(params, L)
    return d.sz_even, d.sz_odd


def nbar_at_layer(params, L, layers) -> np.ndarray:
    """Nambu-mode occupations after a number of layers (conserved quantities)."""
    p = as_params(params)
    c, cd = _C, _CD
    psi = [c[0], c[2], cd[1], cd[3]]
    C0 = np.diag([0, 0, 1, 1]).astype(complex)
    out = []
    for k in sector_momenta(L):
        W = _nambu_map(sector_layer_unitary(p, k), psi)
        Wn = np.linalg.matrix_power(W, layers)
        Ct = Wn.conj() @ C0 @ Wn.T
        lam, S = np.linalg.eig(W)
        Si = np.linalg.inv(S)
        out.append((Si.conj() @ Ct @ Si.T).diagonal().real)
    return np.array(out)


# ---------------------------------------------------------------------------
# seed fronts


def drift_velocity(trace: MagnetizationTrace, background=None, window=(0.2, 0.8), margin=10,
                   max_rms=2.0, method="peak") -> float:
    """Velocity (sites per layer) of a seed signal over the ballistic window.

    method="peak" fits a line to the site maximising |sz - background| per layer;
    method="centroid" fits the |sz - background|-weighted mean site instead,
    which stays meaningful when the seed splits into two fronts.
    `background` may be a scalar, an (even, odd) pair, or an array broadcastable
    to trace.sz (for instance the unseeded trace).  Defaults to the GGE of the
    sublattices when the chain length allows it, else 1.
    """
    if method not in ("peak", "centroid"):
        raise ValueError(f"method must be 'peak' or 'centroid', got {method!r}")
    sz = trace.sz
    T, L = trace.layers, trace.L
    if T < 40:
        raise ValueError("drift_velocity needs a trace with at least 40 layers")
    if background is None:
        background = gge_equilibrium(trace.params, L) if L % 4 == 2 else 1.0
    bg = np.asarray(background, dtype=float)
    if bg.shape == (2,):
        row = np.empty(L)
        row[0::2], row[1::2] = bg
        bg = row
    dev = np.abs(sz - bg)
    t0, t1 = int(np.ceil(window[0] * T)), int(np.floor(window[1] * T))
    ts = np.arange(t0, t1 + 1)
    lo, hi = margin, L - margin
    d = dev[ts, lo:hi]
    if method == "peak":
        pos = lo + d.argmax(axis=1)
    else:
        w = d.sum(axis=1)
        if np.any(w == 0):
            raise DriftVelocityError("no signal above background in the fit window")
        pos = (d * np.arange(lo, hi)).sum(axis=1) / w
    coef, res, *_ = np.polyfit(ts, pos, 1, full=True)
    rms = float(np.sqrt(res[0] / len(ts))) if len(res) else 0.0
    if rms > max_rms:
        raise DriftVelocityError(f"no ballistic front: rms residual {rms:.2f} sites")
    return float(coef[0])


def light_cone_violation(params, L, site, layers, boundary="PBC", buffer=4) -> float:
    """Largest |sz_seed - sz_plain| outside |j - site| <= 2 t + buffer (cyclic distance for PBC)."""
    plain = covariance_evolve(params, L, np.zeros(L, dtype=int), layers, boundary).sz
    seeded = covariance_evolve(params, L, seed_bits(L, site), layers, boundary).sz
    j = np.arange(L)
    dist = np.abs(j - site)
    if boundary == "PBC":
        dist = np.minimum(dist, L - dist)
    worst = 0.0
    for t in range(layers + 1):
        outside = dist > 2 * t + buffer
        if outside.any():
            worst = max(worst, float(np.abs(seeded[t, outside] - plain[t, outside]).max()))
    return worst

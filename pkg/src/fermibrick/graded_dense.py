"""Small-L exact oracle on the 2^L qubit space with graded (fermionic) embeddings.

Sites are 1-based in the public API, matching the usual chain labelling
1, ..., L.  An odd single-site operator at site j is represented as
sigma_z x ... x sigma_z x O_j x 1 x ... x 1 (Jordan-Wigner string to the left).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Literal, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .gate_core import (
    GRADED_SWAP,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    GateParams,
    as_params,
    build_boundary_k,
    build_smatrix,
    smatrix_smooth,
)

DENSE_MAX_L = 14
TRANSFER_MAX_L = 10

Boundary = Literal["PBC", "OBC", "OBC_EXTENDED"]

# elementary single-site matrices |a><b| and their parities
_UNITS = [
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
    np.array([[0, 0], [1, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
]
_UNIT_PARITY = [0, 1, 1, 0]


class ResourceError(RuntimeError):
    """Requested dense object is too large for the oracle."""


class ParityError(ValueError):
    """Operator does not have the declared Z2 parity."""


@dataclass(frozen=True)
class GradedOperator:
    entries: np.ndarray
    L: int
    parity: int = 0

    def __matmul__(self, other: "GradedOperator") -> "GradedOperator":
        return GradedOperator(self.entries @ other.entries, self.L, (self.parity + other.parity) % 2)


class SuperchargePair(NamedTuple):
    qL: GradedOperator
    qR: GradedOperator


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    u: complex
    theta1: float
    theta2: float


def operator_parity(op) -> int | None:
    """Parity of a 2^n x 2^n matrix, or None if it mixes parities."""
    op = np.asarray(op)
    n = int(round(math.log2(op.shape[0])))
    pop = np.array([bin(i).count("1") % 2 for i in range(2**n)])
    mask = (pop[:, None] + pop[None, :]) % 2
    nz = np.abs(op) > 1e-14
    even = bool(np.any(nz & (mask == 0)))
    odd = bool(np.any(nz & (mask == 1)))
    if even and odd:
        return None
    return 1 if odd else 0


def _check_L(L: int, limit: int = DENSE_MAX_L):
    if L > limit:
        raise ResourceError(f"L={L} exceeds the dense oracle limit {limit}")


def _kron_chain(factors: Sequence[np.ndarray]) -> sp.csr_matrix:
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), [sp.csr_matrix(f) for f in factors])


def _site_factors_single(op, site0: int, L: int, parity: int) -> list:
    fac = [PAULI_Z if (parity and j < site0) else PAULI_I for j in range(L)]
    fac[site0] = np.asarray(op, dtype=complex)
    return fac


def _embed1_sparse(op, site0: int, L: int, parity: int) -> sp.csr_matrix:
    return _kron_chain(_site_factors_single(op, site0, L, parity))


def _embed_pair_sparse(op4, i0: int, j0: int, L: int) -> sp.csr_matrix:
    """Even 4x4 operator acting on the ordered pair of sites (i0, j0), 0-based.

    op4 is written in the 2-qubit basis with site i0 as the first factor.  The
    operator is split into products |a><b| x |c><d|; each odd x odd product is
    realised as the Jordan-Wigner image of the same fermionic monomial, which
    reduces to a plain kron when j0 = i0 + 1 and yields the correctly signed
    wrap-around gate for (L-1, 0).
    """
    M = np.asarray(op4, dtype=complex).reshape(2, 2, 2, 2)  # [a, c, b, d]
    out = sp.csr_matrix((2**L, 2**L), dtype=complex)
    for x, A in enumerate(_UNITS):
        for y, B in enumerate(_UNITS):
            ra, ca = np.argwhere(A)[0]
            rb, cb = np.argwhere(B)[0]
            coef = M[ra, rb, ca, cb]
            if coef == 0:
                continue
            px, py = _UNIT_PARITY[x], _UNIT_PARITY[y]
            if px != py:
                raise ParityError("two-site operator is not parity even")
            Ap = A @ PAULI_Z if py else A
            fa = _site_factors_single(Ap, i0, L, px)
            fb = _site_factors_single(B, j0, L, py)
            out = out + coef * _kron_chain([a @ b for a, b in zip(fa, fb)])
    return out.tocsr()


def embed_local_graded(op, site: int, L: int, op_parity: int) -> GradedOperator:
    """Embed a 1-site (2x2) or 2-site (4x4) operator at 1-based `site`.

    A 4x4 operator acts on (site, site+1); site = L means the wrap pair (L, 1).
    """
    op = np.asarray(op, dtype=complex)
    if not 1 <= site <= L:
        raise ValueError(f"site must be in [1, {L}], got {site}")
    _check_L(L)
    par = operator_parity(op)
    if par is not None and par != op_parity and np.any(np.abs(op) > 1e-14):
        raise ParityError(f"declared parity {op_parity} but operator has parity {par}")
    if par is None:
        raise ParityError("operator mixes even and odd parts")
    if op.shape == (2, 2):
        m = _embed1_sparse(op, site - 1, L, op_parity)
    elif op.shape == (4, 4):
        if op_parity != 0:
            raise ParityError("two-site embedding is implemented for even operators only")
        m = _embed_pair_sparse(op, site - 1, site % L, L)
    else:
        raise ValueError(f"unsupported operator shape {op.shape}")
    return GradedOperator(m.toarray(), L, op_parity)


def embed_pair(op4, i: int, j: int, L: int) -> GradedOperator:
    """Even 4x4 operator on the ordered 1-based site pair (i, j)."""
    _check_L(L)
    return GradedOperator(_embed_pair_sparse(op4, i - 1, j - 1, L).toarray(), L, 0)


# ---------------------------------------------------------------------------
# brick wall circuits


def _line_tracked_layers(params: GateParams, L: int, n_layers: int, obc: bool, track_masses: bool):
    """Sequence of (kind, payload) sublayer operations in application order.

    With track_masses the gate on each bond uses gamma = log(m_left/m_right)
    of the two lines that actually meet there; lines swap positions at every
    gate and reflect at the open ends.
    """
    g = params.gamma
    masses = [g / 2 if j % 2 == 0 else -g / 2 for j in range(L)]  # log masses
    ops = []
    for _ in range(n_layers):
        for parity in (0, 1):
            bonds = [(j, j + 1) for j in range(parity, L - 1, 2)]
            if parity == 1 and not obc:
                bonds.append((L - 1, 0))
            gates = []
            for i, j in bonds:
                gam = masses[i] - masses[j] if track_masses else g
                gates.append((i, j, gam))
                masses[i], masses[j] = masses[j], masses[i]
            ops.append((parity, gates))
    return ops


def ubw_factors(params, L: int, boundary: Boundary = "PBC", smooth: bool = False) -> list:
    """Sparse sublayer factors of one (extended) layer, in order of application."""
    p = as_params(params)
    if L % 2:
        raise ValueError("L must be even")
    if boundary != "PBC" and L < 4:
        raise ValueError("open-boundary circuits need L >= 4")
    _check_L(L)
    if boundary not in ("PBC", "OBC", "OBC_EXTENDED"):
        raise ValueError(f"unknown boundary {boundary!r}")
    obc = boundary != "PBC"
    ext = boundary == "OBC_EXTENDED"
    plan = _line_tracked_layers(p, L, L if ext else 1, obc, track_masses=ext)
    gate_cache: dict = {}

    def gate(gam):
        if gam not in gate_cache:
            if smooth:
                gate_cache[gam] = smatrix_smooth(p.alpha, gam, p.theta)
            else:
                gate_cache[gam] = build_smatrix(GateParams(p.alpha, gam, p.theta))
        return gate_cache[gam]

    factors = []
    for parity, gates in plan:
        F = sp.identity(2**L, dtype=complex, format="csr")
        for i, j, gam in gates:
            F = _embed_pair_sparse(gate(gam), i, j, L) @ F
        if obc and parity == 1:
            F = _embed1_sparse(build_boundary_k(-p.theta / 2), 0, L, 0) @ F
            F = _embed1_sparse(build_boundary_k(p.theta / 2), L - 1, L, 0) @ F
        factors.append(F.tocsr())
    return factors


def build_ubw(params, L: int, boundary: Boundary = "PBC", smooth: bool = False) -> GradedOperator:
    """U_F = U_odd U_even (PBC/OBC) or the L-layer mass-restoring product (OBC_EXTENDED)."""
    U = np.eye(2**L, dtype=complex)
    for F in ubw_factors(params, L, boundary, smooth):
        U = F @ U
    return GradedOperator(np.asarray(U), L, 0)


def build_supercharges(params, L: int) -> SuperchargePair:
    p = as_params(params)
    if L % 2:
        raise ValueError("L must be even")
    _check_L(L)
    wl = math.exp((p.gamma + p.theta) / 4)
    wr = math.exp((p.gamma - p.theta) / 4)
    qL = sp.csr_matrix((2**L, 2**L), dtype=complex)
    qR = sp.csr_matrix((2**L, 2**L), dtype=complex)
    for j in range(L):
        s = 1 if j % 2 == 0 else -1
        qL = qL + wl**s * _embed1_sparse(PAULI_X, j, L, 1)
        qR = qR + wr**s * _embed1_sparse(PAULI_Y, j, L, 1)
    return SuperchargePair(GradedOperator(qL.toarray(), L, 1), GradedOperator(qR.toarray(), L, 1))


def commutator_norm(A, B) -> float:
    A = getattr(A, "entries", A)
    B = getattr(B, "entries", B)
    return float(np.linalg.norm(A @ B - B @ A))


# ---------------------------------------------------------------------------
# Yang-Baxter and the graded transfer matrix


def line_gate(alpha: float, log_m_left: float, log_m_right: float, theta) -> np.ndarray:
    """Gate for two crossing lines with log-masses and rapidity difference theta.

    The mixing strength of the pair is alpha * sqrt(m_left m_right); for the
    circuit's odd/even pairs m1 m2 = 1 and this is alpha itself.
    """
    a_eff = alpha * math.exp((log_m_left + log_m_right) / 2)
    return smatrix_smooth(a_eff, log_m_left - log_m_right, theta)


def verify_yang_baxter(params, theta_a: float, theta_b: float, theta_c: float,
                       log_masses: Sequence[float] | None = None) -> float:
    """|| S12 S23 S12 - S23 S12 S23 || for three lines crossing in both orders.

    Default lines carry masses (m1, m2, m1), alternating as on the circuit.
    """
    p = as_params(params)
    if log_masses is None:
        log_masses = (p.gamma / 2, -p.gamma / 2, p.gamma / 2)
    lines0 = list(zip(log_masses, (theta_a, theta_b, theta_c)))

    def product(order):
        lines = list(lines0)
        U = np.eye(8, dtype=complex)
        for pos in order:
            (ml, tl), (mr, tr) = lines[pos], lines[pos + 1]
            G = line_gate(p.alpha, ml, mr, tl - tr)
            U = (np.kron(G, PAULI_I) if pos == 0 else np.kron(PAULI_I, G)) @ U
            lines[pos], lines[pos + 1] = lines[pos + 1], lines[pos]
        return U

    return float(np.linalg.norm(product((0, 1, 0)) - product((1, 0, 1))))


def build_transfer_matrix(u: complex, params, L: int, aux_log_mass: float | None = None) -> TransferMatrix:
    """t(u) = Str_a [R_{a,L}(u - th_L) ... R_{a,1}(u - th_1)], R = Pi * S.

    The auxiliary space is an extra graded site placed before site 1, and the
    super-trace is sum_a (-1)^{p(a)} <a| T |a>.  Inhomogeneities alternate
    theta/2 (odd sites, mass m1) and -theta/2 (even sites, mass m2).
    """
    p = as_params(params)
    if L % 2:
        raise ValueError("L must be even")
    _check_L(L, TRANSFER_MAX_L)
    la = p.gamma / 2 if aux_log_mass is None else aux_log_mass
    n = L + 1
    T = sp.identity(2**n, dtype=complex, format="csr")
    for i in range(L):
        lm, th = (p.gamma / 2, p.theta / 2) if i % 2 == 0 else (-p.gamma / 2, -p.theta / 2)
        R = GRADED_SWAP @ line_gate(p.alpha, la, lm, u - th)
        T = _embed_pair_sparse(R, 0, i + 1, n) @ T
    T = T.toarray().reshape(2, 2**L, 2, 2**L)
    t = T[0, :, 0, :] - T[1, :, 1, :]
    return TransferMatrix(t, complex(u), p.theta / 2, -p.theta / 2)


def graded_translation(L: int) -> GradedOperator:
    """G~ = Pi_{1,2} Pi_{2,3} ... Pi_{L-1,L}."""
    _check_L(L)
    G = sp.identity(2**L, dtype=complex, format="csr")
    for m in range(L - 1):
        G = G @ _embed_pair_sparse(GRADED_SWAP, m, m + 1, L)
    return GradedOperator(G.toarray(), L, 0)


# ---------------------------------------------------------------------------


def dense_spectrum(op, kind: Literal["unitary", "hermitian"] | None = None) -> np.ndarray:
    """All eigenvalues; kind must be given unless the matrix is normal."""
    M = np.asarray(getattr(op, "entries", op))
    if kind == "hermitian":
        return np.linalg.eigvalsh(M)
    if kind == "unitary":
        ev = np.linalg.eigvals(M)
        if np.max(np.abs(np.abs(ev) - 1)) > 1e-10:
            raise ValueError("operator flagged unitary has eigenvalues off the unit circle")
        return ev
    if kind is not None:
        raise ValueError(f"unknown kind {kind!r}")
    if np.linalg.norm(M @ M.conj().T - M.conj().T @ M) > 1e-10 * max(1.0, np.linalg.norm(M)):
        raise ValueError("non-normal operator: pass kind='unitary' or 'hermitian'")
    return np.linalg.eigvals(M)


def quasi_energy_spectrum(U) -> np.ndarray:
    """Sorted phases in (-pi, pi] of a unitary."""
    return np.sort(np.angle(dense_spectrum(U, "unitary")))


def jw_annihilators(L: int) -> list[sp.csr_matrix]:
    """c_j = Z_{<j} |0><1|_j, 0-based j; |0> is empty so sigma_z = 1 - 2n."""
    _check_L(L)
    return [_embed1_sparse(_UNITS[1], j, L, 1) for j in range(L)]


def basis_state(bits: Sequence[int]) -> np.ndarray:
    idx = int("".join(str(int(b)) for b in bits), 2)
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[idx] = 1
    return v


def dense_sz_trace(params, bits: Sequence[int], layers: int, boundary: Boundary = "PBC") -> np.ndarray:
    """<sigma_z_j> after 0..layers applications of U_F, by state-vector evolution."""
    L = len(bits)
    factors = ubw_factors(params, L, boundary)
    psi = basis_state(bits)
    pop = np.array([[(i >> (L - 1 - j)) & 1 for j in range(L)] for i in range(2**L)])
    zsign = 1 - 2 * pop
    out = np.empty((layers + 1, L))
    for t in range(layers + 1):
        out[t] = np.abs(psi) ** 2 @ zsign
        if t < layers:
            for F in factors:
                psi = F @ psi
    return out

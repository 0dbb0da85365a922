"""The theta -> 0 Hamiltonians H_0 and H_gamma: real space, BdG blocks, dispersions.

Fermion conventions: c_j = Z_{<j} |0><1|_j (0-based j), so sigma_z = 1 - 2 n.
Site 2i (0-based) is an A site (odd in 1-based labels), 2i+1 a B site.
A quadratic Hamiltonian is stored as
    H = sum_ij h_ij c_i^+ c_j + 1/2 sum_ij (D_ij c_i^+ c_j^+ + h.c.) + const
with BdG matrix M = [[h, D], [D^+, -h^*]], i.e. H = 1/2 Psi^+ M Psi + const - tr(h)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, NamedTuple

import numpy as np
import scipy.sparse as sp

from .gate_core import PAULI_X, PAULI_Y, PAULI_Z, GateParams
from .graded_dense import (
    _embed1_sparse,
    _embed_pair_sparse,
    build_supercharges,
    jw_annihilators,
    ubw_factors,
)

CIRCUIT_MAX_L = 12
RICHARDSON_STEP = 1e-3


@dataclass(frozen=True)
class HGammaCoefficients:
    nA: float
    nB: float
    jAB: float
    jBA: float
    jAA: float
    jABL: float
    sAB: float
    sBA: float
    sAA: float
    sABL: float

    def perturbed(self, delta: float = 0.0, eps1: float = 0.0, eps2: float = 0.0) -> "HGammaCoefficients":
        """J^L_AB += delta, N_A += eps1, N_B += eps2."""
        return replace(self, jABL=self.jABL + delta, nA=self.nA + eps1, nB=self.nB + eps2)


def hgamma_coefficients(alpha: float, gamma: float) -> HGammaCoefficients:
    s = 1 / math.cosh(gamma / 2)
    t = math.tanh(gamma / 2)
    return HGammaCoefficients(
        nA=s * (1 - t**3) / alpha,
        nB=s * (1 + t**3) / alpha,
        jAB=(3 * t**2 * s**2 + s**4) / (2 * alpha),
        jBA=s**4 / (2 * alpha),
        jAA=t * s**3 / (2 * alpha),
        jABL=-(t**2) * s**2 / (2 * alpha),
        sAB=s / 2,
        sBA=s**3 / 2,
        sAA=t * s**2 / 2,
        sABL=-(t**2) * s / 2,
    )


@dataclass(frozen=True)
class HamiltonianMatrix:
    h: np.ndarray
    D: np.ndarray
    const: float
    L: int

    @property
    def bdg(self) -> np.ndarray:
        return np.block([[self.h, self.D], [self.D.conj().T, -self.h.conj()]])

    def single_particle_energies(self) -> np.ndarray:
        """The L non-negative BdG eigenvalues (sorted)."""
        ev = np.linalg.eigvalsh(self.bdg)
        return np.sort(ev[self.L:])

    def ground_energy(self) -> float:
        return float(self.const + 0.5 * np.trace(self.h).real - 0.5 * self.single_particle_energies().sum())


def _bond_tables(C: HGammaCoefficients, L: int, boundary: str):
    """Lists of (i, j, value) hopping and pairing terms, 0-based."""
    hops, pairs, onsite = [], [], []
    obc = boundary == "OBC"

    def ok(i, j):
        return not obc or (0 <= j < L)

    for A in range(0, L, 2):
        B = A + 1
        onsite += [(A, -C.nA), (B, -C.nB)]
        for i, j, v in [(A, B, C.jAB), (B, B + 1, C.jBA), (A, A + 3, C.jABL), (A, A + 2, C.jAA), (B, B + 2, -C.jAA)]:
            if ok(i, j) and v != 0:
                hops.append((i, j % L, v))
        for i, j, v in [(A, B, C.sAB), (B, B + 1, C.sBA), (A, A + 2, C.sAA), (B, B + 2, -C.sAA), (A, A + 3, C.sABL)]:
            if ok(i, j) and v != 0:
                pairs.append((i, j % L, 1j * v))
    return onsite, hops, pairs


def assemble_quadratic(C: HGammaCoefficients, L: int, boundary: Literal["PBC", "OBC"] = "PBC") -> HamiltonianMatrix:
    if L % 2 or L < 4:
        raise ValueError("L must be even and >= 4")
    h = np.zeros((L, L), dtype=complex)
    D = np.zeros((L, L), dtype=complex)
    onsite, hops, pairs = _bond_tables(C, L, boundary)
    for i, v in onsite:
        h[i, i] += v
    for i, j, v in hops:
        h[i, j] += v
        h[j, i] += np.conj(v)
    for i, j, v in pairs:
        D[i, j] += v
        D[j, i] -= v
    const = L / 4 * (C.nA + C.nB)
    return HamiltonianMatrix(h, D, const, L)


def build_h0(alpha: float, L: int, boundary: Literal["PBC", "OBC"] = "PBC", mu=None) -> HamiltonianMatrix:
    """Critical Kitaev chain: chemical potential 1/alpha, hopping 1/(2 alpha), pairing i/2.

    `mu` overrides the chemical potential (used to move off criticality).
    """
    C = hgamma_coefficients(alpha, 0.0)
    if mu is not None:
        C = replace(C, nA=mu, nB=mu)
    H = assemble_quadratic(C, L, boundary)
    return replace(H, const=L / (2 * alpha))


def h0_spin_dense(alpha: float, L: int) -> np.ndarray:
    """H_0 in the spin basis with graded wrap-around bond (PBC)."""
    kr = np.kron
    bond = (kr(PAULI_X, PAULI_X) + kr(PAULI_Y, PAULI_Y)) / (4 * alpha) + (
        kr(PAULI_X, PAULI_Y) + kr(PAULI_Y, PAULI_X)
    ) / 4
    H = sp.csr_matrix((2**L, 2**L), dtype=complex)
    for j in range(L):
        H = H + _embed1_sparse(PAULI_Z, j, L, 0) / (2 * alpha)
        H = H + _embed_pair_sparse(bond, j, (j + 1) % L, L)
    return H.toarray()


def to_dense(H: HamiltonianMatrix) -> np.ndarray:
    c = jw_annihilators(H.L)
    cd = [x.conj().T.tocsr() for x in c]
    out = sp.identity(2**H.L, dtype=complex, format="csr") * H.const
    for i in range(H.L):
        for j in range(H.L):
            if H.h[i, j] != 0:
                out = out + H.h[i, j] * (cd[i] @ c[j])
            if H.D[i, j] != 0:
                term = 0.5 * H.D[i, j] * (cd[i] @ cd[j])
                out = out + term + term.conj().T
    return out.toarray()


def quadratic_from_dense(Hd: np.ndarray, L: int) -> tuple[HamiltonianMatrix, float]:
    """Read off h, D, const from a dense operator; returns also the reconstruction residual."""
    c = jw_annihilators(L)
    cd = [x.conj().T.tocsr() for x in c]
    vac = np.zeros(2**L, dtype=complex)
    vac[0] = 1
    E0 = (vac.conj() @ Hd @ vac).real
    one = [cd[i] @ vac for i in range(L)]
    h = np.array([[one[i].conj() @ Hd @ one[j] for j in range(L)] for i in range(L)]) - E0 * np.eye(L)
    Hv = Hd @ vac
    D = np.zeros((L, L), dtype=complex)
    for i in range(L):
        for j in range(i + 1, L):
            D[i, j] = (cd[i] @ (cd[j] @ vac)).conj() @ Hv
            D[j, i] = -D[i, j]
    H = HamiltonianMatrix(h, D, float(E0), L)
    return H, float(np.linalg.norm(to_dense(H) - Hd))


def _ubw_dense(alpha, gamma, theta, L):
    U = np.eye(2**L, dtype=complex)
    for F in ubw_factors(GateParams(alpha, gamma, theta), L, "PBC", smooth=True):
        U = F @ U
    return U


def hgamma_circuit_dense(alpha: float, gamma: float, L: int, step: float = RICHARDSON_STEP) -> np.ndarray:
    """-i U_F(0)^{-1} dU_F/dtheta at theta = 0 (central differences + Richardson)."""
    if L > CIRCUIT_MAX_L:
        from .graded_dense import ResourceError

        raise ResourceError(f"CIRCUIT route limited to L <= {CIRCUIT_MAX_L}")

    def central(hh):
        return (_ubw_dense(alpha, gamma, hh, L) - _ubw_dense(alpha, gamma, -hh, L)) / (2 * hh)

    dU = (4 * central(step / 2) - central(step)) / 3
    U0 = _ubw_dense(alpha, gamma, 0.0, L)
    H = -1j * U0.conj().T @ dU
    return (H + H.conj().T) / 2


def build_hgamma(alpha: float, gamma: float, L: int, source: Literal["ANALYTIC", "CIRCUIT"] = "ANALYTIC",
                 boundary: Literal["PBC", "OBC"] = "PBC") -> HamiltonianMatrix:
    if L % 2:
        raise ValueError("L must be even")
    if source == "ANALYTIC":
        return assemble_quadratic(hgamma_coefficients(alpha, gamma), L, boundary)
    if source == "CIRCUIT":
        if boundary != "PBC":
            raise ValueError("CIRCUIT route is implemented for PBC")
        H, _ = quadratic_from_dense(hgamma_circuit_dense(alpha, gamma, L), L)
        return H
    raise ValueError(f"unknown source {source!r}")


# ---------------------------------------------------------------------------
# momentum space


class BdGBlock(NamedTuple):
    n1: float
    n2: float
    h: complex
    s1: float
    s2: complex
    k: float


def bdg_block(alpha: float, gamma: float, k: float) -> BdGBlock:
    """Closed-form entries of the folded-zone 4x4 block of H_gamma."""
    c = math.cosh(gamma / 2)
    s = 1 / c
    sh = math.sinh(gamma / 2)
    t = math.tanh(gamma / 2)
    common = -4 * c**3
    osc = (3 * math.cosh(gamma) + 1) * math.cos(k) - 2 * sh**2 * math.cos(3 * k)
    n1 = s**4 * (common + osc) / (4 * alpha)
    n2 = s**4 * (common - osc) / (4 * alpha)
    h = t * s**3 / alpha * (sh**2 - 2j * sh * math.sin(k) ** 3 + math.cos(2 * k))
    s1 = -(s**3) * math.sin(k) * (1 - sh**2 * math.cos(2 * k))
    s2 = -2 * sh * s**3 * math.sin(k) * math.cos(k) * (1 + 1j * sh * math.sin(k))
    return BdGBlock(n1, n2, h, s1, s2, k)


def assemble_block(b: BdGBlock) -> np.ndarray:
    """Lambda_k in the Nambu basis (c_k, c_{k-pi}, c^+_{-k}, c^+_{pi-k})."""
    n1, n2, h, s1, s2 = b.n1, b.n2, b.h, b.s1, b.s2
    return np.array(
        [
            [n1, h, s1, s2],
            [np.conj(h), n2, np.conj(s2), -s1],
            [s1, s2, -n1, -h],
            [np.conj(s2), -s1, -np.conj(h), -n2],
        ],
        dtype=complex,
    )


_BLOCH_RING = 16


def _bloch_terms(C: HGammaCoefficients):
    """Nonzero (a_part, b_part, x, d, value) entries of the real-space BdG matrix."""
    H = assemble_quadratic(C, _BLOCH_RING, "PBC")
    M = H.bdg
    R = _BLOCH_RING
    terms = []
    for pa in (0, 1):
        for pb in (0, 1):
            for x in (0, 1):
                for d in range(-4, 5):
                    v = M[pa * R + x, pb * R + (x + d) % R]
                    if v != 0:
                        terms.append((pa, pb, x, d, v))
    return terms


def bloch_blocks(C: HGammaCoefficients, ks) -> np.ndarray:
    """Lambda_k for arbitrary coefficients (e.g. perturbed), shape (len(ks), 4, 4)."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    out = np.zeros((ks.size, 4, 4), dtype=complex)
    comps = [(0, 0.0), (0, -np.pi), (1, 0.0), (1, -np.pi)]  # (particle/hole, momentum shift)
    for pa, pb, x, d, v in _bloch_terms(C):
        for a, (qa_p, qa_s) in enumerate(comps):
            if qa_p != pa:
                continue
            for b, (qb_p, qb_s) in enumerate(comps):
                if qb_p != pb:
                    continue
                qa = ks + qa_s
                qb = ks + qb_s
                out[:, a, b] += 0.5 * v * np.exp(-1j * qa * x + 1j * qb * (x + d))
    return out


class DispersionCoefficients(NamedTuple):
    nu0: float
    nu1: float
    mu: tuple


def dispersion_coefficients(alpha: float, gamma: float) -> DispersionCoefficients:
    s = 1 / math.cosh(gamma / 2)
    t = math.tanh(gamma / 2)
    nu0 = s**4 * (1 + 2 * math.cosh(gamma)) / alpha**2 + s**2
    nu1 = s**4 / alpha**2 - s**2
    mu0 = 8 * s**6 * math.cosh(gamma) / alpha**4 + 8 * t**2 * s**4 / alpha**2
    mu1 = 8 * s**6 / alpha**4 - 8 * t**2 * s**4 / alpha**2
    return DispersionCoefficients(nu0, nu1, (mu0, mu1, 0.0, 0.0, 0.0, 0.0, 0.0))


class DispersionError(ArithmeticError):
    pass


def dispersion_hgamma(alpha: float, gamma: float, k):
    """(eps1, eps2) >= 0; eps1 is the branch vanishing at k = 0."""
    nu0, nu1, mu = dispersion_coefficients(alpha, gamma)
    k = np.asarray(k, dtype=float)
    inner = sum(m * np.cos(2 * j * k) for j, m in enumerate(mu))
    outer_base = nu0 + nu1 * np.cos(2 * k)
    if np.any(inner < -1e-10):
        raise DispersionError("negative inner radicand")
    root = np.sqrt(np.clip(inner, 0, None))
    r2 = outer_base + root
    # r1 = (base^2 - inner) / r2; the numerator vanishes at k = 0 by the
    # gaplessness identity, so take the factor 1 - cos 2k = 2 sin^2 k out by hand
    # instead of subtracting two nearly equal numbers
    rest = nu0**2 - mu[0] - nu1**2 * np.cos(2 * k)
    r1 = 2 * np.sin(k) ** 2 * rest / np.where(r2 > 0, r2, 1.0)
    if np.any(r1 < -1e-10):
        raise DispersionError("negative outer radicand")
    return np.sqrt(np.clip(r1, 0, None) / 2), np.sqrt(r2 / 2)


def gaplessness_identity(alpha: float, gamma: float) -> tuple[float, float, float]:
    """((nu0+nu1)^2, sum mu, 16/(alpha^4 cosh^4(gamma/2)))."""
    nu0, nu1, mu = dispersion_coefficients(alpha, gamma)
    return (nu0 + nu1) ** 2, float(sum(mu)), 16 / (alpha**4 * math.cosh(gamma / 2) ** 4)


def k0_block_entries(alpha: float, gamma: float) -> tuple[float, float, float]:
    """(N1^0, N2^0, H^0) at k = 0, with H^0 = sqrt(N1^0 N2^0)."""
    c2 = math.cosh(gamma / 2) ** 2
    n1 = -2 / alpha * math.sinh(gamma / 4) ** 2 / c2
    n2 = -2 / alpha * math.cosh(gamma / 4) ** 2 / c2
    return n1, n2, math.sqrt(n1 * n2)


def zero_mode_vector(gamma: float, L: int) -> np.ndarray:
    """Normalised real-space amplitudes of the combination Q^L - i Q^R at theta = 0.

    In these conventions Q^L - i Q^R = 2 sum_j w_j c_j^+ with w = e^{+gamma/4}
    on A sites and e^{-gamma/4} on B sites.
    """
    w = np.array([math.exp(gamma / 4) if j % 2 == 0 else math.exp(-gamma / 4) for j in range(L)])
    return w / np.linalg.norm(w)


def zero_mode_check(alpha: float, gamma: float, L: int = 8) -> float:
    """Max deviation over the k = 0 statements.

    Checks the closed-form N1^0, N2^0, |H^0| against the Bloch block, the block
    energies +-(N1^0+N2^0)/2, the zero-mode amplitudes built from N1^0, N2^0
    against the normalised (Q^L - i Q^R) vector, and that this vector is
    annihilated by the real-space BdG matrix.
    """
    C = hgamma_coefficients(alpha, gamma)
    lam = bloch_blocks(C, [0.0])[0]
    n1, n2, h0 = k0_block_entries(alpha, gamma)
    res = [abs(lam[0, 0].real - n1), abs(lam[1, 1].real - n2), abs(abs(lam[0, 1]) - h0)]
    target = sorted([-(n1 + n2) / 2, (n1 + n2) / 2])
    Mblock = np.diag([-(n1 + n2) / 2, (n1 + n2) / 2])
    Nblock = np.array([[(n1 - n2) / 2, lam[0, 1].real], [lam[0, 1].real, (n2 - n1) / 2]])
    res.append(np.max(np.abs(np.sort(np.linalg.eigvalsh(Mblock)) - target)))
    res.append(np.max(np.abs(np.sort(np.linalg.eigvalsh(Nblock)) - target)))
    # amplitudes from (sqrt(-N2) c_0 -/+ sqrt(-N1) c_pi) in real space
    sg = 1.0 if gamma >= 0 else -1.0
    amp = np.array(
        [math.sqrt(-n2) + sg * math.sqrt(-n1) if j % 2 == 0 else math.sqrt(-n2) - sg * math.sqrt(-n1) for j in range(L)]
    ) / math.sqrt(L * -(n1 + n2))
    phi = zero_mode_vector(gamma, L)
    res.append(np.max(np.abs(amp - phi)))
    H = assemble_quadratic(C, L, "PBC")
    vec = np.concatenate([phi, np.zeros(L)])
    res.append(np.max(np.abs(H.bdg @ vec)))
    return float(max(res))


def supercharge_commutators(alpha: float, gamma: float, L: int = 8) -> tuple[float, float]:
    """Dense ||[H_gamma, Q^L(gamma, 0)]||, ||[H_gamma, Q^R(gamma, 0)]||."""
    Hd = to_dense(build_hgamma(alpha, gamma, L))
    q = build_supercharges(GateParams(alpha, gamma, 0.0), L)
    return (
        float(np.linalg.norm(Hd @ q.qL.entries - q.qL.entries @ Hd)),
        float(np.linalg.norm(Hd @ q.qR.entries - q.qR.entries @ Hd)),
    )

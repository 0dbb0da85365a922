"""The supersymmetric two-qubit matchgate, its boundary gate and its free-fermion exponent.

Basis ordering everywhere is {|bb>, |bf>, |fb>, |ff>} = {|00>, |01>, |10>, |11>},
with |0> the bosonic (empty) and |1> the fermionic (occupied) state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# graded permutation: swap with a -1 on |ff>
GRADED_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]], dtype=complex
)

# positions that are structurally zero for a matchgate (and for the S-matrix)
_OFF_PATTERN = [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2)]


class GateDomainError(ValueError):
    """Raised for non-finite or out-of-range gate parameters."""


class NotAMatchgateError(ValueError):
    """Raised when a 4x4 matrix violates the matchgate sparsity pattern."""


@dataclass(frozen=True)
class GateParams:
    """(alpha, gamma, theta) with gamma = log(m1/m2) and m1*m2 = 1."""

    alpha: float
    gamma: float
    theta: float

    def __post_init__(self):
        for name in ("alpha", "gamma", "theta"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise GateDomainError(f"{name} must be finite, got {v!r}")
        if self.alpha <= 0:
            raise GateDomainError(
                f"alpha must be > 0 (use permutation_limit for alpha=0), got {self.alpha!r}"
            )

    @property
    def m1(self) -> float:
        return math.exp(self.gamma / 2)

    @property
    def m2(self) -> float:
        return math.exp(-self.gamma / 2)

    @property
    def rapidity_odd(self) -> float:
        return self.theta / 2

    @property
    def rapidity_even(self) -> float:
        return -self.theta / 2

    def with_(self, **kw) -> "GateParams":
        d = dict(alpha=self.alpha, gamma=self.gamma, theta=self.theta)
        d.update(kw)
        return GateParams(**d)


def as_params(p) -> GateParams:
    if isinstance(p, GateParams):
        return p
    return GateParams(*p)


class SMatrixIngredients(NamedTuple):
    t: float
    t_tilde: float
    f: complex
    g: complex


class MatchgateDecomposition(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    det_gap: float


class ExponentCoefficients(NamedTuple):
    a11: float
    a12: float
    phi: float
    b12: float


def _sign(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def _eight_vertex_part(t, tt):
    return np.array(
        [
            [1 - t * tt, 0, 0, t + tt],
            [0, 1 + t * tt, t - tt, 0],
            [0, -t + tt, 1 + t * tt, 0],
            [-t - tt, 0, 0, 1 - t * tt],
        ],
        dtype=complex,
    )


def _smooth_fg(alpha, gamma, theta):
    # f and g multiplied through by |sinh(theta)|/sinh(theta); this removes the
    # removable singularity at theta = 0 and extends to complex theta
    D = np.sqrt(np.sinh(theta) ** 2 + 2 * alpha**2 * (np.cosh(theta) + np.cosh(gamma)))
    g = 1j * np.sinh(theta) / D
    f = alpha * (np.cosh(theta / 2) + np.cosh(gamma / 2)) / D
    return f, g


def smatrix_ingredients(params) -> SMatrixIngredients:
    """t, t~, f, g with the unitary normalisation of g.

    g = i (1 + 2 alpha^2 (cosh th + cosh ga) / sinh^2 th)^(-1/2); at theta = 0 the
    limit g = 0 and the finite limit of f are returned.
    """
    p = as_params(params)
    t = math.tanh((p.theta + p.gamma) / 4)
    tt = math.tanh((p.theta - p.gamma) / 4)
    f, g = _smooth_fg(p.alpha, p.gamma, p.theta)
    s = _sign(p.theta)
    return SMatrixIngredients(t, tt, complex(s * f), complex(s * g))


def theta0_limit(gamma: float) -> np.ndarray:
    """Exact theta -> 0 gate: identity on |00>, |11>, a rotation on {|01>, |10>}."""
    c = 1 / math.cosh(gamma / 2)
    s = math.tanh(gamma / 2)
    return np.array(
        [[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=complex
    )


def build_smatrix(params) -> np.ndarray:
    """The 4x4 unitary S(alpha, gamma, theta) = f * M8v(t, t~) + g * Pi."""
    p = as_params(params)
    if p.theta == 0.0:
        return theta0_limit(p.gamma)
    t, tt, f, g = smatrix_ingredients(p)
    return f * _eight_vertex_part(t, tt) + g * GRADED_SWAP


def smatrix_smooth(alpha, gamma, theta) -> np.ndarray:
    """Gate without the sign(theta) factor; analytic in theta, accepts complex theta.

    Equals build_smatrix for theta >= 0 and -build_smatrix for theta < 0.
    """
    t = np.tanh((theta + gamma) / 4)
    tt = np.tanh((theta - gamma) / 4)
    f, g = _smooth_fg(alpha, gamma, theta)
    return f * _eight_vertex_part(t, tt) + g * GRADED_SWAP


def permutation_limit() -> np.ndarray:
    """alpha -> 0 limit: i times the graded permutation."""
    return 1j * GRADED_SWAP


def matchgate_decompose(gate, tol: float = 1e-12) -> MatchgateDecomposition:
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (4, 4):
        raise NotAMatchgateError(f"expected a 4x4 array, got shape {gate.shape}")
    off = max(abs(gate[i, j]) for i, j in _OFF_PATTERN)
    if off > tol:
        raise NotAMatchgateError(f"entry outside the matchgate pattern of size {off:.3g}")
    A = gate[np.ix_([0, 3], [0, 3])]
    B = gate[np.ix_([1, 2], [1, 2])]
    return MatchgateDecomposition(A, B, float(abs(np.linalg.det(A) - np.linalg.det(B))))


def build_boundary_k(theta: float) -> np.ndarray:
    pref = math.sqrt(2 / math.cosh(theta))
    return pref * np.diag(
        [np.cosh(theta / 2 - 1j * np.pi / 4), np.cosh(theta / 2 + 1j * np.pi / 4)]
    )


def single_site_supercharge(theta: float) -> np.ndarray:
    """Q~(theta) = e^{theta/2} sigma_x + e^{-theta/2} sigma_y."""
    return math.exp(theta / 2) * PAULI_X + math.exp(-theta / 2) * PAULI_Y


def exponent_coefficients(params) -> ExponentCoefficients:
    """(a11, a12, phi, b12) such that exp(i E) reproduces build_smatrix.

    The arccos arguments carry sign(theta); phi carries sign(theta) sign(gamma).
    For theta, gamma >= 0 these are the plain principal-branch closed forms.
    """
    p = as_params(params)
    a, ga, th = p.alpha, p.gamma, p.theta
    st, sg = _sign(th), _sign(ga)
    # arccos(x/D) written as atan2(sqrt(D^2 - x^2), x) with the difference
    # D^2 - x^2 simplified by hand, which keeps full precision near theta, gamma = 0
    sh_t = math.sinh(th)
    root = math.sqrt(2 * a * a + math.cosh(th) + 1)
    ac = math.atan2(
        math.sqrt(4 * a * a * math.sinh(th / 2) ** 2 + sh_t**2), st * 2 * a * math.cosh(ga / 2)
    )
    a11 = math.sqrt(2) * math.cosh(th / 2) / root * ac
    b12 = math.sqrt(2) * a / root * ac
    a12 = math.atan2(
        math.sqrt(4 * a * a * math.sinh(ga / 2) ** 2 + sh_t**2), st * 2 * a * math.cosh(th / 2)
    )
    # phi = 1/2 arccos((s - m)/(s + m)) with s = sinh^2 th, m = 4 a^2 sinh^2(ga/2)
    phi = st * sg * math.atan2(2 * a * abs(math.sinh(ga / 2)), abs(sh_t))
    return ExponentCoefficients(a11, a12, phi, b12)


def exponent_matrix(coeffs: ExponentCoefficients) -> np.ndarray:
    """E = a11/2 (Z1+Z2) + a12/2 [cos(phi)(XX+YY) - sin(phi)(XY-YX)] + b12/2 (XY+YX)."""
    a11, a12, phi, b12 = coeffs
    kr = np.kron
    X, Y, Z, I = PAULI_X, PAULI_Y, PAULI_Z, PAULI_I
    return (
        a11 / 2 * (kr(Z, I) + kr(I, Z))
        + a12 / 2 * np.cos(phi) * (kr(X, X) + kr(Y, Y))
        - a12 / 2 * np.sin(phi) * (kr(X, Y) - kr(Y, X))
        + b12 / 2 * (kr(X, Y) + kr(Y, X))
    )


def verify_gate_exponential(params) -> float:
    p = as_params(params)
    E = exponent_matrix(exponent_coefficients(p))
    return float(np.linalg.norm(expm(1j * E) - build_smatrix(p)))


def unitarity_residual(gate) -> float:
    gate = np.asarray(gate)
    return float(np.linalg.norm(gate.conj().T @ gate - np.eye(gate.shape[0])))

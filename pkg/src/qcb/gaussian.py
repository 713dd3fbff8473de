"""Gaussian continuous-variable states as covariance matrices.

Conventions (fixed package-wide): quadrature ordering (X1, P1, X2, P2, ...),
symplectic form sigma = direct sum of [[0, 1], [-1, 0]], hbar = 1 so the
vacuum covariance is identity/2.  The CV logarithmic negativity uses the
natural logarithm, E_N = max[0, -ln(2 d~_-)] (the qubit-side E_N in
:mod:`qcb.qstate` uses log base 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionError,
    DomainError,
    NonPhysicalCovarianceError,
    SingularCovarianceError,
)

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-10


def symplectic_form(n_modes: int) -> np.ndarray:
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k:2 * k + 2, 2 * k:2 * k + 2] = j
    return out


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix V (2n x 2n, symmetric, physical) and mean vector."""

    cov: np.ndarray
    mean: np.ndarray | None = None
    _n_modes: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.cov, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
            raise DimensionError(f"covariance must be 2n x 2n, got {v.shape}")
        if np.max(np.abs(v - v.T)) > SYMMETRY_TOL:
            raise DomainError("covariance matrix not symmetric within 1e-12")
        n = v.shape[0] // 2
        herm = v + 0.5j * symplectic_form(n)
        if np.linalg.eigvalsh(herm).min() < -PHYSICALITY_TOL:
            raise NonPhysicalCovarianceError("V + i sigma/2 has eigenvalue < -1e-10")
        mean = np.zeros(2 * n) if self.mean is None else np.asarray(self.mean, dtype=float)
        if mean.shape != (2 * n,):
            raise DimensionError(f"mean must have length {2 * n}")
        v.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "cov", v)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "_n_modes", n)

    @property
    def n_modes(self) -> int:
        return self._n_modes


def two_mode_blocks(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """2x2 blocks (A, B, C) of a two-mode covariance [[A, C], [C^T, B]]."""
    v = np.asarray(v, dtype=float)
    if v.shape != (4, 4):
        raise DimensionError(f"expected a 4x4 covariance, got {v.shape}")
    return v[:2, :2], v[2:, 2:], v[:2, 2:]


def _sympl_pair(sigma_inv: float, det_v: float) -> tuple[float, float]:
    disc = sigma_inv**2 - 4.0 * det_v
    if disc < -PHYSICALITY_TOL:
        raise NonPhysicalCovarianceError(
            f"Sigma^2 - 4 det V = {disc:.3e} < 0: input not a physical covariance")
    disc = max(disc, 0.0)
    d_plus = math.sqrt(max(sigma_inv + math.sqrt(disc), 0.0) / 2.0)
    # d_-^2 d_+^2 = det V: the product form avoids the cancellation in
    # Sigma - sqrt(Sigma^2 - 4 det V) at strong squeezing.
    if det_v > 0.0 and d_plus > 0.0:
        d_minus = math.sqrt(det_v) / d_plus
    else:
        d_minus = math.sqrt(max(sigma_inv - math.sqrt(disc), 0.0) / 2.0)
    return d_plus, d_minus


def symplectic_eigenvalues_two_mode(v: np.ndarray) -> tuple[float, float]:
    """(d_+, d_-) from the invariant formula 2 d^2 = Sigma -+ sqrt(Sigma^2 - 4 det V),
    Sigma = det A + det B + 2 det C.  For physical states d_- >= 1/2."""
    a, b, c = two_mode_blocks(v)
    sigma_inv = np.linalg.det(a) + np.linalg.det(b) + 2.0 * np.linalg.det(c)
    return _sympl_pair(float(sigma_inv), float(np.linalg.det(v)))


def ppt_tilde_dminus(v: np.ndarray) -> float:
    """Smallest symplectic eigenvalue after partial mirror reflection.

    Partial transposition of mode A flips the sign of det C only, so
    d~_- follows from the invariant formula with Sigma~ = det A + det B
    - 2 det C.  The state is entangled iff the result is below 1/2.
    """
    a, b, c = two_mode_blocks(v)
    sigma_tilde = np.linalg.det(a) + np.linalg.det(b) - 2.0 * np.linalg.det(c)
    return _sympl_pair(float(sigma_tilde), float(np.linalg.det(v)))[1]


def logneg_gaussian(v: np.ndarray) -> float:
    """Logarithmic negativity max[0, -ln(2 d~_-)] (natural log)."""
    return max(0.0, -math.log(2.0 * ppt_tilde_dminus(v)))


def simon_invariant_check(v: np.ndarray) -> bool:
    """Separability-consistency: det A + det B + 2|det C| <= 1/4 + 4 det V.

    For Gaussian states violation is equivalent to entanglement (and to
    d~_- < 1/2).
    """
    a, b, c = two_mode_blocks(v)
    lhs = np.linalg.det(a) + np.linalg.det(b) + 2.0 * abs(np.linalg.det(c))
    rhs = 0.25 + 4.0 * np.linalg.det(v)
    return bool(lhs <= rhs + 1e-12)


def thermal_cov(n_bars) -> GaussianState:
    """Product thermal state: V = diag(n_k + 1/2) per quadrature pair."""
    n_bars = np.atleast_1d(np.asarray(n_bars, dtype=float))
    if np.any(n_bars < 0):
        raise DomainError("thermal occupancies must be >= 0")
    diag = np.repeat(n_bars + 0.5, 2)
    return GaussianState(np.diag(diag))


def two_mode_squeezed_thermal_cov(r: float, theta: float = 0.0,
                                  n_bar: float = 0.0) -> GaussianState:
    """Two-mode squeezed thermal state, V = Omega(z) V(n_bar) Omega(z)^T.

    Block determinants: det V = (1+2n)^4/16, det A = det B =
    (1+2n)^2 cosh^2(2r)/4, det C = -(1+2n)^2 cosh^2 r sinh^2 r.
    E_N = max[0, 2r - ln(2 n_bar + 1)].
    """
    if r < 0:
        raise DomainError("squeezing parameter r must be >= 0")
    if n_bar < 0:
        raise DomainError("thermal occupancy must be >= 0")
    ch, sh = math.cosh(r), math.sinh(r)
    rot = np.array([[math.cos(theta), math.sin(theta)],
                    [math.sin(theta), -math.cos(theta)]])
    omega = np.block([[ch * np.eye(2), sh * rot], [sh * rot, ch * np.eye(2)]])
    v = (n_bar + 0.5) * (omega @ omega.T)
    return GaussianState(0.5 * (v + v.T))


def wigner_gaussian(state: GaussianState, point) -> float:
    """Wigner density at a phase-space point; normalized so the integral is 1."""
    point = np.asarray(point, dtype=float)
    if point.shape != state.mean.shape:
        raise DimensionError(f"point must have length {state.mean.shape[0]}")
    v = state.cov
    sign, logdet = np.linalg.slogdet(v)
    if sign <= 0 or np.linalg.cond(v) > 1e14:
        raise SingularCovarianceError("covariance matrix is singular")
    delta = point - state.mean
    quad = delta @ np.linalg.solve(v, delta)
    n = state.n_modes
    return math.exp(-0.5 * quad - 0.5 * logdet - n * math.log(2.0 * math.pi))


# ---------------------------------------------------------------------------
# Random physical covariance generation (tests, self-checks): V = S V_th S^T
# with S an explicit symplectic, so physicality holds by construction.
# ---------------------------------------------------------------------------


def _interleave_permutation(n: int) -> np.ndarray:
    """Permutation matrix sending (X1..Xn, P1..Pn) to (X1, P1, ..., Xn, Pn)."""
    p = np.zeros((2 * n, 2 * n))
    for k in range(n):
        p[2 * k, k] = 1.0
        p[2 * k + 1, n + k] = 1.0
    return p


def random_symplectic(n_modes: int, rng: np.random.Generator,
                      max_squeeze: float = 1.0) -> np.ndarray:
    """Random symplectic via Euler decomposition O1 diag(e^z, e^-z) O2."""
    from .qstate import random_unitary

    def ortho_sympl() -> np.ndarray:
        u = random_unitary(n_modes, rng)
        return np.block([[u.real, -u.imag], [u.imag, u.real]])

    z = rng.uniform(-max_squeeze, max_squeeze, size=n_modes)
    squeeze = np.diag(np.concatenate([np.exp(z), np.exp(-z)]))
    s_xxpp = ortho_sympl() @ squeeze @ ortho_sympl()
    perm = _interleave_permutation(n_modes)
    return perm @ s_xxpp @ perm.T


def random_physical_cov(n_modes: int, rng: np.random.Generator,
                        max_squeeze: float = 1.0, max_thermal: float = 2.0) -> GaussianState:
    s = random_symplectic(n_modes, rng, max_squeeze)
    n_bars = rng.uniform(0.0, max_thermal, size=n_modes)
    v = s @ thermal_cov(n_bars).cov @ s.T
    return GaussianState(0.5 * (v + v.T))

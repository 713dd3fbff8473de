"""Exact unitary cavity-mirror model: density-matrix elements, subspace
projection, entanglement markers and closed-form linear entropies.

The cavity mode (Fock index n, m) couples to a mirror mode (Fock index mu, nu)
through radiation pressure, H = w_c a'a + b'b - k a'a (b + b'), in units of the
mirror frequency.  Starting from |alpha><alpha| (x) thermal(n_bar), the evolved
matrix elements have an exact closed form: writing eta(t) = 1 - exp(-i t),
x = n_bar/(n_bar+1),

    rho_{mu nu n m}(t) = Theta_nm e^{-i(phi_n - phi_m)} / ((n_bar+1) sqrt(mu! nu!))
                         * exp[k^2|eta|^2 (x n m - (n^2+m^2)/2)]
                         * [d^mu/da^mu d^nu/db^nu exp(x a b + a P + b Q)]_(a=b=0)

with P = k eta(t) (n - x m), Q = k eta(-t) (m - x n), Theta the coherent-state
weights and phi_n = n w_c t - k^2 n^2 (t - sin t).  The derivative is evaluated
exactly by a finite Leibniz sum over the two affine factors, never by numeric
differentiation.  This form matches brute-force expm evolution to machine
precision at any temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import poisson

from .exceptions import (
    DomainError,
    EmptySubspaceError,
    PurityError,
    TruncationError,
    UndefinedMutualInfoError,
)
from .qstate import DensityMatrix

# Marker values below this are treated as "not witnessing entanglement".
MARKER_TOL = 1e-14


@dataclass(frozen=True)
class OptoUnitaryParams:
    """Dimensionless model parameters (time in units of 1/omega_m).

    k is the scaled coupling g/omega_m, alpha the initial cavity amplitude,
    n_bar the mirror thermal occupancy.  omega_c enters only pure phases and
    cancels in every modulus-based quantity; kept for completeness.
    """

    k: float
    alpha: complex
    n_bar: float
    t: float
    omega_c: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise DomainError("coupling k must be >= 0")
        if self.n_bar < 0:
            raise DomainError("thermal occupancy n_bar must be >= 0")

    @property
    def x(self) -> float:
        return self.n_bar / (self.n_bar + 1.0)


@dataclass(frozen=True)
class SubspaceSelector:
    """Fock levels retained on each side; strictly increasing, non-empty."""

    cavity_levels: tuple[int, ...]
    mirror_levels: tuple[int, ...]

    def __post_init__(self):
        for name, levels in (("cavity", self.cavity_levels), ("mirror", self.mirror_levels)):
            if len(levels) == 0:
                raise DomainError(f"{name} level list is empty")
            if any(l < 0 for l in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
                raise DomainError(f"{name} levels must be distinct, non-negative, increasing")
        object.__setattr__(self, "cavity_levels", tuple(int(l) for l in self.cavity_levels))
        object.__setattr__(self, "mirror_levels", tuple(int(l) for l in self.mirror_levels))


def eta(t: float) -> complex:
    return 1.0 - np.exp(-1j * t)


def kerr_phase_integral(t: float) -> float:
    return t - math.sin(t)


def _free_phase(p: OptoUnitaryParams, n: int) -> float:
    return n * p.omega_c * p.t - p.k**2 * n**2 * kerr_phase_integral(p.t)


def _poisson_log_weight(alpha_abs2: float, n: int) -> float:
    if alpha_abs2 == 0.0:
        return 0.0 if n == 0 else -math.inf
    return n * math.log(alpha_abs2) - alpha_abs2 - math.lgamma(n + 1)


def rho_element(p: OptoUnitaryParams, n: int, m: int, mu: int, nu: int) -> complex:
    """Exact matrix element <n, mu| rho(t) |m, nu> of the evolved state."""
    if min(n, m, mu, nu) < 0:
        raise DomainError("Fock indices must be non-negative")
    x = p.x
    et = eta(p.t)
    abs_eta2 = abs(et) ** 2
    k = p.k
    a2 = abs(p.alpha) ** 2

    # coherent-state weights and pure phases, in log space for large indices
    if a2 == 0.0 and n + m > 0:
        return 0.0
    log_mag = 0.5 * (_poisson_log_weight(a2, n) + _poisson_log_weight(a2, m))
    log_mag += k**2 * abs_eta2 * (x * n * m - 0.5 * (n**2 + m**2))
    log_mag -= math.log1p(p.n_bar)
    log_mag += 0.5 * (math.lgamma(mu + 1) + math.lgamma(nu + 1))
    phase = (n - m) * np.angle(p.alpha) - (_free_phase(p, n) - _free_phase(p, m))

    big_p = k * et * (n - x * m)
    big_q = k * np.conj(et) * (m - x * n)

    # Leibniz sum over the two affine factors, term-wise in log magnitude to
    # stay finite for mirror indices of a few hundred.
    logs, phases = [], []
    for j in range(min(mu, nu) + 1):
        lm = log_mag - math.lgamma(j + 1) - math.lgamma(mu - j + 1) - math.lgamma(nu - j + 1)
        ph = phase
        if j > 0:
            if x == 0.0:
                continue
            lm += j * math.log(x)
        if mu - j > 0:
            if big_p == 0.0:
                continue
            lm += (mu - j) * math.log(abs(big_p))
            ph += (mu - j) * np.angle(big_p)
        if nu - j > 0:
            if big_q == 0.0:
                continue
            lm += (nu - j) * math.log(abs(big_q))
            ph += (nu - j) * np.angle(big_q)
        logs.append(lm)
        phases.append(ph)
    if not logs:
        return 0.0
    logs = np.asarray(logs)
    top = logs.max()
    if top == -math.inf:
        return 0.0
    acc = complex(np.sum(np.exp(logs - top) * np.exp(1j * np.asarray(phases))))
    return math.exp(top) * acc if top < 700.0 else complex(np.exp(top)) * acc


def projected_density(p: OptoUnitaryParams, sel: SubspaceSelector, normalize: bool = True):
    """Project rho(t) onto the selected Fock subspace, cavity as slow index.

    With ``normalize`` the result is returned as a :class:`DensityMatrix`
    (split = (n_cavity_levels, n_mirror_levels)); otherwise the raw projected
    block P rho P is returned as an ndarray (its trace is <= 1).
    """
    cav, mir = sel.cavity_levels, sel.mirror_levels
    dc, dm = len(cav), len(mir)
    out = np.empty((dc * dm, dc * dm), dtype=complex)
    for i, n in enumerate(cav):
        for a, mu in enumerate(mir):
            for j, m in enumerate(cav):
                for b, nu in enumerate(mir):
                    out[i * dm + a, j * dm + b] = rho_element(p, n, m, mu, nu)
    out = 0.5 * (out + out.conj().T)
    if not normalize:
        return out
    tr = float(np.trace(out).real)
    if tr < 1e-150:
        raise EmptySubspaceError(f"projection carries numerically zero weight (trace={tr:.3e})")
    return DensityMatrix(out / tr, split=(dc, dm))


def marker_upsilon(p: OptoUnitaryParams, sel: SubspaceSelector) -> float:
    """Entanglement marker -det[(PT_cavity) P rho P] on the raw projection.

    Positive values witness entanglement of the full state (the partial
    transpose has at most one negative eigenvalue in the studied subspaces).
    Computed on the unnormalized projection so the subspace rescaling identity
    is exact; the sign is unaffected by normalization.
    """
    raw = projected_density(p, sel, normalize=False)
    dc, dm = len(sel.cavity_levels), len(sel.mirror_levels)
    pt = np.transpose(raw.reshape(dc, dm, dc, dm), (2, 1, 0, 3)).reshape(dc * dm, dc * dm)
    det = np.linalg.det(pt)
    return float(-det.real)


def marker_witnesses_entanglement(value: float) -> bool:
    return value > MARKER_TOL


def renormalization_check(p: OptoUnitaryParams, s: int,
                          mirror_levels: tuple[int, ...] = (0, 1)) -> tuple[float, float]:
    """Both sides of the subspace rescaling identity; they agree exactly.

    Photon-number conservation ties the marker of the cavity subspace [0, s]
    at coupling k/s to the marker of [0, 1] at coupling k.  The scale factor
    s! |alpha|^(-2s) (vs |alpha|^(-2)) applies once per retained mirror level,
    i.e. the identity reads

        (s! |alpha|^(-2s))^d  Upsilon_[0,s](k/s) = |alpha|^(-2d) Upsilon_[0,1](k)

    with d = len(mirror_levels).  Returns (lhs, rhs).
    """
    if s < 1:
        raise DomainError("s must be a positive integer")
    d = len(mirror_levels)
    a2 = abs(p.alpha) ** 2
    ups_s = marker_upsilon(replace(p, k=p.k / s),
                           SubspaceSelector((0, s), tuple(mirror_levels)))
    ups_1 = marker_upsilon(p, SubspaceSelector((0, 1), tuple(mirror_levels)))
    lhs = (math.factorial(s) * a2 ** (-s)) ** d * ups_s
    rhs = a2 ** (-d) * ups_1
    return lhs, rhs


def subspace_tangle_t0(p: OptoUnitaryParams) -> float:
    """Closed-form tangle of the [0,1;0,1] projection at t = pi, n_bar = 0.

    tau = 16 k^2 |alpha|^2 e^(4k^2) / (e^(4k^2) + (1 + 4k^2)|alpha|^2)^2.
    """
    if p.n_bar > 1e-12:
        raise PurityError("closed-form tangle is a pure-state (n_bar = 0) quantity")
    k2 = p.k**2
    a2 = abs(p.alpha) ** 2
    e4 = math.exp(4.0 * k2)
    return 16.0 * k2 * a2 * e4 / (e4 + (1.0 + 4.0 * k2) * a2) ** 2


# ---------------------------------------------------------------------------
# Closed-form linear entropies and normalized mutual information.
# ---------------------------------------------------------------------------


def default_fock_cutoff(alpha: complex) -> int:
    a2 = abs(alpha) ** 2
    return math.ceil(a2 + 10.0 * math.sqrt(a2 + 1.0))


def _poisson_weights(alpha: complex, cutoff: int) -> np.ndarray:
    a2 = abs(alpha) ** 2
    n = np.arange(cutoff + 1)
    if a2 == 0.0:
        w = np.zeros(cutoff + 1)
        w[0] = 1.0
        return w
    from scipy.special import gammaln
    return np.exp(n * math.log(a2) - a2 - gammaln(n + 1))


def _check_cutoff(alpha: complex, cutoff: int) -> None:
    tail = float(poisson.sf(cutoff, abs(alpha) ** 2))
    if tail >= 1e-12:
        raise TruncationError(
            f"Poisson tail beyond cutoff {cutoff} is {tail:.2e} >= 1e-12")


def linear_entropies_closed(p: OptoUnitaryParams, cutoff: int | None = None
                            ) -> tuple[float, float, float]:
    """(S_total, S_cavity, S_mirror) linear entropies, S := 1 - Tr rho^2.

    S_total = 1 - 1/(2 n_bar + 1) is time independent (unitary evolution).
    The partial purities are double Poisson sums with Gaussian dephasing
    factors exp(-|k eta|^2 (p-q)^2 c), c = 1 + 2 n_bar for the cavity and
    c = 1/(1 + 2 n_bar) for the mirror (which also carries the thermal purity
    prefactor 1/(1 + 2 n_bar)).
    """
    if cutoff is None:
        cutoff = default_fock_cutoff(p.alpha)
    _check_cutoff(p.alpha, cutoff)
    s_cav, s_mir = _partial_entropies_vec(p, np.array([p.t]), cutoff)
    s_total = 1.0 - 1.0 / (2.0 * p.n_bar + 1.0)
    return s_total, float(s_cav[0]), float(s_mir[0])


def _partial_entropies_vec(p: OptoUnitaryParams, t: np.ndarray, cutoff: int
                           ) -> tuple[np.ndarray, np.ndarray]:
    w = _poisson_weights(p.alpha, cutoff)
    idx = np.arange(cutoff + 1)
    d2 = (idx[:, None] - idx[None, :]) ** 2
    ww = w[:, None] * w[None, :]
    y2 = (p.k**2) * np.abs(eta(t)) ** 2  # |k eta(t)|^2, shape of t
    c_cav = 1.0 + 2.0 * p.n_bar
    c_mir = 1.0 / (1.0 + 2.0 * p.n_bar)
    s_cav = 1.0 - np.einsum("pq,tpq->t", ww, np.exp(-np.multiply.outer(y2 * c_cav, d2)))
    s_mir = 1.0 - c_mir * np.einsum("pq,tpq->t", ww, np.exp(-np.multiply.outer(y2 * c_mir, d2)))
    return s_cav, s_mir


def normalized_mi_time(p: OptoUnitaryParams, cutoff: int | None = None) -> float:
    """Normalized linear mutual information 1 - S_total/(S_cav + S_mir).

    Values above 1/2 witness quantum correlations (classical bound).
    """
    s_total, s_cav, s_mir = linear_entropies_closed(p, cutoff)
    denom = s_cav + s_mir
    if denom <= 1e-12:
        raise UndefinedMutualInfoError("S_cav + S_mir vanishes; normalized MI undefined")
    return 1.0 - s_total / denom


def averaged_mi(p: OptoUnitaryParams, n_steps: int = 256,
                cutoff: int | None = None) -> float:
    """Normalized MI averaged over one mirror period by composite trapezoid.

    Convergence is asserted by doubling the grid; the doubled value is
    returned.  Requires n_bar > 0 (at n_bar = 0 the t -> 0 limit is singular).
    """
    if n_steps < 64:
        raise DomainError("n_steps must be >= 64")
    if p.n_bar <= 0.0:
        raise UndefinedMutualInfoError("averaged MI undefined at n_bar = 0 (t = 0 endpoint)")
    if cutoff is None:
        cutoff = default_fock_cutoff(p.alpha)
    _check_cutoff(p.alpha, cutoff)
    s_total = 1.0 - 1.0 / (2.0 * p.n_bar + 1.0)

    def average(steps: int) -> float:
        t = np.linspace(0.0, 2.0 * math.pi, steps + 1)
        s_cav, s_mir = _partial_entropies_vec(p, t, cutoff)
        mi = np.empty_like(t)
        denom = s_cav + s_mir
        ok = denom > 1e-12
        mi[ok] = 1.0 - s_total / denom[ok]
        mi[~ok] = 0.0  # t = 0 (mod 2 pi): product state, MI -> 0
        return float(np.trapezoid(mi, t) / (2.0 * math.pi))

    coarse, fine = average(n_steps), average(2 * n_steps)
    if abs(fine - coarse) > 5e-4 * max(1.0, abs(fine)):
        raise TruncationError(
            f"trapezoid average not converged: {coarse} vs {fine} at n_steps={n_steps}")
    return fine

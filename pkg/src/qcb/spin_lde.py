"""Spin-bus long-distance entanglement: bus susceptibilities, the effective
probe coupling, and the three-parameter canonical model of the probe pair at
all temperatures.

Probe operators are Pauli matrices (correlator <tau_a . tau_b> in [-3, 1]);
bath spins are spin-1/2.  Ring susceptibilities are quoted in units of the
non-universal bosonization amplitude over the Fermi velocity (both set to 1),
and the ring formula is asymptotic in the probe separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from .exceptions import DomainError, FitError, QcbError
from .qstate import DensityMatrix, PAULI_DOT, concurrence_from_correlator

AKLT_GAP = 10.0 / 27.0           # single-mode-approximation gap at q = pi
AKLT_XI = 1.0 / math.log(3.0)    # correlation length


@dataclass(frozen=True)
class RingGeometry:
    """Heisenberg ring of L sites with probes attached r sites apart."""

    L: int
    r: int

    def __post_init__(self):
        if not 0 < self.r < self.L:
            raise DomainError("need 0 < r < L")

    @property
    def x(self) -> float:
        return 2.0 * math.pi * self.r / self.L


@dataclass(frozen=True)
class CanonicalParams:
    """(gap, delocalization rate, correlator offset) of the probe pair.

    The zero-temperature correlator is -3 + eta + 3 Phi, which bounds
    0 <= eta + 3 Phi <= 4.
    """

    J_can: float
    Phi: float
    eta: float

    def __post_init__(self):
        s = self.eta + 3.0 * self.Phi
        if not -1e-9 <= s <= 4.0 + 1e-9:
            raise DomainError(f"eta + 3 Phi = {s} outside [0, 4]")


def chi_ring(geom: RingGeometry) -> float:
    """Zero-frequency probe-probe response of the Heisenberg ring.

    C * integral_x^pi (tau/pi - 1)/sqrt(cos x - cos tau) dtau with
    C = (-1)^r / sqrt(2) and x = 2 pi r / L; positive (favoring a probe
    singlet) for odd separations.  The inverse-square-root endpoint
    singularity is removed by tau = x + u^2 before adaptive quadrature.
    """
    x = geom.x
    if x > math.pi:
        x = 2.0 * math.pi - x  # ring symmetry r -> L - r
    if not 0.0 < x <= math.pi:
        raise DomainError(f"2 pi r / L = {x} outside (0, pi]")
    if math.pi - x < 1e-15:
        return 0.0
    val, err = _ring_integral(x)
    if err > 1e-8 * max(1.0, abs(val)):
        raise QcbError(f"ring susceptibility quadrature error estimate {err:.2e}")
    sign = -1.0 if geom.r % 2 else 1.0
    return sign / math.sqrt(2.0) * val


def _ring_integral(x: float) -> tuple[float, float]:
    """integral_x^pi (tau/pi - 1)/sqrt(cos x - cos tau) dtau with error estimate.

    The endpoint singularity is removed by tau = x + u^2.  At small x the
    integrand develops a second, logarithmic scale (tau - x ~ x), handled by
    the substitution tau = x cosh v on [x, tau_split] which equidistributes it.
    """

    def h(tau: float) -> float:
        return tau / math.pi - 1.0

    def gap(diff: float) -> float:
        # cos x - cos tau = 2 sin((tau+x)/2) sin((tau-x)/2), diff = tau - x;
        # the product form avoids cancellation for diff << x
        return 2.0 * math.sin(x + 0.5 * diff) * math.sin(0.5 * diff)

    if x >= 0.3:
        def f_sqrt(u: float) -> float:
            if u == 0.0:
                return 2.0 * h(x) / math.sqrt(math.sin(x))
            return 2.0 * u * h(x + u * u) / math.sqrt(gap(u * u))

        return quad(f_sqrt, 0.0, math.sqrt(math.pi - x),
                    epsabs=1e-11, epsrel=1e-11, limit=300)[:2]

    tau_split = 0.3

    def f_log(v: float) -> float:
        if v == 0.0:
            return h(x) * math.sqrt(2.0 * x / math.sin(x))
        diff = 2.0 * x * math.sinh(0.5 * v) ** 2  # x (cosh v - 1), stably
        return h(x + diff) * x * math.sinh(v) / math.sqrt(gap(diff))

    v_max = math.acosh(tau_split / x)
    i1, e1 = quad(f_log, 0.0, v_max, epsabs=1e-11, epsrel=1e-11, limit=300)[:2]

    def f_plain(tau: float) -> float:
        return h(tau) / math.sqrt(gap(tau - x))

    i2, e2 = quad(f_plain, tau_split, math.pi, epsabs=1e-11, epsrel=1e-11, limit=300)[:2]
    return i1 + i2, e1 + e2


def chi_aklt(r: int, method: str = "closed") -> float:
    """Probe-probe response of the biquadratic spin-1 chain at separation r.

    closed: (1/gap) (-1)^(r+1) (1 + 4r/3) exp(-r/xi);
    numeric: single-mode-approximation integral over the magnon band
    w_q = 5(5 + 3 cos q)/27 with weights a = -2/3, b = 80/81.
    """
    if r < 1:
        raise DomainError("separation r must be >= 1")
    if method == "closed":
        return (1.0 / AKLT_GAP) * (-1.0) ** (r + 1) * (1.0 + 4.0 * r / 3.0) \
            * math.exp(-r / AKLT_XI)
    if method == "numeric":
        a, b = -2.0 / 3.0, 80.0 / 81.0

        def integrand(q: float) -> float:
            w = 5.0 * (5.0 + 3.0 * math.cos(q)) / 27.0
            return math.cos(q * r) / w * (a + b / w) / (2.0 * math.pi)

        val, _ = quad(integrand, -math.pi, math.pi, epsabs=1e-12, epsrel=1e-12,
                      limit=400)
        # overall -2: the structure-factor convolution carries a factor 2 and
        # the sign convention is fixed so positive chi favors the singlet
        return -2.0 * val
    raise DomainError(f"unknown method {method!r}")


def effective_coupling(j_probe: float, chi: float) -> float:
    """Second-order probe-probe exchange J_eff = J_p^2 chi."""
    return j_probe**2 * chi


def probe_state_thermal(j_ab: float, beta: float) -> DensityMatrix:
    """Two-qubit Gibbs state rho ~ exp(-beta J_ab tau_a . tau_b).

    Singlet weight exp(3 beta J_ab) against three triplet weights
    exp(-beta J_ab); concurrence vanishes exactly at beta J_ab = ln(3)/4.
    """
    x = beta * j_ab
    # Boltzmann weights with the larger one factored out (no overflow)
    w_t = math.exp(-4.0 * x) if x >= 0 else 1.0
    w_s = 1.0 if x >= 0 else math.exp(4.0 * x)
    z = w_s + 3.0 * w_t
    # projectors from tau.tau eigenvalues: singlet -3, triplet +1
    p_s = (np.eye(4) - PAULI_DOT.real) / 4.0
    p_t = np.eye(4) - p_s
    rho = (w_s / z) * p_s + (w_t / z) * p_t
    return DensityMatrix(rho, split=(2, 2))


def canonical_correlator(j_can: float, beta: float) -> float:
    """<tau_a . tau_b> of the canonical Gibbs pair with gap J_can."""
    x = beta * j_can
    if x >= 0:
        u = math.exp(-x)
        return (u - 1.0) / (u + 1.0 / 3.0)
    v = math.exp(x)  # divide through by e^(-x) to stay finite
    return (1.0 - v) / (1.0 + v / 3.0)


def correlator_of_beta(cp: CanonicalParams, beta: float) -> float:
    """Temperature-dependent probe correlator eta + (1 - Phi) <tau.tau>_can."""
    return cp.eta + (1.0 - cp.Phi) * canonical_correlator(cp.J_can, beta)


def jab_of_beta(cp: CanonicalParams, beta: float) -> float:
    """Actual effective coupling J_ab(beta) of the canonical three-parameter model.

    J_ab(beta) = (1/4 beta) ln[(3(Phi - eta) + (4 - 3 Phi - eta) e^(b J)) /
    (4 - Phi + eta + (Phi + eta/3) e^(b J))]; consistent with the correlator
    through the Gibbs relation <tau.tau> = (e^(-4 b J_ab) - 1)/(e^(-4 b J_ab) + 1/3).
    """
    if beta <= 0:
        raise DomainError("beta must be > 0")
    bj = beta * cp.J_can
    a_num, b_num = 3.0 * (cp.Phi - cp.eta), 4.0 - 3.0 * cp.Phi - cp.eta
    a_den, b_den = 4.0 - cp.Phi + cp.eta, cp.Phi + cp.eta / 3.0

    def log_lin_exp(a: float, b: float) -> float:
        # log(a + b e^bj), stable for large bj (b >= 0 there by the constraint)
        if bj > 50.0:
            if b <= 0.0:
                raise DomainError("canonical parameterization leaves log argument <= 0")
            return bj + math.log(b + a * math.exp(-bj))
        arg = a + b * math.exp(bj)
        if arg <= 0.0:
            raise DomainError("canonical parameterization leaves log argument <= 0")
        return math.log(arg)

    return (log_lin_exp(a_num, b_num) - log_lin_exp(a_den, b_den)) / (4.0 * beta)


def correlator_from_jab(j_ab: float, beta: float) -> float:
    """Gibbs correlator of a probe pair with coupling J_ab at inverse temperature beta."""
    return canonical_correlator(4.0 * j_ab, beta)


@dataclass(frozen=True)
class CriticalTemperature:
    """Exact separability temperature and the closed high-T estimate."""

    kT_exact: float | None
    kT_estimate: float
    never_entangled: bool


def critical_temperature(cp: CanonicalParams) -> CriticalTemperature:
    """Temperature at which the probe concurrence vanishes.

    Bisection on beta for correlator = -1 (the exact separability point),
    refined to relative 1e-10; also reports the saturation estimate
    0.93 J_can (1 - Phi) for comparison.  If the T = 0 correlator never
    drops below -1 the pair is never entangled.
    """
    if cp.J_can <= 0:
        raise DomainError("critical temperature defined for J_can > 0")
    estimate = 0.93 * cp.J_can * (1.0 - cp.Phi)
    c_zero_t = -3.0 + cp.eta + 3.0 * cp.Phi
    if c_zero_t >= -1.0:
        return CriticalTemperature(None, estimate, True)

    def f(beta: float) -> float:
        return correlator_of_beta(cp, beta) + 1.0

    lo = 1e-6 / cp.J_can
    hi = 1e6 / cp.J_can
    if f(lo) <= 0.0 or f(hi) >= 0.0:  # widen until bracketed
        while f(lo) <= 0.0:
            lo *= 0.5
        while f(hi) >= 0.0:
            hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    beta_star = 0.5 * (lo + hi)
    return CriticalTemperature(1.0 / beta_star, estimate, False)


@dataclass(frozen=True)
class FitResult:
    params: CanonicalParams
    rms_residual: float
    n_evaluations: int


def fit_canonical_params(samples, kind: str = "correlator") -> FitResult:
    """Least-squares fit of (J_can, Phi, eta) to (beta, value) samples.

    ``kind`` selects whether values are probe correlators or effective
    couplings J_ab (mapped to correlators before fitting).  The constraint
    0 <= eta + 3 Phi <= 4 is enforced through the box-bounded
    parameterization (J_can, s = eta + 3 Phi, Phi); initialization uses the
    high-temperature saturation of J_ab and the low-temperature plateau of
    beta J_ab.
    """
    pts = [(float(b), float(v)) for b, v in samples]
    if len(pts) < 4:
        raise FitError("need at least 4 temperature points")
    betas = np.array([b for b, _ in pts])
    if kind == "correlator":
        corrs = np.array([v for _, v in pts])
    elif kind == "jab":
        corrs = np.array([correlator_from_jab(v, b) for b, v in pts])
    else:
        raise DomainError(f"unknown sample kind {kind!r}")
    order = np.argsort(betas)
    betas, corrs = betas[order], corrs[order]

    # initial guesses from the two ends of the temperature range
    j_ab = np.array([-0.25 / b * math.log(max((1.0 + c) / max(1.0 - c / 3.0, 1e-12), 1e-300))
                     for b, c in zip(betas, corrs)])
    j_sat = max(j_ab[0], 1e-12)                     # high T (smallest beta)
    bj_plateau = max(betas[-1] * j_ab[-1], 1e-6)    # low T (largest beta)
    phi0 = min(max(4.0 / (3.0 + math.exp(4.0 * bj_plateau)), 1e-9), 1.2)
    j0 = 4.0 * j_sat / max(1.0 - phi0, 1e-6)

    def unpack(p):
        j_can, s, phi = p
        return CanonicalParams(j_can, phi, s - 3.0 * phi)

    def residuals(p):
        cp = unpack(p)
        return np.array([correlator_of_beta(cp, b) for b in betas]) - corrs

    x0 = np.array([j0, 3.0 * phi0, phi0])
    lower = np.array([1e-300, 0.0, 0.0])
    upper = np.array([np.inf, 4.0, 4.0 / 3.0])
    x0 = np.clip(x0, lower + 1e-12, np.where(np.isfinite(upper), upper - 1e-12, x0))
    res = least_squares(residuals, x0, bounds=(lower, upper), xtol=1e-15,
                        ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if not res.success and np.sqrt(np.mean(res.fun**2)) > 1e-6:
        raise FitError(f"canonical fit did not converge: {res.message}")
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return FitResult(unpack(res.x), rms, int(res.nfev))


def probe_entanglement(cp: CanonicalParams, beta: float) -> float:
    """Concurrence of the canonical probe pair at inverse temperature beta."""
    return concurrence_from_correlator(correlator_of_beta(cp, beta))

"""Driven-cavity steady state: semiclassical amplitudes, linearized drift and
diffusion, Routh-Hurwitz stability, Lyapunov covariance, and the stationary
entanglement / effective-occupancy figures of merit.

Fluctuation basis is (dq, dp, dX, dY): mirror position/momentum followed by
the cavity quadratures, matching the quadrature conventions of
:mod:`qcb.gaussian` so the steady covariance can be fed straight into the CV
log-negativity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as _c_light
from scipy.constants import hbar as _hbar
from scipy.constants import k as _k_boltzmann

from .exceptions import DegenerateSystemError, DomainError, StabilityError
from .gaussian import logneg_gaussian


@dataclass(frozen=True)
class StationaryParams:
    """Rates in rad/s: mirror frequency/damping, cavity decay, bare detuning,
    single-photon coupling g, drive amplitude E, mirror thermal occupancy."""

    omega_m: float
    gamma_m: float
    kappa: float
    Delta0: float
    g: float
    drive_E: float
    n_bar: float

    def __post_init__(self):
        for name in ("omega_m", "gamma_m", "kappa"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")
        if self.n_bar < 0:
            raise DomainError("n_bar must be >= 0")


@dataclass(frozen=True)
class SteadyState:
    """Semiclassical working point; alpha_s phase-fixed real and >= 0."""

    alpha_s: float
    q_s: float
    p_s: float
    Delta_eff: float
    G: float
    stable: bool


def thermal_occupancy(omega_m: float, temperature: float) -> float:
    if temperature <= 0.0:
        return 0.0
    x = _hbar * omega_m / (_k_boltzmann * temperature)
    return 0.0 if x > 700.0 else 1.0 / math.expm1(x)


def derive_physical_params(length: float, mass: float, power: float,
                           quality: float, temperature: float,
                           wavelength: float | None = None,
                           omega_c: float | None = None,
                           finesse: float | None = None,
                           kappa: float | None = None,
                           omega_m: float = 2 * math.pi * 1e7,
                           Delta0: float = 0.0) -> StationaryParams:
    """Build :class:`StationaryParams` from laboratory quantities.

    g = (omega_c/L) sqrt(hbar/(m omega_m)); |E| = sqrt(2 P kappa / hbar w0);
    kappa defaults to the cavity linewidth pi c/(L F); the finesse-to-kappa
    convention is ambiguous in the literature, so kappa can be pinned
    directly via ``kappa``.  The default reproduces the reference working
    point (amplitude decay 8.8e7 s^-1 for L = 1 mm, F = 1.07e4, and
    n_eff ~ 0.75 at Delta = 2 omega_m).
    """
    if min(length, mass, power, quality) <= 0:
        raise DomainError("physical inputs must be positive")
    if omega_c is None:
        if wavelength is None:
            raise DomainError("provide wavelength or omega_c")
        omega_c = 2.0 * math.pi * _c_light / wavelength
    if kappa is None:
        if finesse is None:
            raise DomainError("provide finesse or kappa")
        kappa = math.pi * _c_light / (length * finesse)
    free_spectral_range = math.pi * _c_light / length
    if omega_m / free_spectral_range > 0.01:
        warnings.warn("adiabatic condition omega_m << pi c / L is marginal",
                      stacklevel=2)
    g = (omega_c / length) * math.sqrt(_hbar / (mass * omega_m))
    drive = math.sqrt(2.0 * power * kappa / (_hbar * omega_c))
    n_bar = thermal_occupancy(omega_m, temperature)
    return StationaryParams(omega_m=omega_m, gamma_m=omega_m / quality,
                            kappa=kappa, Delta0=Delta0, g=g, drive_E=drive,
                            n_bar=n_bar)


def _branch(p: StationaryParams, u: float) -> SteadyState:
    delta = p.Delta0 - p.g**2 * u / p.omega_m
    alpha_s = math.sqrt(u)
    big_g = p.g * alpha_s * math.sqrt(2.0)
    st = SteadyState(alpha_s=alpha_s, q_s=p.g * u / p.omega_m, p_s=0.0,
                     Delta_eff=delta, G=big_g, stable=False)
    ok, _, _ = stability_check(p, st)
    return replace(st, stable=ok)


def steady_state(p: StationaryParams) -> list[SteadyState]:
    """All steady-state branches of the intra-cavity intensity cubic.

    Solves u [kappa^2 + (Delta0 - g^2 u / omega_m)^2] = E^2 for u = |alpha_s|^2
    and reports every real positive root in ascending order (three in the
    bistable regime).  The cubic is solved on omega_m-normalized variables and
    each root is polished with one Newton step.
    """
    if p.drive_E == 0.0:
        return [_branch(p, 0.0)]
    # normalize rates by omega_m to condition the cubic
    k, d0, g2 = p.kappa / p.omega_m, p.Delta0 / p.omega_m, (p.g / p.omega_m) ** 2
    e2 = (p.drive_E / p.omega_m) ** 2
    if p.g == 0.0:
        roots = [e2 / (k**2 + d0**2)]
    else:
        coeffs = [g2**2, -2.0 * d0 * g2, k**2 + d0**2, -e2]
        rts = np.roots(coeffs)
        roots = sorted(r.real for r in rts
                       if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real > 0.0)
        if not roots:
            raise DegenerateSystemError("no positive steady-state root found")

        def f(u):
            return u * (k**2 + (d0 - g2 * u) ** 2) - e2

        def fp(u):
            return k**2 + (d0 - g2 * u) ** 2 - 2.0 * g2 * u * (d0 - g2 * u)

        polished = []
        for u in roots:
            df = fp(u)
            if df != 0.0:
                step = f(u) / df
                if abs(step) < 0.5 * abs(u):  # damped: keep within the basin
                    u = u - step
            polished.append(u)
        roots = polished
    return [_branch(p, float(u)) for u in roots]


def steady_state_at_detuning(p: StationaryParams, delta: float) -> SteadyState:
    """Working point at a prescribed effective detuning (figure sweeps).

    With Delta given, the intra-cavity amplitude is simply
    |alpha_s| = E / sqrt(kappa^2 + Delta^2); the cubic self-consistency is
    bypassed because Delta already includes the static spring shift.
    """
    alpha_s = p.drive_E / math.sqrt(p.kappa**2 + delta**2)
    st = SteadyState(alpha_s=alpha_s, q_s=p.g * alpha_s**2 / p.omega_m, p_s=0.0,
                     Delta_eff=delta, G=p.g * alpha_s * math.sqrt(2.0), stable=False)
    ok, _, _ = stability_check(p, st)
    return replace(st, stable=ok)


def drift_and_diffusion(p: StationaryParams, s: SteadyState
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Linearized drift matrix A and Markovian diffusion matrix D.

    D = diag(0, gamma_m (2 n_bar + 1), kappa, kappa); the optical bath
    occupancy is taken as zero (optical photons at lab temperature).
    """
    w, gm, k = p.omega_m, p.gamma_m, p.kappa
    d, big_g = s.Delta_eff, s.G
    a = np.array([
        [0.0, w, 0.0, 0.0],
        [-w, -gm, big_g, 0.0],
        [0.0, 0.0, -k, d],
        [big_g, 0.0, -d, -k],
    ])
    diff = np.diag([0.0, gm * (2.0 * p.n_bar + 1.0), k, k])
    return a, diff


def stability_check(p: StationaryParams, s: SteadyState
                    ) -> tuple[bool, float, float]:
    """Routh-Hurwitz conditions (S1 > 0 and S2 > 0) for the drift matrix.

    Evaluated on omega_m-normalized rates; agrees with max Re eig(A) < 0.
    """
    w = p.omega_m
    gm, k = p.gamma_m / w, p.kappa / w
    d, big_g = s.Delta_eff / w, s.G / w
    s1 = 2.0 * gm * k * (d**4 + d**2 * (gm**2 + 2.0 * gm * k + 2.0 * k**2 - 2.0)
                         + (gm * k + k**2 + 1.0) ** 2) \
        + big_g**2 * d * (gm + 2.0 * k) ** 2
    s2 = d**2 + k**2 - big_g**2 * d
    return bool(s1 > 0.0 and s2 > 0.0), float(s1), float(s2)


def lyapunov_solve(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Steady covariance V from A V + V A^T = -D.

    The symmetric unknown is vectorized into its n(n+1)/2 independent entries
    and the resulting linear system solved directly; A must be strictly
    stable.  The residual is checked against 1e-10 ||D||.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or d.shape != (n, n):
        raise DomainError("A and D must be square matrices of equal size")
    if np.max(np.linalg.eigvals(a).real) >= 0.0:
        raise StabilityError("drift matrix is not strictly stable")

    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    index = {pair: k for k, pair in enumerate(pairs)}
    m = len(pairs)
    sys_mat = np.zeros((m, m))
    rhs = np.empty(m)
    for row, (i, j) in enumerate(pairs):
        # (A V + V A^T)_{ij} = sum_k A_ik V_kj + V_ik A_jk
        for k in range(n):
            sys_mat[row, index[(min(k, j), max(k, j))]] += a[i, k]
            sys_mat[row, index[(min(i, k), max(i, k))]] += a[j, k]
        rhs[row] = -d[i, j]
    try:
        sol = np.linalg.solve(sys_mat, rhs)
        for _ in range(2):  # iterative refinement for stiff rate ratios
            sol += np.linalg.solve(sys_mat, rhs - sys_mat @ sol)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSystemError("Lyapunov system is singular") from exc
    v = np.empty((n, n))
    for (i, j), k in index.items():
        v[i, j] = v[j, i] = sol[k]
    residual = np.max(np.abs(a @ v + v @ a.T + d))
    scale = max(np.max(np.abs(d)), 1e-300)
    if residual > 1e-10 * scale:
        raise DegenerateSystemError(
            f"Lyapunov residual {residual:.2e} exceeds 1e-10 * ||D||")
    return v


@dataclass(frozen=True)
class StationaryResult:
    E_N: float
    n_eff: float
    cov: np.ndarray
    steady: SteadyState
    S1: float
    S2: float


def stationary_point(p: StationaryParams, s: SteadyState) -> StationaryResult:
    """Covariance, log-negativity and effective mirror occupancy at a branch."""
    w = p.omega_m
    gm, k = p.gamma_m / w, p.kappa / w
    a = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, -gm, s.G / w, 0.0],
        [0.0, 0.0, -k, s.Delta_eff / w],
        [s.G / w, 0.0, -s.Delta_eff / w, -k],
    ])
    diff = np.diag([0.0, gm * (2.0 * p.n_bar + 1.0), k, k])
    v = lyapunov_solve(a, diff)
    ok, s1, s2 = stability_check(p, s)
    n_eff = 0.5 * (v[0, 0] + v[1, 1]) - 0.5
    return StationaryResult(E_N=logneg_gaussian(v), n_eff=float(n_eff), cov=v,
                            steady=s, S1=s1, S2=s2)


def steady_entanglement(p: StationaryParams) -> tuple[float, float, np.ndarray]:
    """(E_N, n_eff, V) on the low-power-connected stable branch."""
    branches = [b for b in steady_state(p) if b.stable]
    if not branches:
        raise StabilityError("no stable steady-state branch")
    res = stationary_point(p, branches[0])
    return res.E_N, res.n_eff, res.cov


def mirror_variances_zero_detuning(p: StationaryParams, big_g: float
                                   ) -> tuple[float, float]:
    """Closed-form V11, V22 of the mirror block at Delta = 0 (V12 = 0).

    V11 = 1/2 + n_bar + G^2 (kappa + gamma_m) / (2 gamma_m (kappa^2 +
    kappa gamma_m + omega_m^2)) and V22 likewise with G^2 kappa; the
    effective occupancy follows as n_eff = (V11 + V22)/2 - 1/2.
    """
    w = p.omega_m
    gm, k, g2 = p.gamma_m / w, p.kappa / w, (big_g / w) ** 2
    denom = 2.0 * gm * (k**2 + k * gm + 1.0)
    v11 = 0.5 + p.n_bar + g2 * (k + gm) / denom
    v22 = 0.5 + p.n_bar + g2 * k / denom
    return v11, v22


def detuning_sweep(p: StationaryParams, deltas_over_wm) -> list[dict]:
    """Per-detuning record of the quantities emitted by the CLI sweep."""
    rows = []
    for x in np.atleast_1d(deltas_over_wm):
        st = steady_state_at_detuning(p, float(x) * p.omega_m)
        ok, s1, s2 = stability_check(p, st)
        row = {"Delta_over_wm": float(x), "alpha_s": st.alpha_s, "G": st.G,
               "S1": s1, "S2": s2, "stable": int(ok)}
        if ok:
            res = stationary_point(p, st)
            row["EN"], row["n_eff"] = res.E_N, res.n_eff
            v = res.cov
        else:
            row["EN"] = row["n_eff"] = float("nan")
            v = np.full((4, 4), np.nan)
        for i in range(4):
            for j in range(4):
                row[f"V{i + 1}{j + 1}"] = float(v[i, j])
        rows.append(row)
    return rows

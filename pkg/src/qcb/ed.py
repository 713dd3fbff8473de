"""Exact diagonalization of small spin-1/2 lattices with two attached probes.

Desk-scale stand-in for large-lattice simulations: assembles the Heisenberg
bath plus probe coupling per total-S_z block, extracts the probe
singlet-triplet splitting and robust gap, exact thermal probe correlators,
and the Lehmann-representation inputs of the perturbative canonical
parameters.

Normalization: bath spins are S = sigma/2; probe operators tau are full Pauli
matrices (correlator <tau_a . tau_b> in [-3, 1]).  The probe coupling
alpha J S_site . tau_probe therefore equals 2 alpha J S_site . S_probe in
uniform spin-1/2 operators, which is how bonds are stored internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix

from .exceptions import (
    DegenerateSystemError,
    DomainError,
    ResourceError,
    SectorAmbiguityError,
    TruncationError,
)
from .spin_lde import fit_canonical_params

MAX_SPINS = 16
DENSE_BLOCK_CAP = 4096
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class LatticeSpec:
    """l x n_c Heisenberg lattice plus two probes coupled at sites A and B.

    ``bonds`` are (i, j, weight) with weight in units of J for uniform
    spin-1/2 operators; the constructor helpers fill them in.  Probes are the
    last two spin indices. alpha is the dimensionless probe coupling.
    """

    n_bath: int
    bonds: tuple[tuple[int, int, float], ...]
    probe_sites: tuple[int, int]
    alpha: float
    J: float = 1.0
    label: str = "custom"

    def __post_init__(self):
        if self.n_total > MAX_SPINS:
            raise ResourceError(f"{self.n_total} spins exceed the cap of {MAX_SPINS}")
        a, b = self.probe_sites
        if not (0 <= a < self.n_bath and 0 <= b < self.n_bath):
            raise DomainError("probe sites must be bath site indices")
        seen = set()
        for i, j, _ in self.bonds:
            seen.update((i, j))
        if self.n_bath > 1 and seen != set(range(self.n_bath)):
            raise DomainError("bond graph must touch every bath site")

    @property
    def n_total(self) -> int:
        return self.n_bath + 2

    @property
    def probe_indices(self) -> tuple[int, int]:
        return self.n_bath, self.n_bath + 1

    def coupled_bonds(self) -> tuple[tuple[int, int, float], ...]:
        """Bath bonds plus the probe bonds 2 alpha J S.S (= alpha J S.tau)."""
        a, b = self.probe_sites
        pa, pb = self.probe_indices
        extra = ((a, pa, 2.0 * self.alpha * self.J), (b, pb, 2.0 * self.alpha * self.J))
        return self.bonds + extra


def chain(length: int, alpha: float, probes: str | tuple[int, int] = "ends",
          J: float = 1.0) -> LatticeSpec:
    """Open Heisenberg chain with probes at the ends (or given sites)."""
    if length < 2:
        raise DomainError("chain needs at least 2 sites")
    bonds = tuple((i, i + 1, J) for i in range(length - 1))
    sites = (0, length - 1) if probes == "ends" else (int(probes[0]), int(probes[1]))
    return LatticeSpec(n_bath=length, bonds=bonds, probe_sites=sites,
                       alpha=alpha, J=J, label=f"chain L={length}")


def ladder(length: int, alpha: float, probes: str | tuple[int, int] = "ends",
           J: float = 1.0) -> LatticeSpec:
    """2-leg ladder; probes attach to opposite ends of the first leg."""
    if length < 2:
        raise DomainError("ladder needs at least 2 rungs")
    bonds = []
    for y in (0, 1):
        bonds += [(x + y * length, x + 1 + y * length, J) for x in range(length - 1)]
    bonds += [(x, x + length, J) for x in range(length)]
    sites = (0, length - 1) if probes == "ends" else (int(probes[0]), int(probes[1]))
    return LatticeSpec(n_bath=2 * length, bonds=tuple(bonds), probe_sites=sites,
                       alpha=alpha, J=J, label=f"ladder l={length}")


# ---------------------------------------------------------------------------
# S_z-blocked Hamiltonian assembly and diagonalization.
# ---------------------------------------------------------------------------


def _blocks_by_magnetization(n: int) -> dict[int, np.ndarray]:
    states = np.arange(1 << n, dtype=np.int64)
    pop = np.array([int(s).bit_count() for s in states])
    return {n_up: states[pop == n_up] for n_up in range(n + 1)}


def _block_hamiltonian(bonds, states: np.ndarray) -> csr_matrix:
    """Sparse Heisenberg Hamiltonian restricted to one S_z block."""
    pos = {int(s): k for k, s in enumerate(states)}
    dim = len(states)
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    for k, s in enumerate(states):
        s = int(s)
        for i, j, w in bonds:
            bi, bj = (s >> i) & 1, (s >> j) & 1
            if bi == bj:
                diag[k] += 0.25 * w
            else:
                diag[k] -= 0.25 * w
                flipped = s ^ (1 << i) ^ (1 << j)
                rows.append(k)
                cols.append(pos[flipped])
                vals.append(0.5 * w)
    h = csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    h += csr_matrix((diag, (np.arange(dim), np.arange(dim))), shape=(dim, dim))
    return h


def build_hamiltonian(spec: LatticeSpec) -> dict[int, tuple[np.ndarray, csr_matrix]]:
    """Per-S_z-block sparse Hamiltonian of bath + probes.

    Returns {n_up: (basis states, H_block)}; H commutes with total S_z by
    construction (only flip-flop terms appear off the diagonal).
    """
    n = spec.n_total
    bonds = spec.coupled_bonds()
    return {m: (sts, _block_hamiltonian(bonds, sts))
            for m, sts in _blocks_by_magnetization(n).items()}


def _pair_operator_block(i: int, j: int, states: np.ndarray, scale: float) -> csr_matrix:
    """scale * (S_i . S_j) on a block (scale = 4 gives tau_i . tau_j)."""
    return _block_hamiltonian(((i, j, scale),), states)


@dataclass
class SpectrumResult:
    """Eigen-decomposition per S_z block plus identified low levels."""

    spec: LatticeSpec
    energies: dict[int, np.ndarray]
    vectors: dict[int, np.ndarray]
    states: dict[int, np.ndarray]
    ground_energy: float = field(init=False)

    def __post_init__(self):
        self.ground_energy = min(float(e[0]) for e in self.energies.values())

    def all_levels(self):
        out = []
        for m, es in self.energies.items():
            out.extend((float(e), m, k) for k, e in enumerate(es))
        out.sort()
        return out


def full_spectrum(spec: LatticeSpec, need_vectors: bool = True) -> SpectrumResult:
    """Dense diagonalization of every S_z block (total dim <= 4096)."""
    if (1 << spec.n_total) > DENSE_BLOCK_CAP:
        raise ResourceError(
            f"full spectrum needs total dim <= {DENSE_BLOCK_CAP}; "
            f"got {1 << spec.n_total}")
    energies, vectors, states = {}, {}, {}
    for m, (sts, h) in build_hamiltonian(spec).items():
        if need_vectors:
            w, v = np.linalg.eigh(h.toarray())
            vectors[m] = v
        else:
            w = np.linalg.eigvalsh(h.toarray())
        energies[m] = w
        states[m] = sts
    return SpectrumResult(spec, energies, vectors, states)


def _low_levels(spec: LatticeSpec, k_each: int = 8):
    """Lowest levels per block: dense below the cap, Lanczos above."""
    from scipy.sparse.linalg import eigsh

    energies, vectors, states = {}, {}, {}
    for m, (sts, h) in build_hamiltonian(spec).items():
        dim = h.shape[0]
        if dim <= DENSE_BLOCK_CAP:
            w, v = np.linalg.eigh(h.toarray())
        else:
            k = min(k_each, dim - 1)
            w, v = eigsh(h, k=k, which="SA", tol=1e-12)
            order = np.argsort(w)
            w, v = w[order], v[:, order]
        energies[m], vectors[m], states[m] = w, v, sts
    return SpectrumResult(spec, energies, vectors, states)


def total_spin_expectation(result: SpectrumResult, m: int, level: int) -> float:
    """<S_tot^2> of one eigenvector (0 for a singlet, 2 for a triplet)."""
    spec = result.spec
    n = spec.n_total
    sts = result.states[m]
    vec = result.vectors[m][:, level]
    pairs = tuple((i, j, 2.0) for i in range(n) for j in range(i + 1, n))
    op = _block_hamiltonian(pairs, sts)  # 2 sum_{i<j} S_i.S_j
    return float(vec @ (op @ vec)) + 0.75 * n


def low_spectrum_jcan(spec: LatticeSpec) -> tuple[float, float]:
    """(J_can_exact, robust gap): singlet-triplet splitting and the gap from
    the triplet to the first level outside the 4-dimensional probe sector.

    The sector is identified by S_z-block membership and degeneracy counting,
    cross-checked with <S_tot^2> on the candidate eigenvectors.
    """
    if spec.alpha <= 0:
        raise DomainError("probe coupling alpha must be > 0 for the probe gap")
    result = _low_levels(spec)
    levels = result.all_levels()
    e0, m0, k0 = levels[0]
    if abs(total_spin_expectation(result, m0, k0)) > 1e-6:
        raise SectorAmbiguityError("ground state is not a total-spin singlet")
    if levels[1][0] - e0 < DEGENERACY_TOL:
        raise SectorAmbiguityError("degenerate ground state")
    # next distinct level: must be a triplet (3 states across m0-1, m0, m0+1)
    e_t = levels[1][0]
    members = [lv for lv in levels[1:] if lv[0] - e_t < DEGENERACY_TOL]
    if len(members) != 3 or {mm for _, mm, _ in members} != {m0 - 1, m0, m0 + 1}:
        raise SectorAmbiguityError(
            f"first excited multiplet is not a clean triplet: {members[:5]}")
    s2 = total_spin_expectation(result, members[0][1], members[0][2])
    if abs(s2 - 2.0) > 1e-6:
        raise SectorAmbiguityError(f"<S^2> of candidate triplet is {s2}")
    e_rest = levels[4][0]
    if e_rest - e_t < DEGENERACY_TOL:
        raise SectorAmbiguityError("low sector larger than singlet + triplet")
    return e_t - e0, e_rest - e_t


def _correlator_operator(spec: LatticeSpec, states: np.ndarray) -> csr_matrix:
    pa, pb = spec.probe_indices
    return _pair_operator_block(pa, pb, states, 4.0)


def ground_state_correlator(spec: LatticeSpec) -> float:
    """<tau_a . tau_b> in the global ground state."""
    result = _low_levels(spec)
    e0, m0, k0 = result.all_levels()[0]
    vec = result.vectors[m0][:, k0]
    op = _correlator_operator(spec, result.states[m0])
    return float(vec @ (op @ vec))


def thermal_correlator_exact(spec: LatticeSpec, betas,
                             spectrum: SpectrumResult | None = None) -> np.ndarray:
    """<tau_a . tau_b>(beta) from the full blockwise spectrum.

    Weights use energies shifted by the global ground energy, so arbitrarily
    large beta is safe; beta = 0 gives the maximally mixed value 0.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if spectrum is None:
        spectrum = full_spectrum(spec)
    e0 = spectrum.ground_energy
    num = np.zeros_like(betas)
    den = np.zeros_like(betas)
    for m, es in spectrum.energies.items():
        v = spectrum.vectors[m]
        op = _correlator_operator(spec, spectrum.states[m])
        diag = np.einsum("ik,ik->k", v, op @ v)
        w = np.exp(-np.outer(betas, es - e0))
        num += w @ diag
        den += w.sum(axis=1)
    return num / den


def thermal_correlator_truncated(spec: LatticeSpec, betas, k_each: int = 8) -> np.ndarray:
    """Low-temperature correlator from the lowest levels of each block.

    Bounds the neglected Boltzmann tail by (states left) x exp(-beta gap) and
    raises if it could shift the result at the 1e-10 level.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    result = _low_levels(spec, k_each=k_each)
    e0 = result.ground_energy
    cut = min(float(es[-1]) for es in result.energies.values() if len(es))
    n_left = sum(len(result.states[m]) - len(es)
                 for m, es in result.energies.items())
    tail = max(n_left, 1) * np.exp(-betas * (cut - e0))
    if np.any(tail > 1e-10):
        raise TruncationError(
            f"truncated Boltzmann tail up to {tail.max():.2e} > 1e-10; "
            "lower the temperature or raise k_each")
    num = np.zeros_like(betas)
    den = np.zeros_like(betas)
    for m, es in result.energies.items():
        v = result.vectors[m]
        op = _correlator_operator(spec, result.states[m])
        diag = np.einsum("ik,ik->k", v, op @ v)
        w = np.exp(-np.outer(betas, es - e0))
        num += w @ diag
        den += w.sum(axis=1)
    return num / den


# ---------------------------------------------------------------------------
# Lehmann-representation inputs for the perturbative canonical parameters.
# ---------------------------------------------------------------------------


def _bath_spectrum_m0(spec: LatticeSpec):
    """Dense spectrum of the bath-only Hamiltonian in its S_z = 0 block."""
    if spec.n_bath % 2:
        raise DegenerateSystemError("bath must have an even number of sites "
                                    "for a singlet ground state")
    blocks = _blocks_by_magnetization(spec.n_bath)
    states = blocks[spec.n_bath // 2]
    h = _block_hamiltonian(spec.bonds, states)
    w, v = np.linalg.eigh(h.toarray())
    return states, w, v


def chi_lehman_and_phi(spec: LatticeSpec) -> tuple[float, float]:
    """(chi, Phi/(2 J alpha)^2) from the bath spectrum at alpha = 0.

    chi = -sum_{k>0} [<0|S_A^z|k><k|S_B^z|0> + c.c.]/(E_k - E_0), positive
    when the bath favors a probe singlet (J_can ~ 4 (J alpha)^2 chi), and
    Phi/(2 J alpha)^2 = sum_{k>0} |<0|(S_A^z - S_B^z)|k>|^2/(E_k - E_0)^2.
    eta vanishes at this order.
    """
    states, w, v = _bath_spectrum_m0(spec)
    if w[1] - w[0] < DEGENERACY_TOL:
        raise DegenerateSystemError("degenerate bath ground state")
    a, b = spec.probe_sites
    za = np.where((states >> a) & 1, 0.5, -0.5)
    zb = np.where((states >> b) & 1, 0.5, -0.5)
    psi0 = v[:, 0]
    amps_a = v.T @ (za * psi0)   # <k|S_A^z|0>
    amps_b = v.T @ (zb * psi0)
    de = w - w[0]
    chi = -2.0 * float(np.sum(amps_a[1:] * amps_b[1:] / de[1:]))
    diff = amps_a - amps_b
    phi_coeff = float(np.sum(diff[1:] ** 2 / de[1:] ** 2))
    return chi, phi_coeff


def chi_resolvent(spec: LatticeSpec) -> float:
    """chi via a linear solve, (E_0 - H) x = Q S_B^z |0>: an eigenbasis-free
    cross-check of :func:`chi_lehman_and_phi`."""
    states, w, v = _bath_spectrum_m0(spec)
    a, b = spec.probe_sites
    za = np.where((states >> a) & 1, 0.5, -0.5)
    zb = np.where((states >> b) & 1, 0.5, -0.5)
    h = _block_hamiltonian(spec.bonds, states).toarray()
    psi0 = v[:, 0]
    rhs = zb * psi0
    rhs = rhs - psi0 * (psi0 @ rhs)
    x, *_ = np.linalg.lstsq(w[0] * np.eye(len(w)) - h, rhs, rcond=None)
    x = x - psi0 * (psi0 @ x)
    return 2.0 * float((za * psi0) @ x)


# ---------------------------------------------------------------------------
# End-to-end comparison of the ED oracle with the canonical theory.
# ---------------------------------------------------------------------------


def default_temperature_grid(j_can: float, n: int = 12) -> np.ndarray:
    """12 log-spaced temperatures from k_B T = J_can/20 to 20 J_can."""
    return np.geomspace(j_can / 20.0, 20.0 * j_can, n)


def theory_consistency_report(spec: LatticeSpec, n_temps: int = 12) -> dict:
    """Exact-diagonalization vs canonical-theory scorecard.

    Reports (i) J_can_exact against the perturbative 4 (J alpha)^2 chi,
    (ii) the three-parameter fit of the ED thermal correlator with its RMS
    residual, (iii) the T = 0 correlator against -3 + eta + 3 Phi, and
    (iv) the exact separability temperature against 0.93 J_can (1 - Phi).
    """
    j_can, gap = low_spectrum_jcan(spec)
    chi, phi_coeff = chi_lehman_and_phi(spec)
    j_can_pert = 4.0 * (spec.J * spec.alpha) ** 2 * chi

    spectrum = full_spectrum(spec)
    temps = default_temperature_grid(j_can, n_temps)
    betas = 1.0 / temps
    corrs = thermal_correlator_exact(spec, betas, spectrum=spectrum)
    fit = fit_canonical_params(list(zip(betas, corrs)))
    cp = fit.params

    c0_exact = ground_state_correlator(spec)
    c0_model = -3.0 + cp.eta + 3.0 * cp.Phi

    # exact separability temperature from the ED correlator itself
    def f(beta):
        return float(thermal_correlator_exact(spec, [beta], spectrum=spectrum)[0]) + 1.0

    lo, hi = 1e-3 / j_can, 1e3 / j_can  # betas: high-T (corr ~ 0) to low-T
    t_star = None
    if f(lo) > 0.0 > f(hi):
        for _ in range(120):
            mid = math.sqrt(lo * hi)
            if f(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        t_star = 1.0 / math.sqrt(lo * hi)
    t_star_est = 0.93 * cp.J_can * (1.0 - cp.Phi)

    return {
        "lattice": spec.label,
        "alpha": spec.alpha,
        "J_can_exact": j_can,
        "robust_gap": gap,
        "gap_over_jcan": gap / j_can,
        "chi_lehman": chi,
        "J_can_perturbative": j_can_pert,
        "jcan_rel_error": abs(j_can - j_can_pert) / j_can,
        "fit_J_can": cp.J_can,
        "fit_Phi": cp.Phi,
        "fit_eta": cp.eta,
        "fit_rms_residual": fit.rms_residual,
        "phi_perturbative": 4.0 * (spec.J * spec.alpha) ** 2 * phi_coeff,
        "corr_T0_exact": c0_exact,
        "corr_T0_model": c0_model,
        "corr_T0_abs_error": abs(c0_exact - c0_model),
        "kT_star_exact": t_star,
        "kT_star_estimate": t_star_est,
        "tstar_rel_error": (abs(t_star - t_star_est) / t_star
                            if t_star is not None else None),
    }

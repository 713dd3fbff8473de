import math

import numpy as np
import pytest
from scipy.integrate import quad

from qcb.exceptions import (
    DomainError,
    NonPhysicalCovarianceError,
    SingularCovarianceError,
)
from qcb.gaussian import (
    GaussianState,
    logneg_gaussian,
    ppt_tilde_dminus,
    random_physical_cov,
    random_symplectic,
    simon_invariant_check,
    symplectic_eigenvalues_two_mode,
    symplectic_form,
    thermal_cov,
    two_mode_blocks,
    two_mode_squeezed_thermal_cov,
    wigner_gaussian,
)

VAC = 0.5 * np.eye(4)


def sympl_eigs_oracle(v):
    """Moduli of the eigenvalues of i sigma V (independent of the invariant formula)."""
    n = v.shape[0] // 2
    w = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ v))
    return np.sort(w)[::2]  # each symplectic eigenvalue appears twice


class TestSymplecticEigenvalues:
    def test_vacuum(self):
        assert symplectic_eigenvalues_two_mode(VAC) == (0.5, 0.5)

    def test_thermal(self):
        v = thermal_cov([1.0, 1.0]).cov
        d_plus, d_minus = symplectic_eigenvalues_two_mode(v)
        assert abs(d_plus - 1.5) < 1e-12 and abs(d_minus - 1.5) < 1e-12

    def test_squeezed_vacuum_is_pure(self):
        v = two_mode_squeezed_thermal_cov(1.0).cov
        d_plus, d_minus = symplectic_eigenvalues_two_mode(v)
        assert abs(d_plus - 0.5) < 1e-7 and abs(d_minus - 0.5) < 1e-7
        assert np.allclose(sympl_eigs_oracle(v), [0.5, 0.5], atol=1e-8)

    def test_against_eigen_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            v = random_physical_cov(2, rng).cov
            want = sympl_eigs_oracle(v)
            got = np.sort(symplectic_eigenvalues_two_mode(v))
            assert np.max(np.abs(np.sort(want) - got)) < 1e-10

    def test_nonphysical_rejected(self):
        with pytest.raises(NonPhysicalCovarianceError):
            GaussianState(0.1 * np.eye(4))


class TestPPTDminus:
    def test_vacuum_boundary(self):
        assert abs(ppt_tilde_dminus(VAC) - 0.5) < 1e-14

    def test_squeezing_entangles(self):
        for r in (0.05, 0.3, 1.0):
            assert ppt_tilde_dminus(two_mode_squeezed_thermal_cov(r).cov) < 0.5

    def test_product_thermal_separable(self):
        v = thermal_cov([0.7, 2.2]).cov
        assert ppt_tilde_dminus(v) >= 0.5 - 1e-12

    def test_mirror_reflection_oracle(self):
        rng = np.random.default_rng(1)
        lam = np.diag([1.0, -1.0, 1.0, 1.0])
        for _ in range(300):
            v = random_physical_cov(2, rng).cov
            want = sympl_eigs_oracle(lam @ v @ lam)[0]
            assert abs(ppt_tilde_dminus(v) - want) < 1e-10


class TestLogNegativity:
    def test_squeezed_thermal_closed_form_grid(self):
        for r in np.linspace(0.0, 2.0, 20):
            for nb in np.linspace(0.0, 3.0, 20):
                v = two_mode_squeezed_thermal_cov(float(r), 0.0, float(nb)).cov
                want = max(0.0, 2.0 * r - math.log(2.0 * nb + 1.0))
                assert abs(logneg_gaussian(v) - want) < 1e-10

    def test_unsqueezed_zero(self):
        for nb in (0.0, 0.5, 4.0):
            assert logneg_gaussian(two_mode_squeezed_thermal_cov(0.0, 0.0, nb).cov) == 0.0

    def test_threshold(self):
        r = 1.0
        nb = (math.e**2 - 1.0) / 2.0
        assert abs(logneg_gaussian(two_mode_squeezed_thermal_cov(r, 0.0, nb).cov)) < 1e-10


class TestSqueezedThermalCov:
    def test_block_determinants(self):
        for r, nb in ((0.0, 0.0), (0.8, 0.0), (1.3, 0.7)):
            v = two_mode_squeezed_thermal_cov(r, 0.4, nb).cov
            a, b, c = two_mode_blocks(v)
            assert abs(np.linalg.det(v) - (1 + 2 * nb) ** 4 / 16) < 1e-10
            want_ab = (1 + 2 * nb) ** 2 * math.cosh(2 * r) ** 2 / 4
            assert abs(np.linalg.det(a) - want_ab) < 1e-10
            assert abs(np.linalg.det(b) - want_ab) < 1e-10
            want_c = -((1 + 2 * nb) ** 2) * math.cosh(r) ** 2 * math.sinh(r) ** 2
            assert abs(np.linalg.det(c) - want_c) < 1e-8

    def test_no_squeezing_no_correlations(self):
        _, _, c = two_mode_blocks(two_mode_squeezed_thermal_cov(0.0, 0.9, 1.1).cov)
        assert np.max(np.abs(c)) < 1e-14

    def test_domain(self):
        with pytest.raises(DomainError):
            two_mode_squeezed_thermal_cov(0.5, 0.0, -0.1)


class TestSimonCriterion:
    def test_vacuum_consistent(self):
        assert simon_invariant_check(VAC)

    def test_small_squeezing_violates(self):
        assert not simon_invariant_check(two_mode_squeezed_thermal_cov(0.1).cov)

    def test_agrees_with_dminus_on_random_states(self):
        rng = np.random.default_rng(2)
        both = {True: 0, False: 0}
        for _ in range(1000):
            v = random_physical_cov(2, rng).cov
            sep = simon_invariant_check(v)
            assert sep == (ppt_tilde_dminus(v) >= 0.5 - 1e-10)
            both[sep] += 1
        assert both[True] > 50 and both[False] > 50  # both branches exercised


class TestSymplecticInvariance:
    def test_local_symplectic_preserves_invariants(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            v = random_physical_cov(2, rng).cov
            s_a = random_symplectic(1, rng)
            s_b = random_symplectic(1, rng)
            s = np.zeros((4, 4))
            s[:2, :2], s[2:, 2:] = s_a, s_b
            w = s @ v @ s.T
            a1, b1, c1 = two_mode_blocks(v)
            a2, b2, c2 = two_mode_blocks(w)
            for m1, m2 in ((a1, a2), (b1, b2), (c1, c2), (v, w)):
                assert abs(np.linalg.det(m1) - np.linalg.det(m2)) < 1e-10 * max(
                    1.0, abs(np.linalg.det(m1)))

    def test_physicality_preserved_by_symplectic_conjugation(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            v = random_physical_cov(2, rng).cov
            s = random_symplectic(2, rng)
            GaussianState(0.5 * ((s @ v @ s.T) + (s @ v @ s.T).T))  # must not raise

    def test_random_symplectic_is_symplectic(self):
        rng = np.random.default_rng(5)
        for n in (1, 2, 3):
            s = random_symplectic(n, rng)
            assert np.max(np.abs(s @ symplectic_form(n) @ s.T - symplectic_form(n))) < 1e-12


class TestWigner:
    def test_vacuum_at_origin(self):
        st = GaussianState(0.5 * np.eye(2))
        assert abs(wigner_gaussian(st, [0.0, 0.0]) - 1.0 / math.pi) < 1e-14

    def test_displaced_vacuum_peak(self):
        alpha = 0.7 + 0.4j
        mean = np.array([math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag])
        st = GaussianState(0.5 * np.eye(2), mean)
        peak = wigner_gaussian(st, mean)
        assert abs(peak - 1.0 / math.pi) < 1e-14
        assert wigner_gaussian(st, mean + [0.3, 0.1]) < peak

    def test_marginal_matches_position_distribution(self):
        # integrate W over momentum: must equal the Gaussian position density
        v = np.array([[0.9, 0.25], [0.25, 0.6]])
        st = GaussianState(v, [0.2, -0.4])

        for x in (-0.5, 0.2, 1.1):
            marginal = quad(lambda p: wigner_gaussian(st, [x, p]),
                            -np.inf, np.inf, epsabs=1e-12)[0]
            want = math.exp(-0.5 * (x - 0.2) ** 2 / v[0, 0]) / math.sqrt(
                2 * math.pi * v[0, 0])
            assert abs(marginal - want) < 1e-9

    def test_normalization_two_modes(self):
        rng = np.random.default_rng(6)
        st = random_physical_cov(1, rng)
        total = quad(lambda x: quad(lambda p: wigner_gaussian(st, [x, p]),
                                    -np.inf, np.inf, epsabs=1e-10)[0],
                     -np.inf, np.inf, epsabs=1e-10)[0]
        assert abs(total - 1.0) < 1e-7

    def test_singular_covariance(self):
        st = GaussianState(0.5 * np.eye(2))
        bad = GaussianState.__new__(GaussianState)
        object.__setattr__(bad, "cov", np.array([[1e-20, 0.0], [0.0, 1e20]]))
        object.__setattr__(bad, "mean", np.zeros(2))
        object.__setattr__(bad, "_n_modes", 1)
        with pytest.raises(SingularCovarianceError):
            wigner_gaussian(bad, [0.0, 0.0])
        assert wigner_gaussian(st, [1.0, 1.0]) > 0

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from floqlab.hamiltonians import HermitianOperator
from floqlab.statevector import (
    StateVector,
    apply,
    excitation_numbers,
    from_bitstring,
    make_propagator,
    pair_zz_expectations,
    site_z_expectations,
)

SZ = np.diag([1.0, -1.0]).astype(complex)


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(0.5 * (a + a.conj().T))


def random_state(n_sites, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2**n_sites) + 1j * rng.normal(size=2**n_sites)
    return StateVector(amps / np.linalg.norm(amps), n_sites)


class TestMakePropagator:
    def test_zero_duration_is_identity(self):
        h = random_hermitian(8, 0)
        assert_allclose(make_propagator(h, 0.0).matrix, np.eye(8), atol=1e-15)

    def test_perfect_pi_pulse(self):
        t = 13.0
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        h = HermitianOperator(np.pi / (2 * t) * sx)
        assert_allclose(make_propagator(h, t).matrix, -1j * sx, atol=1e-12)

    def test_against_scaling_and_squaring_oracle(self):
        h = random_hermitian(16, 7)
        for t in (0.3, 2.0):
            u = make_propagator(h, t).matrix
            u_ref = expm(-1j * h.matrix * t)
            assert np.max(np.abs(u - u_ref)) <= 1e-9

    def test_unitarity(self):
        h = random_hermitian(32, 3)
        u = make_propagator(h, 5.0).matrix
        assert np.max(np.abs(u.conj().T @ u - np.eye(32))) <= 1e-10

    def test_group_property(self):
        h = random_hermitian(8, 11)
        u_t = make_propagator(h, 1.3).matrix
        u_s = make_propagator(h, 0.9).matrix
        u_sum = make_propagator(h, 2.2).matrix
        assert np.max(np.abs(u_t @ u_s - u_sum)) <= 1e-10

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            make_propagator(random_hermitian(4, 0), -1.0)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            make_propagator(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)


class TestApply:
    def test_identity(self):
        psi = random_state(3, 1)
        out = apply(make_propagator(random_hermitian(8, 2), 0.0), psi)
        assert_allclose(out.amplitudes, psi.amplitudes)

    def test_two_steps_equal_one_double_step(self):
        h = random_hermitian(16, 5)
        psi = random_state(4, 6)
        once = apply(make_propagator(h, 2.4), psi)
        twice = apply(make_propagator(h, 1.2), apply(make_propagator(h, 1.2), psi))
        assert np.max(np.abs(once.amplitudes - twice.amplitudes)) <= 1e-10

    def test_norm_preserved(self):
        h = random_hermitian(16, 8)
        psi = random_state(4, 9)
        out = apply(make_propagator(h, 3.0), psi)
        assert abs(out.norm() - 1.0) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply(make_propagator(random_hermitian(8, 0), 1.0), random_state(2, 0))

    def test_norm_drift_over_many_applications(self):
        # 1e5 propagator applications must keep the norm to 1e-10
        h = random_hermitian(4, 12)
        u = make_propagator(h, 0.7)
        amps = random_state(2, 13).amplitudes.copy()
        for _ in range(100_000):
            amps = u.matrix @ amps
        assert abs(np.linalg.norm(amps) - 1.0) <= 1e-10


class TestFromBitstring:
    def test_all_zeros(self):
        psi = from_bitstring("00")
        assert psi.amplitudes[0] == 1.0 and psi.probabilities().sum() == 1.0

    def test_site_one_is_most_significant(self):
        psi = from_bitstring("10")
        assert psi.amplitudes[2] == 1.0

    def test_ten_site_example(self):
        psi = from_bitstring("0010000000")
        z = site_z_expectations(psi)
        assert z[2] == pytest.approx(-1.0)
        assert_allclose(np.delete(z, 2), 1.0)
        assert z.mean() == pytest.approx(0.8)

    def test_qutrit_digits(self):
        psi = from_bitstring("021")
        assert psi.local_dim == 3
        assert psi.amplitudes[0 * 9 + 2 * 3 + 1] == 1.0

    def test_bad_input(self):
        with pytest.raises(ValueError):
            from_bitstring("01x")
        with pytest.raises(ValueError):
            from_bitstring("")
        with pytest.raises(ValueError):
            from_bitstring("02", local_dim=2)


class TestExpectations:
    def test_polarized(self):
        psi = from_bitstring("0000")
        assert_allclose(site_z_expectations(psi), 1.0)
        assert_allclose(pair_zz_expectations(psi), 1.0)

    def test_uniform_superposition(self):
        amps = np.full(16, 0.25, dtype=complex)
        z = site_z_expectations(StateVector(amps, 4))
        assert_allclose(z, 0.0, atol=1e-12)

    def test_balanced_two_site_state(self):
        amps = np.zeros(4, dtype=complex)
        amps[1] = amps[2] = 1 / np.sqrt(2)
        psi = StateVector(amps, 2)
        assert_allclose(site_z_expectations(psi), 0.0, atol=1e-14)
        corr = pair_zz_expectations(psi)
        assert corr[0, 1] == pytest.approx(-1.0)
        assert corr[0, 0] == pytest.approx(1.0)

    def test_pair_zz_against_kronecker_oracle(self):
        psi = random_state(3, 21)
        corr = pair_zz_expectations(psi)
        eye = np.eye(2, dtype=complex)
        for i in range(3):
            for j in range(3):
                mats = [eye] * 3
                mats[i] = SZ @ mats[i]
                mats[j] = SZ @ mats[j]
                op = np.kron(np.kron(mats[0], mats[1]), mats[2])
                ref = np.real(psi.amplitudes.conj() @ op @ psi.amplitudes)
                assert corr[i, j] == pytest.approx(ref, abs=1e-12)

    def test_correlator_matrix_symmetric_unit_diagonal(self):
        psi = random_state(4, 30)
        corr = pair_zz_expectations(psi)
        assert_allclose(corr, corr.T, atol=1e-15)
        assert_allclose(np.diag(corr), 1.0, atol=1e-12)

    def test_excitation_distribution_invariant_under_u1_propagator(self):
        from floqlab.hamiltonians import FloquetConfig, build_xx_interaction

        cfg = FloquetConfig(chain_length=4)
        u = make_propagator(build_xx_interaction(cfg), 25.0)
        psi = random_state(4, 40)
        n_exc = excitation_numbers(4)
        before = np.array([psi.probabilities()[n_exc == k].sum() for k in range(5)])
        out = apply(u, psi)
        after = np.array([out.probabilities()[n_exc == k].sum() for k in range(5)])
        assert np.max(np.abs(before - after)) <= 1e-10

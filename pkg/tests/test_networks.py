import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swapnet import networks, qmath
from swapnet.networks import NetworkSpec, overlap, power_trace, run_interferometer


def basis_ket(d, digits):
    idx = 0
    for x in digits:
        idx = idx * d + x
    v = np.zeros(d ** len(digits))
    v[idx] = 1
    return v


class TestSwapOperator:
    def test_swaps_01(self):
        v = networks.swap_operator(2)
        assert np.array_equal(v @ basis_ket(2, [0, 1]), basis_ket(2, [1, 0]))

    def test_involution(self):
        v = networks.swap_operator(2).real.astype(int)
        assert np.array_equal(v @ v, np.eye(4, dtype=int))
        assert np.array_equal(v, v.T)

    def test_qutrit_overlap_identity(self):
        a = qmath.random_density(3, 3, seed=21).matrix
        b = qmath.random_density(3, 2, seed=22).matrix
        lhs = np.trace(networks.swap_operator(3) @ np.kron(a, b))
        rhs = np.trace(a @ b)
        assert abs(lhs - rhs) <= 1e-12


class TestShiftOperator:
    def test_k2_is_swap(self):
        for d in (2, 3):
            assert np.array_equal(networks.shift_operator(d, 2), networks.swap_operator(d))

    def test_d2_k3_on_basis(self):
        v3 = networks.shift_operator(2, 3)
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    assert np.array_equal(v3 @ basis_ket(2, [a, b, c]), basis_ket(2, [c, a, b]))

    def test_d2_k3_order_three(self):
        v3 = networks.shift_operator(2, 3)
        assert np.array_equal(v3 @ v3 @ v3, np.eye(8))
        assert not np.array_equal(v3 @ v3, np.eye(8))

    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_cascade_equals_direct(self, d, k):
        cascade = networks.shift_permutation_cascade(d, k)
        direct = networks.shift_permutation_direct(d, k)
        assert np.array_equal(cascade, direct)
        # also as dense matrices built from explicit 0/1 swap matrices
        dense = np.eye(d**k)
        for i in range(k - 2, -1, -1):
            left = np.eye(d**i)
            right = np.eye(d ** (k - i - 2))
            dense = np.kron(np.kron(left, networks.swap_operator(d).real), right) @ dense
        assert np.array_equal(dense, networks.shift_operator(d, k).real)

    def test_cap(self):
        with pytest.raises(qmath.DimensionError):
            networks.shift_operator(2, 13)


class TestInterferenceFactor:
    def test_identity(self, qubit_diag):
        f = networks.interference_factor(NetworkSpec(np.eye(2)), qubit_diag)
        assert f.value == pytest.approx(1) and f.visibility == pytest.approx(1) and f.phase == 0

    def test_global_phase(self, qubit_diag):
        theta = 0.7
        f = networks.interference_factor(NetworkSpec(cmath.exp(1j * theta) * np.eye(2)), qubit_diag)
        assert f.visibility == pytest.approx(1, abs=1e-12)
        assert f.phase == pytest.approx(theta, abs=1e-12)

    def test_phase_range_includes_pi(self):
        f = networks.interference_factor(NetworkSpec(-np.eye(2)), qmath.maximally_mixed(2))
        assert f.phase == pytest.approx(math.pi)

    def test_swap_on_product(self):
        a, b = qmath.random_density(2, 2, seed=3), qmath.random_density(2, 1, seed=4)
        f = networks.interference_factor(networks.swap_network(2), np.kron(a.matrix, b.matrix))
        assert abs(f.value - np.trace(a.matrix @ b.matrix)) <= 1e-12
        assert f.phase == 0.0

    def test_dimension_mismatch(self, qubit_diag):
        with pytest.raises(qmath.DimensionError):
            networks.interference_factor(networks.swap_network(2), qubit_diag)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            NetworkSpec(np.diag([1.0, 0.5]))


class TestRunInterferometer:
    def test_closed_interferometer(self, qubit_diag):
        assert run_interferometer(NetworkSpec(np.eye(2)), qubit_diag, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_minus_one_eigenstate(self):
        # Z|1> = -|1>
        rho = qmath.basis_state(2, 1).projector()
        assert run_interferometer(NetworkSpec(qmath.PAULI_Z), rho, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_swap_purity(self, qubit_diag):
        rho = np.kron(qubit_diag.matrix, qubit_diag.matrix)
        assert run_interferometer(networks.swap_network(2), rho, 0.0) == pytest.approx(0.8125, abs=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    @pytest.mark.parametrize("phi", [0.0, math.pi / 2, math.pi, 1.234])
    def test_circuit_matches_formula(self, d, phi):
        for seed in range(3):
            u = qmath.random_unitary(d, seed=seed)
            rho = qmath.random_density(d, seed=seed + 100)
            expected = 0.5 * (1 + (cmath.exp(1j * phi) * np.trace(u @ rho.matrix)).real)
            assert abs(run_interferometer(NetworkSpec(u), rho, phi) - expected) <= 1e-10

    def test_phase_convention_pinned(self):
        # U = i*I: Tr(U rho) = i. With exp(i*phi) on the |1> branch, phi = -pi/2 restores full contrast.
        spec = NetworkSpec(1j * np.eye(2))
        rho = qmath.maximally_mixed(2)
        assert run_interferometer(spec, rho, -math.pi / 2) == pytest.approx(1.0, abs=1e-12)
        assert run_interferometer(spec, rho, math.pi / 2) == pytest.approx(0.0, abs=1e-12)


class TestOverlap:
    def test_identical_pure(self):
        psi = qmath.random_pure(3, seed=1).projector()
        assert overlap(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_pure(self):
        assert overlap(qmath.basis_state(2, 0).projector(), qmath.basis_state(2, 1).projector()) == 0.0

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_maximally_mixed(self, d):
        m = qmath.maximally_mixed(d)
        assert overlap(m, m) == pytest.approx(1 / d, abs=1e-12)

    @given(st.integers(0, 100_000), st.sampled_from([2, 3, 4]))
    @settings(max_examples=50, deadline=None)
    def test_symmetry_bounds_and_circuit(self, seed, d):
        a = qmath.random_density(d, 1 + seed % d, seed=seed)
        b = qmath.random_density(d, 1 + (seed // 7) % d, seed=seed + 1)
        ab, ba = overlap(a, b), overlap(b, a)
        assert abs(ab - ba) <= 1e-12
        assert 0.0 <= ab <= 1.0
        assert abs(ab - overlap(a, b, via="circuit")) <= 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(qmath.DimensionError):
            overlap(np.eye(2) / 2, np.eye(3) / 3)


class TestPowerTrace:
    def test_k1(self):
        assert power_trace(qmath.random_density(4, seed=1), 1) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_pure(self, k):
        psi = qmath.random_pure(3, seed=2).projector()
        assert power_trace(psi, k) == pytest.approx(1.0, abs=1e-12)

    def test_diag_cubed(self, qubit_diag):
        assert power_trace(qubit_diag, 3) == pytest.approx(0.75**3 + 0.25**3, abs=1e-12)
        assert 0.75**3 + 0.25**3 == 0.4375

    @pytest.mark.parametrize("d", [2, 3, 4])
    @pytest.mark.parametrize("k", [2, 3])
    def test_all_paths_agree(self, d, k):
        rho = qmath.random_density(d, seed=10 * d + k)
        values = [power_trace(rho, k, via=v) for v in networks.POWER_TRACE_PATHS]
        assert max(values) - min(values) <= 1e-9

    @given(st.integers(0, 100_000), st.integers(2, 5))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_k(self, seed, d):
        rho = qmath.random_density(d, 1 + seed % d, seed=seed)
        traces = [power_trace(rho, k) for k in range(1, 7)]
        assert all(b <= a + 1e-12 for a, b in zip(traces, traces[1:]))

    def test_unknown_path(self, qubit_diag):
        with pytest.raises(ValueError):
            power_trace(qubit_diag, 2, via="magic")

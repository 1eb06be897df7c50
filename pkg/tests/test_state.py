import math

import numpy as np
import pytest

from u1steer import (
    GateParams,
    StateVector,
    apply_pauli_x,
    apply_u1_gate,
    entanglement_entropy,
    exact_charge_moments,
    fidelity,
    init_mirrored_zero_charge,
    init_neel,
    measure_qubit,
    sample_gate_params,
    schmidt_spectrum,
    total_charge_distribution,
)
from u1steer.oracles import brute_force_entropy, brute_force_moments
from u1steer.state import MAX_QUBITS, subsystem_charge_values

from conftest import make_random_state


# ---------------------------------------------------------------------------
# initial states


def test_neel_l2_is_up_down():
    s = init_neel(2)
    # qubit 0 up (bit 0), qubit 1 down (bit 1) -> index 0b10
    assert np.flatnonzero(s.amplitudes).tolist() == [2]
    assert s.amplitudes[2] == 1.0


def test_neel_l4_has_no_fluctuations():
    s = init_neel(4)
    m = exact_charge_moments(s, 2)
    assert m.mean == 0.0
    assert m.variance == 0.0
    assert total_charge_distribution(s) == {0: 1.0}


def test_neel_rejects_odd_and_oversized():
    with pytest.raises(ValueError):
        init_neel(3)
    with pytest.raises(ValueError):
        init_neel(MAX_QUBITS + 2)


def test_mirrored_l4():
    s = init_mirrored_zero_charge(4)
    assert np.flatnonzero(s.amplitudes).size == 2  # C(2, 1) half patterns
    assert entanglement_entropy(s, 2) == pytest.approx(math.log(2), abs=1e-12)


def test_mirrored_l8():
    s = init_mirrored_zero_charge(8)
    assert entanglement_entropy(s, 4, 1) == pytest.approx(math.log(6), abs=1e-10)
    assert entanglement_entropy(s, 4, 2) == pytest.approx(math.log(6), abs=1e-10)
    m = exact_charge_moments(s, 4)
    assert m.variance == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("L", [4, 8, 12])
def test_mirrored_halves_carry_zero_charge(L):
    s = init_mirrored_zero_charge(L)
    assert exact_charge_moments(s, L // 2).mean == pytest.approx(0.0, abs=1e-12)


def test_mirrored_rejects_bad_sizes():
    with pytest.raises(ValueError):
        init_mirrored_zero_charge(6)


# ---------------------------------------------------------------------------
# gates


def test_identity_gate_leaves_state_alone(rng):
    s = make_random_state(4, rng)
    before = s.amplitudes.copy()
    apply_u1_gate(s, GateParams.identity(), 1)
    np.testing.assert_allclose(s.amplitudes, before, atol=1e-15)


def test_gate_matrix_is_unitary_and_block_diagonal(rng):
    for _ in range(50):
        g = sample_gate_params(rng)
        m = g.matrix()
        np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-12)
        # the {|00>, |11>} corner is diagonal and decoupled from {|01>, |10>}
        assert m[0, 1] == m[1, 0] == 0
        np.testing.assert_allclose(m[:2, 2:], 0, atol=0)
        np.testing.assert_allclose(m[2:, :2], 0, atol=0)


def test_gate_keeps_up_down_in_zero_sector(rng):
    s = init_neel(2)
    apply_u1_gate(s, sample_gate_params(rng), 0)
    # support only on {|up down>, |down up>} = indices 2 and 1
    assert abs(s.amplitudes[0]) == 0
    assert abs(s.amplitudes[3]) == 0
    assert total_charge_distribution(s) == pytest.approx({0: 1.0})


def test_gate_swap_block_example():
    # 2x2 block [[0, 1], [-1, 0]]: theta = pi/2, all phases zero
    g = GateParams(0.0, 0.0, 0.0, 0.0, 0.0, math.pi / 2)
    np.testing.assert_allclose(g.two_by_two(), [[0, 1], [-1, 0]], atol=1e-15)
    s = init_neel(2)  # |up down>
    apply_u1_gate(s, g, 0)
    expected = np.zeros(4, dtype=complex)
    expected[1] = -1.0  # -|down up>
    np.testing.assert_allclose(s.amplitudes, expected, atol=1e-15)


def test_gate_preserves_norm_and_sector_weights(rng):
    for _ in range(20):
        s = make_random_state(6, rng)
        before = total_charge_distribution(s)
        apply_u1_gate(s, sample_gate_params(rng), int(rng.integers(0, 5)))
        assert s.norm_error() < 1e-12
        after = total_charge_distribution(s)
        assert set(after) == set(before)
        for sector, weight in before.items():
            assert after[sector] == pytest.approx(weight, abs=1e-12)


def test_gate_index_out_of_range(rng):
    s = init_neel(4)
    with pytest.raises(IndexError):
        apply_u1_gate(s, sample_gate_params(rng), 3)  # qubit 4 does not exist


# ---------------------------------------------------------------------------
# measurements and flips


def test_measure_eigenstate_is_certain():
    s = init_neel(4)
    before = s.amplitudes.copy()
    outcome, _ = measure_qubit(s, 0, 0.999999)  # qubit 0 is up
    assert outcome == +1
    np.testing.assert_allclose(s.amplitudes, before, atol=1e-15)


def test_measure_bell_state_collapse():
    amps = np.zeros(4, dtype=complex)
    amps[2] = amps[1] = 1 / math.sqrt(2)  # (|up down> + |down up>) / sqrt 2
    s = StateVector(2, amps)
    v = s.amplitudes.reshape(2, 2)
    p_plus = float(np.sum(np.abs(v[:, 0]) ** 2))
    assert p_plus == pytest.approx(0.5)
    outcome, _ = measure_qubit(s, 0, 0.25)  # u < 1/2 picks +1
    assert outcome == +1
    expected = np.zeros(4, dtype=complex)
    expected[2] = 1.0  # collapsed to |up down>
    np.testing.assert_allclose(s.amplitudes, expected, atol=1e-12)


def test_measure_matches_projector_matrix_and_restores_norm(rng):
    # brute-force oracle: dense projector (1 +- Z_n)/2 applied and normalized
    for trial in range(1000):
        L = int(rng.integers(2, 6))
        s = make_random_state(L, rng)
        n = int(rng.integers(0, L))
        u = float(rng.random())
        z_diag = 1.0 - 2.0 * ((np.arange(1 << L) >> n) & 1)
        reference = s.amplitudes.copy()
        outcome, _ = measure_qubit(s, n, u)
        proj = (1.0 + outcome * z_diag) / 2.0
        projected = reference * proj
        projected /= np.linalg.norm(projected)
        np.testing.assert_allclose(s.amplitudes, projected, atol=1e-12)
        assert s.norm_error() < 1e-12


def test_measurement_preserves_total_charge(rng):
    # project a random state onto one total-charge sector, measure any qubit:
    # the surviving state stays entirely in that sector
    for _ in range(20):
        s = make_random_state(6, rng)
        z_total = subsystem_charge_values(6, 6)
        sector = int(rng.choice(np.array([-2, 0, 2])))
        amps = np.where(z_total == sector, s.amplitudes, 0)
        amps = amps / np.linalg.norm(amps)
        s = StateVector(6, amps)
        measure_qubit(s, int(rng.integers(0, 6)), float(rng.random()))
        assert total_charge_distribution(s) == pytest.approx({sector: 1.0})


def test_pauli_x_flips_bit():
    s = init_neel(2)  # |up down>
    apply_pauli_x(s, 0)
    assert np.flatnonzero(s.amplitudes).tolist() == [3]  # |down down>


def test_pauli_x_is_involution(rng):
    s = make_random_state(5, rng)
    before = s.amplitudes.copy()
    apply_pauli_x(s, 3)
    apply_pauli_x(s, 3)
    np.testing.assert_allclose(s.amplitudes, before, atol=0)


def test_pauli_x_shifts_charge_by_two():
    s = init_neel(4)
    assert total_charge_distribution(s) == {0: 1.0}
    apply_pauli_x(s, 0)  # flips an up qubit
    assert total_charge_distribution(s) == {-2: 1.0}
    apply_pauli_x(s, 1)  # flips a down qubit back up
    assert total_charge_distribution(s) == {0: 1.0}


# ---------------------------------------------------------------------------
# entropies and charge moments


def test_entropy_of_product_state_vanishes():
    s = init_neel(6)
    for ls in range(1, 6):
        assert entanglement_entropy(s, ls) == pytest.approx(0.0, abs=1e-12)


def test_entropy_of_bell_pair():
    amps = np.zeros(4, dtype=complex)
    amps[2] = amps[1] = 1 / math.sqrt(2)
    s = StateVector(2, amps)
    for n in (1.0, 2.0, 3.0):
        assert entanglement_entropy(s, 1, n) == pytest.approx(math.log(2), abs=1e-12)


def test_entropy_complement_symmetry(rng):
    # entropy across one cut is the same seen from either side: reorder the
    # qubits so the right block becomes the low bits and recompute
    for _ in range(20):
        L = 6
        s = make_random_state(L, rng)
        ls = int(rng.integers(1, L))
        left = entanglement_entropy(s, ls)
        swapped = StateVector(
            L, s.amplitudes.reshape(1 << (L - ls), 1 << ls).T.reshape(-1), copy=True
        )
        right = entanglement_entropy(swapped, L - ls)
        assert right == pytest.approx(left, abs=1e-10)
        assert brute_force_entropy(s, ls) == pytest.approx(left, abs=1e-10)


def test_renyi_orders_below_von_neumann(rng):
    for _ in range(50):
        s = make_random_state(5, rng)
        ls = int(rng.integers(1, 5))
        assert entanglement_entropy(s, ls, 2.0) <= entanglement_entropy(s, ls, 1.0) + 1e-12


def test_entropy_validates_arguments(rng):
    s = make_random_state(4, rng)
    with pytest.raises(ValueError):
        entanglement_entropy(s, 0)
    with pytest.raises(ValueError):
        entanglement_entropy(s, 4)
    with pytest.raises(ValueError):
        entanglement_entropy(s, 2, 0.5)


def test_entropy_matches_brute_force_partial_trace(rng):
    for _ in range(100):
        L = int(rng.integers(3, 7))
        s = make_random_state(L, rng)
        ls = int(rng.integers(1, L))
        for n in (1.0, 2.0):
            fast = entanglement_entropy(s, ls, n)
            slow = brute_force_entropy(s, ls, n)
            assert fast == pytest.approx(slow, abs=1e-10)


def test_charge_moments_of_bell_state():
    amps = np.zeros(4, dtype=complex)
    amps[2] = amps[1] = 1 / math.sqrt(2)
    s = StateVector(2, amps)
    m = exact_charge_moments(s, 1)
    assert m.mean == pytest.approx(0.0, abs=1e-12)
    assert m.variance == pytest.approx(1.0, abs=1e-12)


def test_charge_moments_match_dense_operators(rng):
    for _ in range(100):
        s = make_random_state(6, rng)
        ls = int(rng.integers(1, 7))
        fast = exact_charge_moments(s, ls)
        mean, variance = brute_force_moments(s, ls)
        assert fast.mean == pytest.approx(mean, abs=1e-10)
        assert fast.variance == pytest.approx(variance, abs=1e-10)


def test_subsystem_charge_values_range():
    z = subsystem_charge_values(6, 3)
    assert z.min() == -3 and z.max() == 3
    assert set(np.unique(z)) == {-3, -1, 1, 3}


def test_total_charge_distribution_normalized(rng):
    for _ in range(20):
        s = make_random_state(6, rng)
        dist = total_charge_distribution(s)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-10)
        assert all(-6 <= q <= 6 and (q - 6) % 2 == 0 for q in dist)


def test_fidelity_bounds(rng):
    a = make_random_state(4, rng)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)
    b = make_random_state(4, rng)
    assert 0.0 <= fidelity(a, b) <= 1.0

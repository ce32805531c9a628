import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circuit_unitary, gate_unitary, reduced_density, von_neumann
from qtsim.simcore import (Circuit, Gate, GateKind, PureState, SimulationError, SparseState,
                           apply_gate, asap_layers, entropy, measure_sample, overlap, run_pure,
                           run_sparse, states_equal_up_to_global_phase)

UNITARY_KINDS = [k for k in GateKind if k != GateKind.MEASURE]


@st.composite
def circuits(draw, max_width=4, max_gates=12):
    width = draw(st.integers(3, max_width))
    c = Circuit(width)
    for _ in range(draw(st.integers(0, max_gates))):
        kind = draw(st.sampled_from(UNITARY_KINDS))
        ops = draw(st.permutations(range(width)))[: kind.arity]
        c.add(kind, *ops)
    return c


def random_state(width, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << width) + 1j * rng.normal(size=1 << width)
    return PureState.from_amplitudes(v, normalize=True)


class TestGate:
    def test_arity_enforced(self):
        with pytest.raises(SimulationError):
            Gate(GateKind.CNOT, (0,))

    def test_duplicate_operands_rejected(self):
        with pytest.raises(SimulationError):
            Gate(GateKind.TOFFOLI, (0, 1, 1))

    def test_operand_outside_width(self):
        with pytest.raises(SimulationError):
            Circuit(2).add(GateKind.CNOT, 0, 2)

    def test_layers_must_partition(self):
        gates = [Gate(GateKind.X, (0,)), Gate(GateKind.X, (0,))]
        with pytest.raises(SimulationError):
            Circuit(1, gates, layers=[[0, 1]])
        with pytest.raises(SimulationError):
            Circuit(1, gates, layers=[[0]])


class TestApplyGate:
    @pytest.mark.parametrize("kind", UNITARY_KINDS)
    def test_matches_matrix_oracle(self, kind):
        width = 3
        ops = (2, 0, 1)[: kind.arity]
        state = random_state(width, seed=kind.arity)
        got = apply_gate(state, Gate(kind, ops)).amplitudes
        want = gate_unitary(kind.value, ops, width) @ state.amplitudes
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_cnot_flips_target_when_control_set(self):
        # "10": qubit 0 set
        out = apply_gate(PureState.basis(2, "10"), Gate(GateKind.CNOT, (0, 1)))
        assert states_equal_up_to_global_phase(out, PureState.basis(2, "11"))

    def test_measure_rejected(self):
        with pytest.raises(SimulationError):
            apply_gate(PureState.basis(1), Gate(GateKind.MEASURE, (0,)))

    def test_width_check(self):
        with pytest.raises(SimulationError):
            apply_gate(PureState.basis(2), Gate(GateKind.X, (3,)))

    def test_state_is_read_only(self):
        s = PureState.basis(2)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0

    def test_width_limit(self):
        with pytest.raises(SimulationError):
            PureState.basis(25)


class TestRun:
    @settings(max_examples=60, deadline=None)
    @given(circuits())
    def test_dense_equals_unitary_oracle(self, circuit):
        want = circuit_unitary(circuit)[:, 0]
        np.testing.assert_allclose(run_pure(circuit).amplitudes, want, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(circuits())
    def test_sparse_equals_dense(self, circuit):
        dense = run_pure(circuit)
        sparse = run_sparse(circuit).to_dense()
        np.testing.assert_allclose(sparse.amplitudes, dense.amplitudes, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(circuits())
    def test_inverse_returns_to_start(self, circuit):
        start = random_state(circuit.width, 3)
        there = run_pure(circuit, start)
        back = run_pure(circuit.inverse(), there)
        assert states_equal_up_to_global_phase(back, start, 1e-9)

    def test_norm_preserved_on_wide_sparse_state(self):
        c = Circuit(20)
        for q in range(0, 20, 2):
            c.add(GateKind.H, q).add(GateKind.CNOT, q, q + 1)
        s = run_sparse(c)
        assert s.indices.size == 1 << 10
        assert s.norm() == pytest.approx(1.0, abs=1e-12)

    def test_measure_in_exact_mode_rejected(self):
        c = Circuit(1).add(GateKind.MEASURE, 0)
        with pytest.raises(SimulationError):
            run_pure(c)


class TestAsapLayers:
    def test_parallel_gates_share_a_layer(self):
        c = Circuit(4).add("CNOT", 0, 1).add("CNOT", 2, 3).add("TOFFOLI", 1, 2, 0)
        assert asap_layers(c) == [[0, 1], [2]]

    def test_empty(self):
        assert asap_layers(Circuit(3)) == []


class TestMeasureSample:
    def test_deterministic_for_seed(self):
        s = run_pure(Circuit(3).add("H", 0).add("H", 1).add("H", 2))
        assert measure_sample(s, [0, 1, 2], 11) == measure_sample(s, [0, 1, 2], 11)

    def test_basis_state_always_returns_its_bits(self):
        s = PureState.basis(3, "101")
        assert measure_sample(s, [0, 1, 2], 0) == "101"
        assert measure_sample(s, [2], 5) == "1"

    def test_frequencies_follow_born_rule(self):
        s = run_pure(Circuit(1).add("H", 0))
        ones = sum(measure_sample(s, [0], seed) == "1" for seed in range(2000))
        # 3 sigma of Binomial(2000, 0.5)
        assert abs(ones - 1000) < 3 * np.sqrt(500)


class TestEntropy:
    def test_full_pure_state_is_zero(self):
        s = random_state(4, 0)
        assert entropy(s) < 1e-12

    def test_bell_pair_one_bit(self):
        bell = run_pure(Circuit(2).add("H", 0).add("CNOT", 0, 1))
        assert entropy(bell, [0]) == pytest.approx(1.0, abs=1e-12)
        assert entropy(bell, [1]) == pytest.approx(1.0, abs=1e-12)

    def test_product_state_zero(self):
        s = run_pure(Circuit(3).add("H", 0).add("X", 2))
        assert entropy(s, [0]) == 0.0

    @pytest.mark.parametrize("subset", [[0], [1], [2], [0, 2], [1, 3], [0, 1, 3]])
    def test_matches_partial_trace_oracle(self, subset):
        s = random_state(4, 7)
        want = von_neumann(reduced_density(s.amplitudes, subset, 4))
        assert entropy(s, subset) == pytest.approx(want, abs=1e-9)

    def test_subset_out_of_range(self):
        with pytest.raises(SimulationError):
            entropy(PureState.basis(2), [2])


class TestSparseState:
    def test_collapse_renormalises(self):
        s = SparseState.basis(2)
        s.apply(Gate(GateKind.H, (0,)))
        assert s.qubit_probability(0) == pytest.approx(0.5)
        s.collapse(0, 1)
        assert s.indices.tolist() == [1]
        assert s.norm() == pytest.approx(1.0)

    def test_collapse_impossible_outcome(self):
        with pytest.raises(SimulationError):
            SparseState.basis(1).collapse(0, 1)

    def test_overlap_helper(self):
        a = PureState.basis(1, 0)
        b = run_pure(Circuit(1).add("H", 0))
        assert overlap(a, b) == pytest.approx(np.sqrt(0.5))

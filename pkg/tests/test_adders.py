import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import classical_eval
from qtsim.adders import (AdderSpec, build, build_qfa, build_qma, decode_output, encode_index, encode_inputs,
                          family_exponent, infer_family, qma_conformance, read_output_index, registers,
                          resources)
from qtsim.simcore import GateKind, SimulationError, basis_bits, run_pure

QMA_SPECS = [AdderSpec.qma(3, "2^n-1"), AdderSpec.qma(3, "2^n+1"), AdderSpec.qma(4), AdderSpec.qma(5),
             AdderSpec.qma(7), AdderSpec.qma(8), AdderSpec.qma(9)]


def classical_output(spec, a, b):
    return read_output_index(spec, classical_eval(build(spec), encode_index(spec, a, b)))


class TestAdderSpec:
    @pytest.mark.parametrize("text,label", [("qfa:6", "qfa:6"), ("qma:9", "qma:9:2^n+1"),
                                            ("qma:3:minus", "qma:3:2^n-1"), ("qma:8", "qma:8:2^n")])
    def test_parse(self, text, label):
        assert AdderSpec.parse(text).label == label

    @pytest.mark.parametrize("text", ["qfa", "qfa:x", "qma:6", "qma:9:2^n", "qfa:1", "qfa:13", "add:4"])
    def test_parse_rejects(self, text):
        with pytest.raises(SimulationError):
            AdderSpec.parse(text)

    def test_family_inference(self):
        assert infer_family(3) == "2^n+1"
        assert infer_family(3, prefer="2^n-1") == "2^n-1"
        assert infer_family(7) == "2^n-1"
        assert family_exponent(9, "2^n+1") == 3

    def test_operand_ranges(self):
        assert AdderSpec.qfa(6).max_operand == 31
        assert AdderSpec.qma(9).max_operand == 8
        assert AdderSpec.qma(9).operand_bits == 4


class TestQfa:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_exhaustive(self, n):
        spec = AdderSpec.qfa(n)
        for a, b in itertools.product(range(spec.max_operand + 1), repeat=2):
            assert classical_output(spec, a, b) == a + b

    @settings(max_examples=60, deadline=None)
    @given(st.integers(6, 12), st.data())
    def test_random_wide(self, n, data):
        spec = AdderSpec.qfa(n)
        a = data.draw(st.integers(0, spec.max_operand))
        b = data.draw(st.integers(0, spec.max_operand))
        assert classical_output(spec, a, b) == a + b

    def test_inputs_restored(self):
        spec = AdderSpec.qfa(5)
        regs = registers(spec)
        out = classical_eval(build(spec), encode_index(spec, 13, 9))
        assert sum(((out >> q) & 1) << i for i, q in enumerate(regs.a)) == 13

    def test_statevector_run(self):
        spec = AdderSpec.qfa(6)
        state = run_pure(build(spec), encode_inputs(spec, 31, 31))
        index = int(abs(state.amplitudes).argmax())
        assert decode_output(spec, basis_bits(index, registers(spec).output)) == 62

    @pytest.mark.parametrize("n,qubits,tdepth,cdepth", [(6, 11, 9, 13), (7, 13, 11, 16), (8, 15, 13, 19),
                                                       (9, 17, 15, 22)])
    def test_reference_resources(self, n, qubits, tdepth, cdepth):
        r = resources(build_qfa(n))
        assert (r.qubits, r.toffoli_depth, r.cnot_depth) == (qubits, tdepth, cdepth)

    def test_gate_alphabet(self):
        kinds = {g.kind for g in build_qfa(7).gates}
        assert kinds <= {GateKind.CNOT, GateKind.TOFFOLI}


class TestQma:
    @pytest.mark.parametrize("spec", QMA_SPECS, ids=lambda s: s.label)
    def test_exhaustive(self, spec):
        k = spec.size
        for a, b in itertools.product(range(k), repeat=2):
            assert classical_output(spec, a, b) == (a + b) % k

    def test_mod4_exact_resources(self):
        r = resources(build_qma(4))
        assert (r.toffoli_count, r.cnot_count) == (1, 2)

    # achieved (qubits, toffoli count, cnot count, toffoli depth, cnot depth)
    @pytest.mark.parametrize("spec,want", [
        (AdderSpec.qma(3, "2^n-1"), (6, 5, 7, 5, 6)),
        (AdderSpec.qma(3, "2^n+1"), (8, 3, 8, 3, 6)),
        (AdderSpec.qma(4), (4, 1, 2, 1, 1)),
        (AdderSpec.qma(5), (11, 6, 14, 6, 11)),
        (AdderSpec.qma(7), (9, 9, 12, 9, 9)),
        (AdderSpec.qma(8), (6, 3, 6, 3, 4)),
        (AdderSpec.qma(9), (14, 9, 21, 9, 16)),
    ], ids=lambda v: v.label if isinstance(v, AdderSpec) else "")
    def test_resource_regression(self, spec, want):
        r = resources(build(spec))
        assert (r.qubits, r.toffoli_count, r.cnot_count, r.toffoli_depth, r.cnot_depth) == want

    def test_conformance_rows(self):
        rows = qma_conformance()
        assert len(rows) == 7 * 5
        exact = {(r["label"], r["metric"]) for r in rows if r["delta"] == 0}
        assert ("qma:4:2^n", "toffoli_count") in exact
        assert ("qma:9:2^n+1", "qubits") in exact
        for r in rows:
            assert r["delta"] == r["achieved"] - r["target"]

    def test_operands_out_of_range(self):
        with pytest.raises(SimulationError):
            encode_index(AdderSpec.qma(5), 5, 0)

    def test_decode_rejects_wrong_width(self):
        with pytest.raises(SimulationError):
            decode_output(AdderSpec.qma(8), "0101")

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([15, 16, 17, 31, 32, 33]), st.data())
    def test_larger_moduli(self, k, data):
        spec = AdderSpec.qma(k)
        a = data.draw(st.integers(0, k - 1))
        b = data.draw(st.integers(0, k - 1))
        assert classical_output(spec, a, b) == (a + b) % k

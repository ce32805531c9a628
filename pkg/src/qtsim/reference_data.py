"""Reference numbers used for golden-number mode and resource targets.

Attack columns are keyed ``NONE, EXISTING, ALT_CNOT, SAC, APC``.
"""

from __future__ import annotations

ATTACK_COLUMNS = ("NONE", "EXISTING", "ALT_CNOT", "SAC", "APC")

# output bits -> (qubits, toffoli_depth, cnot_depth, rns set, pqa max qubits,
#                 pqa max toffoli depth, pqa max cnot depth)
NPQA_RESOURCES = {
    6: dict(qubits=11, toffoli_depth=9, cnot_depth=13, rns_set=(3, 4, 5),
            pqa_qubits=11, pqa_toffoli_depth=6, pqa_cnot_depth=5),
    7: dict(qubits=13, toffoli_depth=11, cnot_depth=16, rns_set=(4, 5, 9),
            pqa_qubits=14, pqa_toffoli_depth=9, pqa_cnot_depth=7),
    8: dict(qubits=15, toffoli_depth=13, cnot_depth=19, rns_set=(5, 8, 9),
            pqa_qubits=14, pqa_toffoli_depth=9, pqa_cnot_depth=7),
    9: dict(qubits=17, toffoli_depth=15, cnot_depth=22, rns_set=(7, 8, 9),
            pqa_qubits=14, pqa_toffoli_depth=12, pqa_cnot_depth=10),
}

# (modulus, family) -> resources and output probability per attack column
QMA_TABLE = {
    (3, "2^n-1"): dict(qubits=7, toffoli_depth=6, cnot_depth=7, toffoli_count=8, cnot_count=8,
                       prob=(0.967, 0.94, 0.94, 0.927, 0.933)),
    (3, "2^n+1"): dict(qubits=8, toffoli_depth=4, cnot_depth=2, toffoli_count=5, cnot_count=2,
                       prob=(0.978, 0.956, 0.944, 0.956, 0.956)),
    (4, "2^n"): dict(qubits=4, toffoli_depth=1, cnot_depth=1, toffoli_count=1, cnot_count=2,
                     prob=(0.989, 0.989, 0.967, 0.978, 0.978)),
    (5, "2^n+1"): dict(qubits=11, toffoli_depth=6, cnot_depth=5, toffoli_count=8, cnot_count=7,
                       prob=(0.94, 0.92, 0.927, 0.927, 0.911)),
    (7, "2^n-1"): dict(qubits=10, toffoli_depth=12, cnot_depth=10, toffoli_count=14, cnot_count=12,
                       prob=(0.893, 0.887, 0.873, 0.867, 0.84)),
    (8, "2^n"): dict(qubits=6, toffoli_depth=3, cnot_depth=4, toffoli_count=3, cnot_count=6,
                     prob=(0.978, 0.955, 0.944, 0.944, 0.922)),
    (9, "2^n+1"): dict(qubits=14, toffoli_depth=9, cnot_depth=7, toffoli_count=11, cnot_count=13,
                       prob=(0.911, 0.878, 0.822, 0.811, 0.8)),
}

# output bits -> per attack column: (NPQA probability, PQA probability, improvement %)
NPQA_VS_PQA = {
    6: ((0.833, 0.94, 12.8), (0.74, 0.92, 24.3), (0.713, 0.927, 30.0),
        (0.673, 0.927, 37.7), (0.653, 0.911, 39.5)),
    7: ((0.653, 0.911, 39.5), (0.62, 0.878, 41.6), (0.567, 0.822, 45.0),
        (0.473, 0.811, 71.5), (0.44, 0.8, 81.8)),
    8: ((0.616, 0.911, 47.9), (0.46, 0.878, 90.9), (0.382, 0.822, 115.2),
        (0.361, 0.811, 124.7), (0.356, 0.8, 124.7)),
    9: ((0.5, 0.893, 78.6), (0.376, 0.878, 133.5), (0.386, 0.822, 113.0),
        (0.362, 0.811, 124.0), (0.345, 0.8, 131.9)),
}


def npqa_probability(output_bits: int, attack: str) -> float:
    return NPQA_VS_PQA[output_bits][ATTACK_COLUMNS.index(attack)][0]


def pqa_probability(output_bits: int, attack: str) -> float:
    return NPQA_VS_PQA[output_bits][ATTACK_COLUMNS.index(attack)][1]


def improvement_cell(output_bits: int, attack: str) -> float:
    return NPQA_VS_PQA[output_bits][ATTACK_COLUMNS.index(attack)][2]


def qma_probability(modulus: int, family: str, attack: str) -> float:
    return QMA_TABLE[(modulus, family)]["prob"][ATTACK_COLUMNS.index(attack)]

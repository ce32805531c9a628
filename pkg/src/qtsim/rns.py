"""Residue number system layer for parallel quantum addition.

An ``n``-bit addition is split into independent modulo-``m_i`` additions over
a set of pairwise-coprime moduli; the CRT recombines the residue sums.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .adders import AdderSpec, infer_family, registers
from .simcore import SimulationError

# output bits -> reference moduli set
REFERENCE_SETS = {6: (3, 4, 5), 7: (4, 5, 9), 8: (5, 8, 9), 9: (7, 8, 9)}

# moduli with a modulo-adder construction, smallest first
_CANDIDATES = (3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 32, 33, 63, 64, 65)


class DynamicRangeWarning(UserWarning):
    """The moduli set cannot represent every sum of two operands."""


@dataclass(frozen=True)
class RnsSet:
    moduli: tuple[int, ...]

    def __post_init__(self):
        mods = tuple(sorted(int(m) for m in self.moduli))
        if not mods:
            raise SimulationError("moduli set is empty")
        if any(m < 2 for m in mods):
            raise SimulationError(f"moduli must be >= 2, got {mods}")
        for a, b in itertools.combinations(mods, 2):
            if math.gcd(a, b) != 1:
                raise SimulationError(f"moduli {a} and {b} are not coprime")
        object.__setattr__(self, "moduli", mods)

    @property
    def dynamic_range(self) -> int:
        return math.prod(self.moduli)


def required_range(output_bits: int) -> int:
    """Count of distinct sums of two ``(output_bits - 1)``-bit operands."""
    return 2 * ((1 << (output_bits - 1)) - 1) + 1


def select_moduli(output_bits: int, strict: bool = False) -> RnsSet:
    """Moduli set for an ``output_bits``-bit addition.

    Sizes 6 to 9 return the reference sets as they are.  With ``strict``, a
    :class:`DynamicRangeWarning` is issued when the set's range is below
    :func:`required_range`.  Other sizes (``>= 3``) get the smallest
    supported coprime set that covers the required range.
    """
    need = required_range(output_bits)
    if output_bits in REFERENCE_SETS:
        rset = RnsSet(REFERENCE_SETS[output_bits])
        if strict and rset.dynamic_range < need:
            warnings.warn(f"moduli {rset.moduli}: dynamic range {rset.dynamic_range} < {need} required",
                          DynamicRangeWarning, stacklevel=2)
        return rset
    if output_bits < 3:
        raise SimulationError(f"output bits must be >= 3, got {output_bits}")
    best = None
    for size in (2, 3, 4):
        for combo in itertools.combinations(_CANDIDATES, size):
            if math.prod(combo) < need or any(math.gcd(a, b) != 1 for a, b in itertools.combinations(combo, 2)):
                continue
            key = (max(combo), size, math.prod(combo))
            if best is None or key < best[0]:
                best = (key, combo)
    if best is None:
        raise SimulationError(f"no supported moduli set covers {output_bits} output bits")
    return RnsSet(best[1])


def to_residues(x: int, rset: RnsSet) -> tuple[int, ...]:
    if not 0 <= x < rset.dynamic_range:
        raise SimulationError(f"{x} is outside [0, {rset.dynamic_range})")
    return tuple(x % m for m in rset.moduli)


def crt_reconstruct(residues: Sequence[int], rset: RnsSet) -> int:
    if len(residues) != len(rset.moduli):
        raise SimulationError(f"expected {len(rset.moduli)} residues, got {len(residues)}")
    total = rset.dynamic_range
    x = 0
    for r, m in zip(residues, rset.moduli):
        if not 0 <= r < m:
            raise SimulationError(f"residue {r} out of range for modulus {m}")
        partial = total // m
        x += r * partial * pow(partial, -1, m)
    return x % total


@dataclass(frozen=True)
class PqaJob:
    spec: AdderSpec
    qubits: int
    inputs: tuple[int, int]

    def to_dict(self) -> dict:
        return dict(adder=self.spec.label, modulus=self.spec.size, family=self.spec.family,
                    qubits=self.qubits, inputs=list(self.inputs))


@dataclass(frozen=True)
class PqaPlan:
    rset: RnsSet
    operands: tuple[int, int]
    jobs: tuple[PqaJob, ...]

    @property
    def max_qubits(self) -> int:
        return max(j.qubits for j in self.jobs)

    def expected_residues(self) -> tuple[int, ...]:
        return tuple(j.spec.oracle(*j.inputs) for j in self.jobs)

    def reconstruct(self, residue_sums: Sequence[int]) -> int:
        return crt_reconstruct(residue_sums, self.rset)

    def to_dict(self) -> dict:
        return dict(moduli=list(self.rset.moduli), dynamic_range=self.rset.dynamic_range,
                    operands=list(self.operands), jobs=[j.to_dict() for j in self.jobs])


def plan_pqa(a: int, b: int, rset: RnsSet, family_choice: str = "2^n+1",
             device_qubits: int = 20) -> PqaPlan:
    """One modulo-adder job per modulus with inputs ``(a mod m, b mod m)``.

    ``family_choice`` settles moduli that fit two families (3 is both
    ``2^2-1`` and ``2^1+1``).
    """
    if a < 0 or b < 0:
        raise SimulationError("operands must be non-negative")
    jobs = []
    for m in rset.moduli:
        spec = AdderSpec.qma(m, infer_family(m, family_choice))
        width = registers(spec).width
        if width > device_qubits:
            raise SimulationError(f"{spec.label} needs {width} qubits, device has {device_qubits}")
        jobs.append(PqaJob(spec, width, (a % m, b % m)))
    return PqaPlan(rset, (a, b), tuple(jobs))


def aggregate_probability(per_modulus: Sequence[float]) -> float:
    """Parallel-adder success probability: the weakest modulo job."""
    values = [float(p) for p in per_modulus]
    if not values:
        raise SimulationError("no per-modulus probabilities to aggregate")
    if any(not 0.0 <= p <= 1.0 for p in values):
        raise SimulationError(f"probabilities must be in [0, 1], got {values}")
    return min(values)

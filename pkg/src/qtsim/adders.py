"""Victim circuits: ripple-carry full adders and modulo adders.

Register layout (little-endian everywhere):

* QFA with ``n`` output bits: ``A = 0..m-1``, ``B = m..2m-1``, ``Z = 2m`` with
  ``m = n - 1``.  The sum lands in ``B`` (low bits) and ``Z`` (carry-out).
* QMA modulo ``k``: ``A`` and ``B`` hold ``ceil(log2 k)`` bits each starting
  at qubit 0, followed by work qubits.  The output register is listed in
  :class:`Registers` (it is ``B`` except for the ``2^n+1`` family, whose top
  output bit is a work qubit).

Modulo adders are garbage-tolerant: work qubits are *not* returned to zero.
Only the output register is ever measured.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .reference_data import QMA_TABLE
from .simcore import Circuit, GateKind, PureState, SimulationError, asap_layers

FAMILIES = ("2^n-1", "2^n", "2^n+1")
_FAMILY_ALIASES = {
    "2^n-1": "2^n-1", "minus": "2^n-1", "m": "2^n-1",
    "2^n": "2^n", "pow2": "2^n", "p2": "2^n",
    "2^n+1": "2^n+1", "plus": "2^n+1", "p": "2^n+1",
}
QFA_RANGE = (2, 12)


def normalize_family(tag: str) -> str:
    try:
        return _FAMILY_ALIASES[tag.strip().lower()]
    except KeyError:
        raise SimulationError(f"unknown modulus family {tag!r}") from None


def family_exponent(k: int, family: str) -> int:
    """Return ``n`` with ``k == 2**n + offset(family)``; raise if inconsistent."""
    offset = {"2^n-1": -1, "2^n": 0, "2^n+1": 1}[family]
    base = k - offset
    if base < 1 or base & (base - 1):
        raise SimulationError(f"modulus {k} is not of the form {family}")
    n = base.bit_length() - 1
    if (family == "2^n-1" and n < 2) or (family == "2^n" and n < 1) or (family == "2^n+1" and n < 1):
        raise SimulationError(f"modulus {k} is too small for family {family}")
    return n


def infer_family(k: int, prefer: str = "2^n+1") -> str:
    """Family for ``k``; ``prefer`` breaks the tie for 3 (= 2^2-1 = 2^1+1)."""
    options = []
    for fam in FAMILIES:
        try:
            family_exponent(k, fam)
            options.append(fam)
        except SimulationError:
            pass
    if not options:
        raise SimulationError(f"no modulo-adder construction for k={k}")
    return prefer if prefer in options else options[0]


@dataclass(frozen=True)
class AdderSpec:
    """``kind`` is ``"qfa"`` (``size`` = output bits) or ``"qma"`` (``size`` = modulus)."""

    kind: str
    size: int
    family: str | None = None

    def __post_init__(self):
        if self.kind == "qfa":
            lo, hi = QFA_RANGE
            if not lo <= self.size <= hi:
                raise SimulationError(f"QFA output bits must be in [{lo}, {hi}], got {self.size}")
            if self.family is not None:
                raise SimulationError("QFA takes no family")
        elif self.kind == "qma":
            if self.size < 2:
                raise SimulationError("modulus must be >= 2")
            fam = infer_family(self.size) if self.family is None else normalize_family(self.family)
            family_exponent(self.size, fam)
            object.__setattr__(self, "family", fam)
        else:
            raise SimulationError(f"unknown adder kind {self.kind!r}")

    @classmethod
    def qfa(cls, output_bits: int) -> "AdderSpec":
        return cls("qfa", output_bits)

    @classmethod
    def qma(cls, modulus: int, family: str | None = None) -> "AdderSpec":
        return cls("qma", modulus, family)

    @classmethod
    def parse(cls, text: str) -> "AdderSpec":
        """``qfa:<bits>`` or ``qma:<modulus>[:<family>]``."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "qfa" and len(parts) == 2:
                return cls.qfa(int(parts[1]))
            if parts[0] == "qma" and len(parts) in (2, 3):
                return cls.qma(int(parts[1]), parts[2] if len(parts) == 3 else None)
        except ValueError:
            pass
        raise SimulationError(f"bad adder selector {text!r}; use qfa:<bits> or qma:<k>[:<family>]")

    @property
    def operand_bits(self) -> int:
        if self.kind == "qfa":
            return self.size - 1
        return math.ceil(math.log2(self.size))

    @property
    def output_bits(self) -> int:
        return self.size if self.kind == "qfa" else self.operand_bits

    @property
    def max_operand(self) -> int:
        return (1 << (self.size - 1)) - 1 if self.kind == "qfa" else self.size - 1

    def oracle(self, a: int, b: int) -> int:
        return a + b if self.kind == "qfa" else (a + b) % self.size

    @property
    def label(self) -> str:
        if self.kind == "qfa":
            return f"qfa:{self.size}"
        return f"qma:{self.size}:{self.family}"


@dataclass(frozen=True)
class Registers:
    width: int
    a: tuple[int, ...]
    b: tuple[int, ...]
    output: tuple[int, ...]


@dataclass(frozen=True)
class ResourceReport:
    qubits: int
    toffoli_count: int
    cnot_count: int
    toffoli_depth: int
    cnot_depth: int

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# building blocks


def _ripple_add(c: Circuit, a: list[int], b: list[int], z: int | None) -> None:
    """In-place ``b += a`` without ancilla; carry-out XORed into ``z`` when given.

    With ``z`` the structure reproduces Toffoli depth ``2m-1`` and CNOT depth
    ``3m-2`` for ``m``-bit operands under ASAP layering.
    """
    m = len(a)
    if m == 1:
        if z is not None:
            c.add("TOFFOLI", a[0], b[0], z)
        c.add("CNOT", a[0], b[0])
        return
    for i in range(1, m):
        c.add("CNOT", a[i], b[i])
    if z is not None:
        c.add("CNOT", a[m - 1], z)
    for i in range(m - 2, 0, -1):
        c.add("CNOT", a[i], a[i + 1])
    for i in range(m - 1):
        c.add("TOFFOLI", b[i], a[i], a[i + 1])
    if z is not None:
        c.add("TOFFOLI", b[m - 1], a[m - 1], z)
    for i in range(m - 1, 0, -1):
        c.add("CNOT", a[i], b[i])
        c.add("TOFFOLI", b[i - 1], a[i - 1], a[i])
    for i in range(1, m - 1):
        c.add("CNOT", a[i], a[i + 1])
    for i in range(m):
        c.add("CNOT", a[i], b[i])


def _mod8_add(c: Circuit, a: list[int], b: list[int]) -> None:
    # 3 Toffoli / 6 CNOT; borrows a[1] as scratch for carry c1 and restores it.
    c.add("CNOT", a[1], b[1])
    c.add("CNOT", a[2], b[2])
    c.add("CNOT", a[1], b[2])
    c.add("TOFFOLI", a[0], b[0], a[1])
    c.add("TOFFOLI", b[1], a[1], b[2])
    c.add("CNOT", a[1], b[1])
    c.add("TOFFOLI", a[0], b[0], a[1])
    c.add("CNOT", a[1], b[1])
    c.add("CNOT", a[0], b[0])


# --------------------------------------------------------------------------
# builders


def registers(spec: AdderSpec) -> Registers:
    m = spec.operand_bits
    a = tuple(range(m))
    b = tuple(range(m, 2 * m))
    if spec.kind == "qfa":
        return Registers(2 * m + 1, a, b, b + (2 * m,))
    n = family_exponent(spec.size, spec.family)
    if spec.family == "2^n":
        return Registers(2 * m, a, b, b)
    if spec.family == "2^n-1":
        return Registers(3 * n, a, b, b)
    # 2^n+1: low n bits of B plus the work qubit r
    width = 3 * n + 5
    return Registers(width, a, b, b[:n] + (width - 1,))


def build_qfa(output_bits: int) -> Circuit:
    """Ripple-carry full adder, ``2n-1`` qubits, no ancilla."""
    spec = AdderSpec.qfa(output_bits)
    regs = registers(spec)
    c = Circuit(regs.width, label=spec.label)
    _ripple_add(c, list(regs.a), list(regs.b), regs.output[-1])
    return c


def build_qma(modulus: int, family: str | None = None) -> Circuit:
    """Modulo-``k`` adder writing ``(a + b) mod k`` into the output register.

    Constructions:

    * ``2^n``: carry-free ripple adder (hand-tuned for n = 2, 3).
    * ``2^n-1``: full add with carry ``z``, then an increment by
      ``f = z XOR all_ones(low bits)`` (end-around carry that also folds the
      all-ones pattern to zero).
    * ``2^n+1``: add the low ``n`` bits, then subtract ``D = carry + a_n + b_n``
      via a borrow chain (``2^n == -1 mod k``), with fix-ups for the two
      wrap-around cases.
    """
    spec = AdderSpec.qma(modulus, family)
    regs = registers(spec)
    c = Circuit(regs.width, label=spec.label)
    a, b = list(regs.a), list(regs.b)
    n = family_exponent(spec.size, spec.family)
    if spec.family == "2^n":
        if n == 1:
            c.add("CNOT", a[0], b[0])
        elif n == 2:
            c.add("TOFFOLI", a[0], b[0], b[1])
            c.add("CNOT", a[0], b[0])
            c.add("CNOT", a[1], b[1])
        elif n == 3:
            _mod8_add(c, a, b)
        else:
            _ripple_add(c, a, b, None)
        return c
    if spec.family == "2^n-1":
        z = 2 * n
        prefix = [b[0]] + list(range(2 * n + 1, 3 * n))  # prefix[i] = AND(b_0..b_i)
        _ripple_add(c, a, b, z)
        for i in range(1, n):
            c.add("TOFFOLI", prefix[i - 1], b[i], prefix[i])
        c.add("CNOT", prefix[n - 1], z)
        for i in range(n - 1, 0, -1):
            c.add("TOFFOLI", z, prefix[i - 1], b[i])
        c.add("CNOT", z, b[0])
        return c
    # 2^n+1
    carry, e = 2 * n + 2, 2 * n + 3
    beta = [carry] + list(range(2 * n + 4, 3 * n + 4))  # beta[0] is the decrement flag g
    r = 3 * n + 4
    low_a, low_b = a[:n], b[:n]
    _ripple_add(c, low_a, low_b, carry)
    c.add("CNOT", a[n], carry)
    c.add("CNOT", b[n], carry)
    c.add("TOFFOLI", a[n], b[n], e)
    c.add("CNOT", e, carry)
    for q in low_b:
        c.add("X", q)
    for i in range(1, n + 1):
        c.add("TOFFOLI", beta[i - 1], low_b[i - 1], beta[i])
    for i in range(n - 1, -1, -1):
        c.add("CNOT", beta[i], low_b[i])
    c.add("CNOT", beta[n], r)
    for q in low_b:
        c.add("X", q)
    c.add("CNOT", e, r)
    for q in low_b:
        c.add("CNOT", r, q)
    return c


def build(spec: AdderSpec) -> Circuit:
    if spec.kind == "qfa":
        return build_qfa(spec.size)
    return build_qma(spec.size, spec.family)


# --------------------------------------------------------------------------
# encoding / decoding


def encode_index(spec: AdderSpec, a: int, b: int) -> int:
    if not (0 <= a <= spec.max_operand and 0 <= b <= spec.max_operand):
        raise SimulationError(f"operands ({a}, {b}) exceed {spec.label} input range [0, {spec.max_operand}]")
    regs = registers(spec)
    index = 0
    for i, q in enumerate(regs.a):
        index |= ((a >> i) & 1) << q
    for i, q in enumerate(regs.b):
        index |= ((b >> i) & 1) << q
    return index


def encode_inputs(spec: AdderSpec, a: int, b: int) -> PureState:
    """Basis state with A and B loaded little-endian, work qubits zero."""
    return PureState.basis(registers(spec).width, encode_index(spec, a, b))


def decode_output(spec: AdderSpec, bits: str) -> int:
    """Little-endian value of a measured output-register bitstring."""
    if len(bits) != spec.output_bits or set(bits) - {"0", "1"}:
        raise SimulationError(f"{spec.label} expects {spec.output_bits} output bits, got {bits!r}")
    return sum(1 << i for i, ch in enumerate(bits) if ch == "1")


def read_output_index(spec: AdderSpec, index: int) -> int:
    regs = registers(spec)
    return sum(((index >> q) & 1) << i for i, q in enumerate(regs.output))


# --------------------------------------------------------------------------
# resources


def resources(circuit: Circuit) -> ResourceReport:
    layers = asap_layers(circuit)
    kinds = [{circuit.gates[i].kind for i in layer} for layer in layers]
    return ResourceReport(
        qubits=circuit.width,
        toffoli_count=circuit.count(GateKind.TOFFOLI),
        cnot_count=circuit.count(GateKind.CNOT),
        toffoli_depth=sum(GateKind.TOFFOLI in k for k in kinds),
        cnot_depth=sum(GateKind.CNOT in k for k in kinds),
    )


def qma_conformance() -> list[dict]:
    """Per-metric comparison of the modulo adders against the reference
    resource table.  Rows with ``delta == 0`` match exactly."""
    rows = []
    for (k, fam), target in QMA_TABLE.items():
        got = resources(build_qma(k, fam)).as_dict()
        for metric in ("qubits", "toffoli_count", "cnot_count", "toffoli_depth", "cnot_depth"):
            rows.append(dict(label=f"qma:{k}:{fam}", metric=metric, target=target[metric],
                             achieved=got[metric], delta=got[metric] - target[metric]))
    return rows

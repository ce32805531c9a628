"""Parametric trapped-ion noise applied by Monte-Carlo trajectories.

Channels, in the order they act after each ideal gate:

* depolarizing: with probability ``p1`` (one operand), ``p2`` (two operands)
  or ``p2 * toffoli_factor`` (Toffoli), a uniformly random non-identity Pauli
  string over the operands;
* stochastic crosstalk: every other qubit independently receives a random
  X/Y/Z with probability ``ct_strength * ct_decay**d``;
* coherent crosstalk: ``exp(-i theta/2 Z_t Z_s)`` between the gate target
  ``t`` and each spectator ``s``, ``theta = ct_coherent_angle * ct_decay**d``;
* readout: a MEASURE collapses the qubit, then flips the reported bit with
  probability ``p_meas``.

``d`` is the smallest chain distance between the spectator and any operand.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .simcore import Circuit, Gate, GateKind, PureState, SimulationError, SparseState, _bit
from .tenancy import DeviceModel

PROBABILITY_FIELDS = ("p1", "p2", "p_meas", "ct_strength")
CALIBRATABLE = ("p1", "p2", "p_meas", "ct_strength", "ct_coherent_angle")
MAX_COHERENT_ANGLE = math.pi / 8
MIN_CALIBRATION_BUDGET = 100  # one standard error <= 0.05 at p = 0.5

_PAULI = (None, GateKind.X, GateKind.Y, GateKind.Z)
_PAULI_LABEL = "IXYZ"


@dataclass(frozen=True)
class NoiseParams:
    """Noise strengths.  Probabilities must lie in ``[0, 1]``."""

    p1: float = 1e-3
    p2: float = 1e-2
    p_meas: float = 5e-3
    ct_strength: float = 2e-3
    ct_coherent_angle: float = 0.01
    ct_decay: float = 0.8
    toffoli_factor: float = 2.0

    def __post_init__(self):
        for name in dataclasses.fields(self):
            object.__setattr__(self, name.name, float(getattr(self, name.name)))
        for name in PROBABILITY_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SimulationError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.ct_decay <= 1.0:
            raise SimulationError(f"ct_decay must be in (0, 1], got {self.ct_decay}")
        if not 0.0 <= self.ct_coherent_angle <= MAX_COHERENT_ANGLE:
            raise SimulationError(f"ct_coherent_angle must be in [0, pi/8], got {self.ct_coherent_angle}")
        if self.toffoli_factor < 1.0:
            raise SimulationError(f"toffoli_factor must be >= 1, got {self.toffoli_factor}")

    @classmethod
    def ideal(cls) -> "NoiseParams":
        return cls(p1=0.0, p2=0.0, p_meas=0.0, ct_strength=0.0, ct_coherent_angle=0.0)

    @property
    def is_ideal(self) -> bool:
        return all(getattr(self, f) == 0.0 for f in CALIBRATABLE)

    def replace(self, **changes: float) -> "NoiseParams":
        return dataclasses.replace(self, **changes)

    def gate_error(self, gate: Gate) -> float:
        """Depolarizing probability for ``gate`` (0 for MEASURE)."""
        arity = gate.kind.arity
        if gate.kind == GateKind.MEASURE:
            return 0.0
        if arity == 1:
            return self.p1
        if arity == 2:
            return self.p2
        return min(1.0, self.p2 * self.toffoli_factor)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SimulationError(f"unknown noise keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class TrajectoryEvent:
    """One stochastic event: ``kind`` is a Pauli label such as ``"XZ"``,
    ``"ZZ"`` for a coherent rotation, or ``"READOUT_FLIP"``."""

    gate_index: int
    kind: str
    qubits: tuple[int, ...]


def spectator_channels(gate: Gate, layout: DeviceModel, params: NoiseParams,
                       width: int | None = None) -> list[tuple[int, float, float]]:
    """``(qubit, error probability, coherent angle)`` for every non-operand
    qubit of a multi-qubit gate.  ``width`` limits spectators to the first
    ``width`` device qubits (the whole device by default)."""
    if not gate.kind.is_multi_qubit:
        return []
    width = layout.qubit_count if width is None else width
    if width > layout.qubit_count:
        raise SimulationError(f"circuit width {width} exceeds the {layout.qubit_count}-qubit device")
    op_pos = [layout.position(q) for q in gate.operands]
    out = []
    for q in range(width):
        if q in gate.operands:
            continue
        d = min(abs(layout.position(q) - p) for p in op_pos)
        scale = params.ct_decay ** d
        out.append((q, params.ct_strength * scale, params.ct_coherent_angle * scale))
    return out


@dataclass(frozen=True)
class _Step:
    gate: Gate
    p_gate: float
    spect_q: np.ndarray
    spect_p: np.ndarray
    spect_theta: np.ndarray


def _compile_step(gate: Gate, layout: DeviceModel, params: NoiseParams, width: int) -> _Step:
    channels = spectator_channels(gate, layout, params, width)
    active = [c for c in channels if c[1] > 0.0 or c[2] > 0.0]
    q = np.array([c[0] for c in active], dtype=np.int64)
    p = np.array([c[1] for c in active], dtype=np.float64)
    th = np.array([c[2] for c in active], dtype=np.float64)
    return _Step(gate, params.gate_error(gate), q, p, th)


def _apply_pauli(state: SparseState, pauli: int, q: int) -> None:
    state.apply(Gate(_PAULI[pauli], (q,)))


def _noisy_step(state: SparseState, step: _Step, index: int, p_meas: float,
                rng: np.random.Generator, events: list | None) -> int | None:
    """Advance ``state`` through one noisy gate; returns the readout bit for
    MEASURE, else ``None``."""
    gate = step.gate
    if gate.kind == GateKind.MEASURE:
        q = gate.target
        outcome = int(rng.random() < state.qubit_probability(q))
        state.collapse(q, outcome)
        if p_meas > 0.0 and rng.random() < p_meas:
            if events is not None:
                events.append(TrajectoryEvent(index, "READOUT_FLIP", (q,)))
            return outcome ^ 1
        return outcome

    state.apply(gate)
    ops = gate.operands
    if step.p_gate > 0.0 and rng.random() < step.p_gate:
        code = int(rng.integers(1, 4 ** len(ops)))
        label = []
        for k, q in enumerate(ops):
            pauli = (code >> (2 * k)) & 3
            label.append(_PAULI_LABEL[pauli])
            if pauli:
                _apply_pauli(state, pauli, q)
        if events is not None:
            events.append(TrajectoryEvent(index, "".join(label), ops))
    if step.spect_q.size:
        hits = np.flatnonzero(rng.random(step.spect_q.size) < step.spect_p)
        for h in hits:
            pauli = int(rng.integers(1, 4))
            q = int(step.spect_q[h])
            _apply_pauli(state, pauli, q)
            if events is not None:
                events.append(TrajectoryEvent(index, _PAULI_LABEL[pauli], (q,)))
        if np.any(step.spect_theta):
            zt = 1 - 2 * _bit(state.indices, gate.target)
            zs = 1 - 2 * ((state.indices[:, None] >> step.spect_q[None, :]) & 1)
            state.apply_phase(np.exp(-0.5j * zt * (zs @ step.spect_theta)))
            if events is not None:
                events.append(TrajectoryEvent(index, "ZZ", (gate.target,)))
    return None


def apply_noisy_gate(state: PureState | SparseState, gate: Gate, layout: DeviceModel,
                     params: NoiseParams, rng: np.random.Generator,
                     ) -> tuple[PureState | SparseState, list[TrajectoryEvent]]:
    """One trajectory step; returns the new state (same container type as
    ``state``) and the events that fired.

    For a MEASURE the returned state is collapsed; the reported bit is the
    collapsed value, inverted if a ``READOUT_FLIP`` event is present.
    """
    gate.check_width(state.width)
    sparse = state.copy() if isinstance(state, SparseState) else state.to_sparse()
    events: list[TrajectoryEvent] = []
    _noisy_step(sparse, _compile_step(gate, layout, params, state.width), 0, params.p_meas, rng, events)
    return (sparse if isinstance(state, SparseState) else sparse.to_dense()), events


@dataclass
class TrajectoryResult:
    state: SparseState
    readout: dict[int, int]
    events: list[TrajectoryEvent] = field(default_factory=list)


class NoisyProgram:
    """A circuit with its noise channels precomputed for repeated trajectories.

    With ``classical_tail`` (the default) the state is Born-sampled down to a
    single basis state right after the last H gate.  Every later gate, Pauli
    error and ZZ rotation is a permutation times phases, so from that point
    the readout distribution depends only on ``|amplitude|**2`` and the
    sampling leaves it unchanged; it keeps the support at one entry when
    attackers hold many qubits in superposition.
    """

    def __init__(self, circuit: Circuit, layout: DeviceModel, params: NoiseParams,
                 classical_tail: bool = True):
        if circuit.width > layout.qubit_count:
            raise SimulationError(f"circuit width {circuit.width} exceeds the {layout.qubit_count}-qubit device")
        self.circuit = circuit
        self.layout = layout
        self.params = params
        self.steps = [_compile_step(g, layout, params, circuit.width) for g in circuit.gates]
        h_at = [i for i, g in enumerate(circuit.gates) if g.kind == GateKind.H]
        self._tail_start = (h_at[-1] if h_at else -1) if classical_tail else None

    def run(self, initial: SparseState | int, rng: np.random.Generator, record: bool = False) -> TrajectoryResult:
        if isinstance(initial, SparseState):
            state = initial.copy()
        else:
            state = SparseState.basis(self.circuit.width, int(initial))
        events: list[TrajectoryEvent] | None = [] if record else None
        readout: dict[int, int] = {}
        p_meas = self.params.p_meas
        if self._tail_start == -1:
            _sample_basis(state, rng)
        for i, step in enumerate(self.steps):
            bit = _noisy_step(state, step, i, p_meas, rng, events)
            if bit is not None:
                readout[step.gate.target] = bit
            if i == self._tail_start:
                _sample_basis(state, rng)
        return TrajectoryResult(state, readout, events or [])


def _sample_basis(state: SparseState, rng: np.random.Generator) -> None:
    if state.indices.size <= 1:
        if state.indices.size:
            state.amplitudes = np.ones(1, dtype=np.complex128)
        return
    prob = np.abs(state.amplitudes) ** 2
    pick = int(np.searchsorted(np.cumsum(prob), rng.random() * prob.sum(), side="right"))
    pick = min(pick, prob.size - 1)
    state.indices = state.indices[pick:pick + 1].copy()
    state.amplitudes = np.ones(1, dtype=np.complex128)


def trajectory_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one trajectory, derived from the master seed and a
    tuple of non-negative integers identifying it."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


# --------------------------------------------------------------------------
# calibration


class CalibrationTarget(Protocol):
    def __call__(self, params: NoiseParams, shots: int, seed: int) -> float:
        """Simulated mean output probability with ``shots`` trajectories per case."""


DEFAULT_GRIDS: dict[str, np.ndarray] = {
    "p1": np.geomspace(1e-5, 0.1, 41),
    "p2": np.geomspace(1e-5, 0.2, 44),
    "p_meas": np.geomspace(1e-5, 0.2, 44),
    "ct_strength": np.geomspace(1e-5, 0.2, 44),
    "ct_coherent_angle": np.geomspace(1e-4, MAX_COHERENT_ANGLE, 32),
}


@dataclass
class CalibrationResult:
    params: NoiseParams
    residual: float
    evaluations: int
    history: list[dict] = field(default_factory=list)


def calibrate(targets: Sequence[tuple[CalibrationTarget | Callable, float]], free: Sequence[str],
              budget: int = 300, start: NoiseParams | None = None, seed: int = 0,
              grids: dict[str, Sequence[float]] | None = None, sweeps: int = 3,
              coarse_stride: int = 5, refine: int = 4, loss: str = "sse") -> CalibrationResult:
    """Fit ``free`` parameters by coordinate descent on logarithmic grids.

    The objective is the sum of squared deviations (``loss="sse"``) or the
    largest absolute deviation (``loss="max"``) between each target's
    simulated probability and its expected value.  Every evaluation reuses
    ``seed`` (common random numbers), so the objective is a deterministic
    function of the parameters.  Each coordinate is searched coarse-to-fine:
    every ``coarse_stride``-th grid point, then the neighbourhood of the best
    one, then ``refine`` log-spaced points on each side of the winner between
    its grid neighbours.  Ties go to the smaller value.

    Args:
        targets: ``(simulate, expected)`` pairs; ``simulate(params, shots, seed)``
            returns a probability.
        free: parameter names to fit.
        budget: trajectories per input case for each evaluation.
        start: initial parameters (defaults to :class:`NoiseParams`).

    Raises:
        SimulationError: on empty targets, unknown parameters, or a budget
            too small to resolve probabilities to 0.05.
    """
    if not targets:
        raise SimulationError("calibration needs at least one target")
    if loss not in ("sse", "max"):
        raise SimulationError(f"loss must be 'sse' or 'max', got {loss!r}")
    bad = [f for f in free if f not in CALIBRATABLE]
    if bad or not free:
        raise SimulationError(f"free parameters must be a nonempty subset of {CALIBRATABLE}, got {list(free)}")
    if budget < MIN_CALIBRATION_BUDGET:
        raise SimulationError(f"budget {budget} cannot resolve probabilities to 0.05 "
                              f"(need >= {MIN_CALIBRATION_BUDGET} trajectories per case)")
    grids = {name: np.asarray(g, dtype=float) for name, g in {**DEFAULT_GRIDS, **(grids or {})}.items()}
    params = start or NoiseParams()
    cache: dict[tuple, float] = {}
    history: list[dict] = []

    def objective(p: NoiseParams) -> float:
        key = tuple(getattr(p, f) for f in CALIBRATABLE)
        if key not in cache:
            sims = [float(sim(p, budget, seed)) for sim, _ in targets]
            devs = [s - e for s, (_, e) in zip(sims, targets)]
            cache[key] = max(abs(d) for d in devs) if loss == "max" else sum(d * d for d in devs)
            history.append(dict(params={f: getattr(p, f) for f in free}, simulated=sims, residual=cache[key]))
        return cache[key]

    def search(p: NoiseParams, name: str) -> NoiseParams:
        grid = grids[name]
        scores: dict[int, float] = {}

        def score(i: int) -> float:
            if i not in scores:
                scores[i] = objective(p.replace(**{name: float(grid[i])}))
            return scores[i]

        best = min(range(0, grid.size, coarse_stride), key=lambda i: (score(i), i))
        lo, hi = max(0, best - coarse_stride + 1), min(grid.size, best + coarse_stride)
        best = min(range(lo, hi), key=lambda i: (score(i), i))
        value = float(grid[best])
        if refine > 0:
            local = np.geomspace(grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)], 2 * refine + 1)
            value = min(local, key=lambda v: (objective(p.replace(**{name: float(v)})), v))
        return p.replace(**{name: float(value)})

    for _ in range(sweeps):
        before = params
        for name in free:
            params = search(params, name)
        if params == before:
            break
    return CalibrationResult(params, objective(params), len(cache), history)

"""Exact statevector simulation of small quantum circuits.

Convention used everywhere in this package: qubit 0 is the *most
significant* bit of the basis-state index. For a 3-qubit register the
basis index 4 = 0b100 is |100>, i.e. qubit 0 in |1> and qubits 1, 2 in
|0>. All decoders and tests rely on this ordering.

Rotation gates follow the standard -i*theta/2 generator convention,
so RY(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]] and the
Z expectation after RY(theta)|0> is cos(theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ROTATION_KINDS = frozenset({"rx", "ry", "rz"})
GATE_KINDS = ROTATION_KINDS | frozenset({"h", "x", "cnot"})

_NORM_TOL = 1e-10

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    """2x2 unitary for an rx/ry/rz gate at the given angle (radians)."""
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    raise ValueError(f"not a rotation gate: {kind!r}")


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitudes over the 2**n_qubits basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.shape[0] != 2**self.n_qubits:
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for "
                f"{self.n_qubits} qubits, got shape {amps.shape}"
            )
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm_sq!r}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        """The all-|0> computational basis state."""
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)


@dataclass(frozen=True)
class GateOp:
    """One gate: a kind, target/control wires, and an angle binding.

    Rotation gates carry either a constant ``angle`` (radians) or a
    ``param_index`` into the circuit's trainable parameter vector,
    never both. Non-rotation gates carry neither.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None
    param_index: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ROTATION_KINDS:
            if (self.angle is None) == (self.param_index is None):
                raise ValueError(
                    f"{self.kind} needs exactly one of angle / param_index"
                )
        elif self.angle is not None or self.param_index is not None:
            raise ValueError(f"{self.kind} takes no angle binding")
        if self.kind == "cnot":
            if self.control is None:
                raise ValueError("cnot requires a control qubit")
            if self.control == self.target:
                raise ValueError("cnot control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")


def rx(target: int, angle: float | None = None, *, param: int | None = None) -> GateOp:
    return GateOp("rx", target, angle=angle, param_index=param)


def ry(target: int, angle: float | None = None, *, param: int | None = None) -> GateOp:
    return GateOp("ry", target, angle=angle, param_index=param)


def rz(target: int, angle: float | None = None, *, param: int | None = None) -> GateOp:
    return GateOp("rz", target, angle=angle, param_index=param)


def h(target: int) -> GateOp:
    return GateOp("h", target)


def x(target: int) -> GateOp:
    return GateOp("x", target)


def cnot(control: int, target: int) -> GateOp:
    return GateOp("cnot", target, control=control)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate program over n_qubits wires with n_params trainables."""

    n_qubits: int
    ops: tuple[GateOp, ...]
    n_params: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.n_params < 0:
            raise ValueError("n_params must be non-negative")
        object.__setattr__(self, "ops", tuple(self.ops))
        seen = set()
        for op in self.ops:
            if not 0 <= op.target < self.n_qubits:
                raise ValueError(
                    f"target {op.target} out of range for {self.n_qubits} qubits"
                )
            if op.control is not None and not 0 <= op.control < self.n_qubits:
                raise ValueError(
                    f"control {op.control} out of range for {self.n_qubits} qubits"
                )
            if op.param_index is not None:
                if not 0 <= op.param_index < self.n_params:
                    raise ValueError(
                        f"param index {op.param_index} out of range "
                        f"[0, {self.n_params})"
                    )
                seen.add(op.param_index)
        missing = set(range(self.n_params)) - seen
        if missing:
            raise ValueError(f"unreferenced parameter indices: {sorted(missing)}")


def _sel(n: int, axis_bits: dict[int, int]) -> tuple:
    """Index tuple fixing bit values on the given qubit axes."""
    sel: list = [slice(None)] * n
    for axis, bit in axis_bits.items():
        sel[axis] = bit
    return tuple(sel)


def _apply_single_raw(amps: np.ndarray, n: int, target: int, m: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix on one qubit without materializing the full unitary."""
    a = amps.reshape([2] * n)
    a0 = np.take(a, 0, axis=target)
    a1 = np.take(a, 1, axis=target)
    out = np.empty_like(a)
    out[_sel(n, {target: 0})] = m[0, 0] * a0 + m[0, 1] * a1
    out[_sel(n, {target: 1})] = m[1, 0] * a0 + m[1, 1] * a1
    return out.reshape(-1)


def _apply_cnot_raw(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    a = amps.reshape([2] * n)
    out = a.copy()
    sel10 = _sel(n, {control: 1, target: 0})
    sel11 = _sel(n, {control: 1, target: 1})
    out[sel10] = a[sel11]
    out[sel11] = a[sel10]
    return out.reshape(-1)


def resolve_angle(op: GateOp, params) -> float | None:
    """Concrete rotation angle for an op, pulling trainables from params."""
    if op.param_index is None:
        return op.angle
    params = np.asarray(params, dtype=float)
    if op.param_index >= params.shape[0]:
        raise ValueError(
            f"unbound parameter index {op.param_index} "
            f"(got {params.shape[0]} parameters)"
        )
    return float(params[op.param_index])


def _apply_op_raw(amps: np.ndarray, n: int, op: GateOp, angle: float | None) -> np.ndarray:
    if op.target >= n or (op.control is not None and op.control >= n):
        raise ValueError(f"gate {op.kind} wires out of range for {n} qubits")
    if op.kind == "cnot":
        return _apply_cnot_raw(amps, n, op.control, op.target)
    if op.kind == "h":
        return _apply_single_raw(amps, n, op.target, _H_MATRIX)
    if op.kind == "x":
        return _apply_single_raw(amps, n, op.target, _X_MATRIX)
    return _apply_single_raw(amps, n, op.target, rotation_matrix(op.kind, angle))


def apply_gate(state: StateVector, op: GateOp, params=()) -> StateVector:
    """Apply a single gate, returning a new state (value semantics)."""
    angle = resolve_angle(op, params)
    amps = _apply_op_raw(state.amplitudes, state.n_qubits, op, angle)
    return StateVector(state.n_qubits, amps)


def run_circuit(initial: StateVector, circuit: Circuit, params=()) -> StateVector:
    """Run every op of the circuit in order, starting from ``initial``."""
    params = np.asarray(params, dtype=float)
    if circuit.n_qubits != initial.n_qubits:
        raise ValueError(
            f"circuit has {circuit.n_qubits} qubits, state has {initial.n_qubits}"
        )
    if params.shape != (circuit.n_params,):
        raise ValueError(
            f"expected {circuit.n_params} parameters, got shape {params.shape}"
        )
    amps = run_circuit_raw(initial.amplitudes, circuit, params)
    return StateVector(circuit.n_qubits, amps)


def run_circuit_raw(amps: np.ndarray, circuit: Circuit, params, angle_override=None) -> np.ndarray:
    """Raw-array circuit run; ``angle_override`` maps op position -> angle.

    Validation lives in run_circuit; this path is reused by the gradient
    code, which re-runs a circuit many times with one angle shifted.
    """
    n = circuit.n_qubits
    for j, op in enumerate(circuit.ops):
        if angle_override is not None and j in angle_override:
            angle = angle_override[j]
        else:
            angle = resolve_angle(op, params)
        amps = _apply_op_raw(amps, n, op, angle)
    return amps


def probabilities(state: StateVector) -> np.ndarray:
    """Measurement probabilities |amplitude|^2 per basis state."""
    return np.abs(state.amplitudes) ** 2


def _check_qubit(state: StateVector, qubit: int):
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def marginal_prob_one(state: StateVector, qubit: int) -> float:
    """Probability that the given qubit reads 1."""
    _check_qubit(state, qubit)
    p = probabilities(state).reshape([2] * state.n_qubits)
    return float(np.take(p, 1, axis=qubit).sum())


def expectation_z(state: StateVector, qubit: int) -> float:
    """Pauli-Z expectation <Z> = P(0) - P(1) of one qubit, in [-1, 1]."""
    return 1.0 - 2.0 * marginal_prob_one(state, qubit)

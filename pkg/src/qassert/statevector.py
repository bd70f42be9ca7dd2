"""Dense state-vector simulation.

Qubit ``q`` of an ``n``-qubit register file is bit ``q`` of the basis-state
index (little-endian), so a register whose qubits are ``(q0, q1, ...)`` reads
as the integer ``sum(bit(q_k) << k)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .stats import Histogram

NORM_TOL = 1e-10
DRIFT_TOL = 1e-6


def max_qubits() -> int:
    return int(os.environ.get("QASSERT_MAX_QUBITS", "24"))


class ResourceError(RuntimeError):
    """A simulation would exceed the configured memory limit."""


class SimulationError(RuntimeError):
    """The state vector lost normalization beyond the drift alarm."""


class StateVector:
    """Amplitudes of ``num_qubits`` qubits, mutated in place by :func:`apply`."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        size = amps.shape[0] if amps.ndim == 1 else 0
        if size == 0 or size & (size - 1):
            raise ValueError(f"amplitude vector length must be a power of two, got {amps.shape}")
        self.num_qubits = size.bit_length() - 1
        self.amplitudes = amps

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class Bitstring:
    """One measured shot; ``bits[i]`` is the reading of qubit ``i``."""

    value: int
    width: int

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.width))

    def __len__(self) -> int:
        return self.width

    def __str__(self) -> str:
        # printed ket-style, qubit 0 rightmost
        return format(self.value, f"0{self.width}b") if self.width else ""


def init(num_qubits: int) -> StateVector:
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    limit = max_qubits()
    if num_qubits > limit:
        raise ResourceError(f"{num_qubits} qubits exceeds the limit of {limit} (QASSERT_MAX_QUBITS)")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps)


def apply(state: StateVector, gate, targets, controls=()) -> StateVector:
    """Apply ``gate`` to ``targets``, conditioned on every control reading 1.

    Row/column index bit ``k`` of ``gate`` corresponds to ``targets[k]``.
    The state is updated in place and returned.
    """
    n = state.num_qubits
    targets = tuple(int(t) for t in targets)
    controls = tuple(int(c) for c in controls)
    gate = np.asarray(gate, dtype=np.complex128)
    k = len(targets)
    if gate.shape != (1 << k, 1 << k):
        raise ValueError(f"gate of shape {gate.shape} does not act on {k} target qubit(s)")
    involved = targets + controls
    if len(set(involved)) != len(involved):
        raise ValueError(f"targets {targets} and controls {controls} must be distinct qubits")
    for q in involved:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")

    psi = state.amplitudes.reshape((2,) * n)
    index = [slice(None)] * n
    for c in controls:
        index[n - 1 - c] = 1
    index = tuple(index)
    sub = psi[index]
    # axes of `sub` after the control axes are removed
    remaining = [ax for ax in range(n) if index[ax] == slice(None)]
    axes = [remaining.index(n - 1 - t) for t in reversed(targets)]
    moved = np.moveaxis(sub, axes, list(range(k)))
    shape = moved.shape
    updated = (gate @ moved.reshape(1 << k, -1)).reshape(shape)
    psi[index] = np.moveaxis(updated, list(range(k)), axes)
    return state


def _checked_probabilities(state: StateVector) -> np.ndarray:
    probs = state.probabilities()
    total = probs.sum()
    if abs(total - 1.0) > DRIFT_TOL:
        raise SimulationError(f"state norm drifted to {total!r}")
    return probs / total


def shot_uniform(seed: int, stream: int, shot: int) -> float:
    """Uniform variate for one shot, keyed only by (seed, stream, shot)."""
    seq = np.random.SeedSequence(seed, spawn_key=(stream, shot))
    return float(np.random.Generator(np.random.PCG64(seq)).random())


def sample_indices(state: StateVector, shots: int, seed: int, stream: int = 0,
                   first_shot: int = 0) -> np.ndarray:
    """Basis-state indices for shots ``first_shot .. first_shot+shots-1``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cdf = np.cumsum(_checked_probabilities(state))
    u = np.array([shot_uniform(seed, stream, first_shot + i) for i in range(shots)])
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def measure_shot(state: StateVector, rng: np.random.Generator) -> Bitstring:
    probs = _checked_probabilities(state)
    value = int(rng.choice(len(probs), p=probs))
    return Bitstring(value, state.num_qubits)


def sample_histogram(state: StateVector, shots: int, seed: int, stream: int = 0) -> Histogram:
    return Histogram.from_values(sample_indices(state, shots, seed, stream))

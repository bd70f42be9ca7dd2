import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qassert import gates
from qassert.statevector import (
    Bitstring,
    ResourceError,
    SimulationError,
    StateVector,
    apply,
    init,
    measure_shot,
    sample_histogram,
    sample_indices,
)

S = 1 / math.sqrt(2)


def bell() -> StateVector:
    s = init(2)
    apply(s, gates.H, [0])
    apply(s, gates.X, [1], [0])
    return s


def basis(n: int, index: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[index] = 1
    return StateVector(amps)


def kron_oracle(n: int, gate, target: int) -> np.ndarray:
    """Full matrix of a single-qubit gate by explicit Kronecker products."""
    out = np.eye(1)
    for q in range(n - 1, -1, -1):
        out = np.kron(out, gate if q == target else np.eye(2))
    return out


class TestInit:
    @pytest.mark.parametrize("n,expected", [(1, [1, 0]), (2, [1, 0, 0, 0])])
    def test_small(self, n, expected):
        np.testing.assert_array_equal(init(n).amplitudes, expected)

    def test_twelve_qubits(self):
        s = init(12)
        assert s.amplitudes.shape == (4096,)
        assert s.norm() == 1.0

    def test_resource_limit(self, monkeypatch):
        monkeypatch.setenv("QASSERT_MAX_QUBITS", "10")
        with pytest.raises(ResourceError):
            init(11)

    def test_zero_qubits_rejected(self):
        with pytest.raises(ValueError):
            init(0)


class TestApply:
    def test_hadamard(self):
        s = apply(init(1), gates.H, [0])
        np.testing.assert_allclose(s.amplitudes, [S, S])

    def test_bell_from_cnot(self):
        s = StateVector([S, S, 0, 0])  # (|00> + |01>)/sqrt2 with qubit 0 set in |01>
        apply(s, gates.X, [1], [0])
        np.testing.assert_allclose(s.amplitudes, [S, 0, 0, S])

    def test_undo_bell(self):
        """CNOT then H inverts the Bell preparation."""
        s = bell()
        apply(s, gates.X, [1], [0])
        apply(s, gates.H, [0])
        np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0], atol=1e-12)

    @pytest.mark.parametrize("target", [0, 1, 2])
    def test_matches_kronecker_oracle(self, target):
        rng = np.random.default_rng(target)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        v /= np.linalg.norm(v)
        got = apply(StateVector(v.copy()), gates.H, [target]).amplitudes
        np.testing.assert_allclose(got, kron_oracle(3, gates.H, target) @ v, atol=1e-12)

    def test_two_qubit_gate_ordering(self):
        """Row bit k of the gate addresses targets[k]."""
        swap = np.eye(4)[[0, 2, 1, 3]]
        s = apply(basis(3, 0b001), swap, [0, 2])
        assert abs(s.amplitudes[0b100]) == pytest.approx(1)

    @pytest.mark.parametrize("targets,controls", [([0], [0]), ([3], []), ([0], [5]), ([0, 0], [])])
    def test_bad_operands(self, targets, controls):
        g = np.eye(1 << len(targets))
        with pytest.raises(ValueError):
            apply(init(3), g, targets, controls)

    def test_gate_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply(init(2), np.eye(4), [0])

    def test_two_controls(self):
        s = apply(basis(3, 0b011), gates.X, [2], [0, 1])
        assert abs(s.amplitudes[0b111]) == pytest.approx(1)
        s = apply(basis(3, 0b001), gates.X, [2], [0, 1])
        assert abs(s.amplitudes[0b001]) == pytest.approx(1)


def random_state(seed: int, n: int) -> StateVector:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


LIBRARY = [gates.X, gates.H, gates.Z, gates.rz(0.7), gates.phase(-1.3), gates.rz(math.pi / 8)]


class TestProperties:
    @given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(LIBRARY))), st.integers(0, 3),
           st.lists(st.integers(0, 3), max_size=2, unique=True))
    def test_norm_preserved(self, seed, g, target, controls):
        controls = [c for c in controls if c != target]
        s = apply(random_state(seed, 4), LIBRARY[g], [target], controls)
        assert abs(s.norm() - 1) <= 1e-10

    @given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(LIBRARY))), st.integers(0, 3))
    def test_round_trip(self, seed, g, target):
        s0 = random_state(seed, 4)
        s = apply(s0.copy(), LIBRARY[g], [target], [(target + 1) % 4])
        apply(s, LIBRARY[g].conj().T, [target], [(target + 1) % 4])
        np.testing.assert_allclose(s.amplitudes, s0.amplitudes, atol=1e-9)

    @given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(LIBRARY))))
    def test_control_at_zero_is_identity(self, seed, g):
        """Control qubit 3 never set in the support: the gate does nothing."""
        s0 = random_state(seed, 3)
        padded = StateVector(np.concatenate([s0.amplitudes, np.zeros(8)]))
        before = padded.amplitudes.copy()
        apply(padded, LIBRARY[g], [0], [3])
        np.testing.assert_array_equal(padded.amplitudes, before)


class TestSampling:
    def test_classical_state(self):
        assert sample_histogram(basis(3, 0b101), 50, seed=123) == {0b101: 50}

    def test_measure_shot_classical(self):
        b = measure_shot(basis(2, 0b01), np.random.default_rng(0))
        assert b.bits == (1, 0)

    def test_bell_support(self):
        h = sample_histogram(bell(), 16, seed=42)
        assert set(h) <= {0b00, 0b11}
        assert h.total == 16

    def test_bell_shots_never_mixed(self):
        rng = np.random.default_rng(5)
        assert all(measure_shot(bell(), rng).value in (0, 3) for _ in range(200))

    def test_fair_coin_frequency(self):
        s = apply(init(1), gates.H, [0])
        rng = np.random.default_rng(2024)
        ones = sum(measure_shot(s, rng).value for _ in range(10_000))
        assert 0.45 <= ones / 10_000 <= 0.55

    def test_uniform_three_qubits(self):
        s = init(3)
        for q in range(3):
            apply(s, gates.H, [q])
        h = sample_histogram(s, 800, seed=7)
        assert len(h) == 8
        assert all(60 <= c <= 140 for c in h.values())

    def test_deterministic_across_threads(self):
        s = random_state(9, 5)
        ref = sample_indices(s, 300, seed=11, stream=2)
        with ThreadPoolExecutor(4) as pool:
            chunks = list(pool.map(lambda k: sample_indices(s, 100, 11, 2, first_shot=100 * k), range(3)))
        np.testing.assert_array_equal(np.concatenate(chunks), ref)

    def test_streams_differ(self):
        s = random_state(9, 5)
        assert not np.array_equal(sample_indices(s, 50, 1, 0), sample_indices(s, 50, 1, 1))

    def test_sampling_fidelity(self):
        """Outcome frequencies leave a 5-sigma band in under 1% of seeds."""
        s = random_state(3, 3)
        p = s.probabilities()
        n = 400
        bad = 0
        for seed in range(200):
            counts = np.bincount(sample_indices(s, n, seed), minlength=8)
            sigma = np.sqrt(p * (1 - p) / n)
            bad += bool(np.any(np.abs(counts / n - p) > 5 * sigma))
        assert bad < 2

    def test_norm_drift_alarm(self):
        with pytest.raises(SimulationError):
            sample_indices(StateVector([1.0, 0.01]), 1, 0)

    def test_bitstring(self):
        b = Bitstring(0b110, 3)
        assert b.bits == (0, 1, 1)
        assert str(b) == "110"
        assert len(b) == 3


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_sample_histogram_total(seed, shots):
    """Histogram totals always equal the shot count."""
    assert sample_histogram(random_state(seed, 3), shots, seed).total == shots

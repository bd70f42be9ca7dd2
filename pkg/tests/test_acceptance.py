"""Acceptance criteria, one test per criterion; each prints a single PASS/FAIL line."""
import time

import numpy as np
import pytest

from oracle_values import BELL_P, GRID, GRID_X
from qassert import gates
from qassert.assertions import FAIL, PASS, run_program
from qassert.benchmarks import BENCHMARKS
from qassert.cli import benchmark_program, run_benchmark
from qassert.soak import run_soak
from qassert.statevector import StateVector, apply
from qassert.stats import ContingencyTable, chi2_contingency, gamma_q

SEED = 0


@pytest.fixture
def verdict(capsys):
    """Print the criterion's one-line outcome outside pytest's capture, then assert."""
    def record(number: int, checks: dict, elapsed: float | None = None):
        failed = [name for name, ok in checks.items() if not ok]
        timing = f" ({elapsed:.2f}s)" if elapsed is not None else ""
        status = "PASS" if not failed else "FAIL"
        detail = "; ".join(f"{k}={'ok' if v else 'NO'}" for k, v in checks.items())
        with capsys.disabled():
            print(f"\n[criterion {number}] {status}{timing}: {detail}")
        assert not failed, f"criterion {number} failed checks: {failed}"
    return record


def test_criterion_1_qft_harness(verdict):
    t0 = time.perf_counter()
    p = BENCHMARKS["qft_harness"].program()
    first = run_program(p, seed=SEED)
    again = run_program(p, seed=SEED)
    elapsed = time.perf_counter() - t0
    pre, sup, post = first
    verdict(1, {
        "precondition classical 5": pre.status == PASS,
        "superposition at 160 shots": run_program(p, shots=160, seed=SEED)[1].status == PASS,
        "postcondition classical 5": post.status == PASS,
        "deterministic": first == again,
        "under 1s": elapsed < 1.0,
    }, elapsed)


def test_criterion_2_adder(verdict):
    t0 = time.perf_counter()
    clean = run_program(benchmark_program("cadd_harness"), seed=SEED)
    bugged = run_program(benchmark_program("cadd_harness", "flipped-angles"), seed=SEED)
    elapsed = time.perf_counter() - t0
    verdict(2, {
        "clean b == 25": clean[-1].status == PASS and clean[-1].assertion.expected == 25,
        "flipped-angles fails output": bugged[-1].status == FAIL,
        "p exactly 0.0": bugged[-1].p_value == 0.0,
        "under 1s": elapsed < 1.0,
    }, elapsed)


def test_criterion_3_multiplier(verdict):
    t0 = time.perf_counter()
    clean = run_program(benchmark_program("cmodmul_harness"), shots=16, seed=SEED, alpha=0.05)
    routed = run_program(benchmark_program("cmodmul_harness", "ctrl-routing"), shots=16, seed=SEED)
    inverse = run_program(benchmark_program("cmodmul_harness", "wrong-inverse"), shots=16, seed=SEED)
    elapsed = time.perf_counter() - t0
    ent, prod = clean[2], clean[3]
    verdict(3, {
        "clean entangled passes": ent.assertion.kind == "entangled" and ent.status == PASS,
        "clean product passes": prod.assertion.kind == "product" and prod.status == PASS,
        "clean product p == 1.0": prod.p_value == 1.0,
        "ctrl-routing fails entangled": routed[2].status == FAIL,
        "wrong-inverse fails product": inverse[3].status == FAIL,
        "under 5s": elapsed < 5.0,
    }, elapsed)


def _shor(bug, shots):
    p = benchmark_program("shor15", bug)
    t0 = time.perf_counter()
    verdicts = run_program(p, shots=shots, seed=SEED)
    elapsed = time.perf_counter() - t0
    ens = verdicts[-1].ensemble
    up = ens.readings(p.register("up").qubits)
    anc = ens.readings(p.register("anc").qubits)
    return p, verdicts, up, anc, elapsed


def test_criterion_4_shor_correct(verdict):
    p, verdicts, up, anc, elapsed = _shor(None, 256)
    freq = {v: float(np.mean(up == v)) for v in range(8)}
    verdict(4, {
        "support in {0,2,4,6}": set(np.unique(up).tolist()) <= {0, 2, 4, 6},
        "frequencies in [0.15, 0.35]": all(0.15 <= freq[v] <= 0.35 for v in (0, 2, 4, 6)),
        "ancilla classical-0 passes": verdicts[-1].assertion.kind == "classical" and verdicts[-1].status == PASS,
        "at most 14 qubits": p.num_qubits <= 14,
        "under 60s": elapsed < 60.0,
    }, elapsed)


def test_criterion_5_shor_wrong_inverse(verdict):
    _, verdicts, up, anc, elapsed = _shor("wrong-inverse", 512)
    zero = anc == 0
    p_zero = float(zero.mean())
    on_target = float(np.isin(up[zero], [0, 2, 4, 6]).mean()) if zero.any() else 0.0
    verdict(5, {
        "ancilla postcondition fails": verdicts[-1].status == FAIL,
        f"P(anc=0)={p_zero:.3f} in [0.40, 0.60]": 0.40 <= p_zero <= 0.60,
        f"outputs given anc=0 on target={on_target:.3f} >= 0.9": on_target >= 0.9,
    }, elapsed)


def _pack(*fields) -> int:
    index, offset = 0, 0
    for value, width in fields:
        index |= value << offset
        offset += width
    return index


def _basis_map(fragment, n: int, index: int) -> int:
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[index] = 1
    sv = StateVector(amps)
    for instr in fragment:
        apply(sv, *gates.operator(instr))
    j = int(np.argmax(np.abs(sv.amplitudes)))
    return j if abs(abs(sv.amplitudes[j]) - 1) < 1e-9 else -1


def test_criterion_6_arithmetic_sweeps(verdict):
    t0 = time.perf_counter()
    b5 = tuple(range(5))
    add_mismatch = 0
    for a in range(32):
        frag = gates.qft(b5) + gates.cadd(b5, a) + gates.qft(b5, inverse=True)
        u = gates.unitary(frag, 5)
        for b in range(32):
            col = u[:, b]
            add_mismatch += not (abs(abs(col[(a + b) % 32]) - 1) < 1e-9)

    # ctrl | x (4) | b (5) | anc
    ctrl, x, b, anc = 0, (1, 2, 3, 4), tuple(range(5, 10)), 10
    mul_mismatch = 0
    cases = 0
    for a in (7, 13, 4, 1):
        frag = gates.cmodmul(ctrl, x, b, anc, a, 15)
        for xv in range(15):
            for bv in range(15):
                for c in (0, 1):
                    want = (a * xv + bv) % 15 if c else bv
                    got = _basis_map(frag, 11, _pack((c, 1), (xv, 4), (bv, 5)))
                    mul_mismatch += got != _pack((c, 1), (xv, 4), (want, 5))
                    cases += 1
    elapsed = time.perf_counter() - t0
    verdict(6, {
        "cadd 1024 pairs exact": add_mismatch == 0,
        f"cmodmul {cases} cases exact": mul_mismatch == 0 and cases == 1800,
        "under 120s": elapsed < 120.0,
    }, elapsed)


def test_criterion_7_statistics_kernel(verdict):
    worst = max(abs(gamma_q(a, x) - q) / q for a in GRID for x, q in zip(GRID_X, GRID[a]))
    bell = chi2_contingency(ContingencyTable.from_array([[8, 0], [0, 8]]))
    verdict(7, {
        f"gamma_q grid rel err {worst:.1e} <= 1e-8": worst <= 1e-8,
        "Bell chi2 == 16": bell.statistic == 16.0,
        "Bell dof == 1": bell.dof == 1,
        "Bell p within 1e-6 of oracle": abs(bell.p_value - BELL_P) < 1e-6,
    })


def test_criterion_8_soak(verdict):
    t0 = time.perf_counter()
    result = run_soak(100)
    elapsed = time.perf_counter() - t0
    verdict(8, {
        f"Bell entangled passes {result.bell_pass}/100 >= 99": result.bell_pass >= 99,
        f"independent product passes {result.product_pass}/100 >= 90": result.product_pass >= 90,
        f"power monotone {result.power}": result.monotone,
        "under 120s": elapsed < 120.0,
    }, elapsed)


def test_criterion_9_coverage_matrix(verdict):
    checks = {}
    categories = set()
    for name, spec in BENCHMARKS.items():
        clean = run_benchmark(name, seed=SEED)
        checks[f"{name} clean passes"] = clean.status == PASS
        for bug in spec.bugs:
            bugged = run_benchmark(name, bug.id, seed=SEED)
            checks[f"{name}/{bug.id} caught by {bug.catches}"] = bugged.verdicts[bug.at].status == FAIL
            categories.add(bug.category)
    checks["six categories"] = categories == {1, 2, 3, 4, 5, 6}
    verdict(9, checks)


def _suite_json(workers: int) -> list[str]:
    out = []
    for name, spec in BENCHMARKS.items():
        for bug in (None,) + tuple(b.id for b in spec.bugs):
            out.append(run_benchmark(name, bug, seed=SEED, workers=workers).to_json())
    return out


def test_criterion_10_determinism(verdict, monkeypatch):
    serial = _suite_json(1)
    serial_again = _suite_json(1)
    parallel = _suite_json(8)
    monkeypatch.setenv("QASSERT_WORKERS", "3")
    env_parallel = [run_benchmark(n, seed=SEED).to_json() for n in BENCHMARKS]
    verdict(10, {
        "repeat runs byte-identical": serial == serial_again,
        "1 vs 8 workers byte-identical": serial == parallel,
        "env worker count byte-identical": env_parallel == [run_benchmark(n, seed=SEED, workers=1).to_json()
                                                             for n in BENCHMARKS],
    })

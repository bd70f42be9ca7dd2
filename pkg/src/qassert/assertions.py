"""Breakpoint splitting, ensemble simulation and statistical verdicts."""
from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gates
from .ir import Instruction
from .program import Assertion, Program, Register, expand
from .statevector import Bitstring, ResourceError, StateVector, apply, init, max_qubits, sample_indices
from .stats import ContingencyTable, Histogram, chi2_contingency, chi2_gof

log = logging.getLogger(__name__)

ALPHA = 0.05
PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"

ENTANGLED_CAVEAT = "entanglement not detected: evidence of a bug, not proof of separability"


def worker_count() -> int:
    value = os.environ.get("QASSERT_WORKERS")
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class BreakpointProgram:
    """Instructions preceding one assertion, ending in a full measurement."""

    index: int
    registers: tuple[Register, ...]
    prefix: tuple[Instruction, ...]
    assertion: Assertion

    @property
    def num_qubits(self) -> int:
        return sum(r.width for r in self.registers)


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Shot-indexed full-register measurement outcomes (basis-state indices)."""

    num_qubits: int
    outcomes: tuple[int, ...]
    seed: int

    @property
    def shots(self) -> int:
        return len(self.outcomes)

    def bitstrings(self) -> list[Bitstring]:
        return [Bitstring(v, self.num_qubits) for v in self.outcomes]

    def readings(self, register) -> np.ndarray:
        register = tuple(register)
        if any(not 0 <= q < self.num_qubits for q in register):
            raise ValueError(f"register {register} not covered by {self.num_qubits} measured qubits")
        out = np.asarray(self.outcomes, dtype=np.int64)
        value = np.zeros_like(out)
        for k, q in enumerate(register):
            value |= ((out >> q) & 1) << k
        return value

    def histogram(self, register) -> Histogram:
        return Histogram.from_values(self.readings(register))


@dataclass(frozen=True)
class Verdict:
    assertion: Assertion
    status: str
    p_value: float
    shots: int
    seed: int
    statistic: float | None = None
    dof: int | None = None
    low_power: bool = False
    degenerate: bool = False
    impossible: bool = False
    histogram: Histogram | None = None
    table: ContingencyTable | None = None
    deviations: tuple[int, ...] = ()
    note: str = ""
    ensemble: MeasurementEnsemble | None = field(default=None, compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def flags(self) -> list[str]:
        out = []
        if self.degenerate:
            out.append("degenerate")
        if self.impossible:
            out.append("impossible")
        if self.low_power:
            out.append("low-power")
        return out


# -- compilation ---------------------------------------------------------------

def split_at_breakpoints(program: Program) -> list[BreakpointProgram]:
    """One truncated program per assertion, in source order."""
    out = []
    prefix: list[Instruction] = []
    for stmt in program.body:
        if isinstance(stmt, Assertion):
            out.append(BreakpointProgram(len(out), program.registers, tuple(prefix), stmt))
        else:
            prefix.append(stmt)
    if not out:
        warnings.warn("program contains no assertions; nothing to check", stacklevel=2)
    return out


def _run_instructions(state: StateVector, instrs) -> StateVector:
    for instr in instrs:
        for low in expand(instr):
            if low.op == "prep":
                if low.params[0]:
                    apply(state, gates.X, low.qubits)
                continue
            apply(state, *gates.operator(low))
    return state


def simulate(num_qubits: int, instructions) -> StateVector:
    return _run_instructions(init(num_qubits), instructions)


def _check_size(bp: BreakpointProgram):
    if bp.num_qubits > max_qubits():
        raise ResourceError(f"breakpoint {bp.index} ({bp.assertion.describe()}) needs {bp.num_qubits} qubits, "
                            f"limit is {max_qubits()}")


def run_ensemble(bp: BreakpointProgram, shots: int, seed: int, per_shot_rerun: bool = False,
                 state: StateVector | None = None, workers: int | None = None) -> MeasurementEnsemble:
    """Measure ``shots`` executions of ``bp``; shot ``i`` depends only on (seed, bp.index, i).

    By default the prefix is simulated once and sampled; ``per_shot_rerun``
    re-executes the prefix for every shot instead and yields the same outcomes.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    _check_size(bp)
    if not per_shot_rerun:
        if state is None:
            state = simulate(bp.num_qubits, bp.prefix)
        idx = sample_indices(state, shots, seed, stream=bp.index)
        return MeasurementEnsemble(bp.num_qubits, tuple(int(i) for i in idx), seed)

    def one(i: int) -> int:
        sv = simulate(bp.num_qubits, bp.prefix)
        return int(sample_indices(sv, 1, seed, stream=bp.index, first_shot=i)[0])

    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        outcomes = tuple(pool.map(one, range(shots)))
    return MeasurementEnsemble(bp.num_qubits, outcomes, seed)


# -- checks --------------------------------------------------------------------

def _as_assertion(kind: str, registers, expected=None) -> Assertion:
    regs = tuple(tuple(r) for r in registers)
    labels = tuple(f"q{list(r)}" for r in regs)
    return Assertion(kind, regs, labels, expected)


def check_classical(ensemble: MeasurementEnsemble, register, expected: int,
                    assertion: Assertion | None = None) -> Verdict:
    """Exact test: pass (p=1) iff every shot reads ``expected``, else fail (p=0)."""
    assertion = assertion or _as_assertion("classical", [register], expected)
    if ensemble.shots < 1:
        raise ValueError("empty ensemble")
    values = ensemble.readings(register)
    hist = Histogram.from_values(values)
    deviations = tuple(v for v in hist if v != expected)
    ok = not deviations
    return Verdict(assertion, PASS if ok else FAIL, 1.0 if ok else 0.0, ensemble.shots, ensemble.seed,
                   histogram=hist, deviations=deviations, ensemble=ensemble)


def check_superposition(ensemble: MeasurementEnsemble, register, alpha: float = ALPHA,
                        assertion: Assertion | None = None) -> Verdict:
    """Chi-square goodness of fit against the uniform distribution on 2^width values."""
    register = tuple(register)
    assertion = assertion or _as_assertion("superposition", [register])
    hist = ensemble.histogram(register)
    if ensemble.shots < 2:
        return Verdict(assertion, INDETERMINATE, 1.0, ensemble.shots, ensemble.seed, histogram=hist,
                       note="at least two shots are needed", ensemble=ensemble)
    cells = 1 << len(register)
    result = chi2_gof(hist, {v: 1.0 / cells for v in range(cells)})
    status = PASS if result.p_value > alpha else FAIL
    return Verdict(assertion, status, result.p_value, ensemble.shots, ensemble.seed,
                   statistic=result.statistic, dof=result.dof,
                   low_power=ensemble.shots < 5 * cells, degenerate=result.flag == "degenerate",
                   histogram=hist, ensemble=ensemble)


def _joint(ensemble: MeasurementEnsemble, reg_a, reg_b) -> ContingencyTable:
    a = tuple(reg_a)
    b = tuple(reg_b)
    if set(a) & set(b):
        raise ValueError("registers overlap")
    return ContingencyTable.from_pairs(ensemble.readings(a), ensemble.readings(b))


def check_entangled(ensemble: MeasurementEnsemble, reg_a, reg_b, alpha: float = ALPHA,
                    assertion: Assertion | None = None) -> Verdict:
    """Pass iff the independence test rejects (p <= alpha).

    A register that reads constant cannot show dependence, so a degenerate
    table fails with the ``degenerate`` flag.
    """
    assertion = assertion or _as_assertion("entangled", [reg_a, reg_b])
    table = _joint(ensemble, reg_a, reg_b)
    if ensemble.shots < 2:
        return Verdict(assertion, INDETERMINATE, 1.0, ensemble.shots, ensemble.seed, table=table,
                       note="at least two shots are needed", ensemble=ensemble)
    result = chi2_contingency(table)
    degenerate = result.flag == "degenerate"
    status = PASS if (not degenerate and result.p_value <= alpha) else FAIL
    return Verdict(assertion, status, result.p_value, ensemble.shots, ensemble.seed,
                   statistic=result.statistic, dof=result.dof, low_power=result.low_power,
                   degenerate=degenerate, table=table,
                   note=ENTANGLED_CAVEAT if status == FAIL else "", ensemble=ensemble)


def check_product(ensemble: MeasurementEnsemble, reg_a, reg_b, alpha: float = ALPHA,
                  assertion: Assertion | None = None) -> Verdict:
    """Pass iff the independence test does not reject (p > alpha).

    A constant register is trivially unentangled in the measured basis and
    passes with the ``degenerate`` flag and p = 1.
    """
    assertion = assertion or _as_assertion("product", [reg_a, reg_b])
    table = _joint(ensemble, reg_a, reg_b)
    if ensemble.shots < 2:
        return Verdict(assertion, INDETERMINATE, 1.0, ensemble.shots, ensemble.seed, table=table,
                       note="at least two shots are needed", ensemble=ensemble)
    result = chi2_contingency(table)
    degenerate = result.flag == "degenerate"
    status = PASS if result.p_value > alpha else FAIL
    return Verdict(assertion, status, result.p_value, ensemble.shots, ensemble.seed,
                   statistic=result.statistic, dof=result.dof, low_power=result.low_power,
                   degenerate=degenerate, table=table, ensemble=ensemble)


def check(assertion: Assertion, ensemble: MeasurementEnsemble, alpha: float = ALPHA) -> Verdict:
    regs = assertion.registers
    if assertion.kind == "classical":
        return check_classical(ensemble, regs[0], assertion.expected, assertion)
    if assertion.kind == "superposition":
        return check_superposition(ensemble, regs[0], alpha, assertion)
    if assertion.kind == "entangled":
        return check_entangled(ensemble, regs[0], regs[1], alpha, assertion)
    if assertion.kind == "product":
        return check_product(ensemble, regs[0], regs[1], alpha, assertion)
    raise ValueError(f"unknown assertion kind {assertion.kind!r}")


def default_shots(assertion: Assertion) -> int:
    if assertion.kind == "superposition":
        return max(100, 5 * (1 << len(assertion.registers[0])))
    return 16


def run_program(program: Program, shots: int | None = None, seed: int = 0, alpha: float = ALPHA,
                per_shot_rerun: bool = False, workers: int | None = None) -> list[Verdict]:
    """Check every assertion of ``program``; verdicts come back in source order.

    Breakpoint prefixes are nested, so the state is simulated once and
    snapshotted at each assertion before sampling.
    """
    bps = split_at_breakpoints(program)
    if not bps:
        return []
    for bp in bps:
        _check_size(bp)
    workers = workers or worker_count()
    counts = [shots or default_shots(bp.assertion) for bp in bps]

    if per_shot_rerun:
        ensembles = [run_ensemble(bp, n, seed, per_shot_rerun=True, workers=workers) for bp, n in zip(bps, counts)]
    else:
        state = init(program.num_qubits)
        done = 0
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = []
            for bp, n in zip(bps, counts):
                _run_instructions(state, bp.prefix[done:])
                done = len(bp.prefix)
                futures.append(pool.submit(run_ensemble, bp, n, seed, False, state.copy()))
            ensembles = [f.result() for f in futures]
    return [check(bp.assertion, ens, alpha) for bp, ens in zip(bps, ensembles)]

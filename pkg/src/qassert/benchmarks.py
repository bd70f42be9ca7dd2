"""Benchmark program generators and the bug catalog that mutates them."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import gates
from .ir import Instruction, gate
from .program import Program, Register, expand, format_instruction, parse


class UsageError(ValueError):
    pass


def _prep_value(reg: str, width: int, value: int) -> list[str]:
    return [f"prep {reg}[{i}] {(value >> i) & 1}" for i in range(width)]


def bell_source() -> str:
    return "\n".join([
        "reg q 2",
        "h q[0]",
        "cx q[0] q[1]",
        "assert entangled q[0] q[1]",
    ]) + "\n"


def qft_harness_source(width: int = 4, value: int = 5) -> str:
    lines = [f"reg q {width}"]
    lines += _prep_value("q", width, value)
    lines += [
        f"assert classical q {value}",
        "qft q",
        "assert superposition q",
        "iqft q",
        f"assert classical q {value}",
    ]
    return "\n".join(lines) + "\n"


def cadd_harness_source(width: int = 5, b: int = 12, a: int = 13) -> str:
    lines = ["reg ctrl 2", f"reg b {width}", "prep ctrl[0] 0", "prep ctrl[1] 0"]
    lines += _prep_value("b", width, b)
    lines += [
        f"assert classical b {b}",
        "qft b",
        f"cadd b {a}",
        "iqft b",
        f"assert classical b {(a + b) % (1 << width)}",
    ]
    return "\n".join(lines) + "\n"


def cmodmul_harness_source(width: int = 5, x: int = 6, b: int = 7, a: int = 7, a_inv: int = 13,
                           N: int = 15) -> str:
    lines = ["reg ctrl 1", f"reg x {width}", f"reg b {width}", "reg anc 1", "prep ctrl[0] 1", "h ctrl[0]"]
    lines += _prep_value("x", width, x)
    lines.append(f"assert classical x {x}")
    lines += _prep_value("b", width, b)
    lines.append(f"assert classical b {b}")
    lines += [
        "prep anc[0] 0",
        f"cmodmul ctrl[0] x b anc[0] {a} {N}",
        "assert entangled ctrl b",
        f"cmodmul ctrl[0] x b anc[0] {a_inv} {N}",
        "assert product ctrl b",
    ]
    return "\n".join(lines) + "\n"


def shor15_source(a: int = 7, N: int = 15, upper: int = 3) -> str:
    """Phase estimation of ``a`` mod ``N`` with a sequential multiplier ladder.

    The workspace register ``anc`` holds the accumulator (low qubits) and the
    comparison ancilla (top qubit); it must end at zero.
    """
    width = N.bit_length()
    lines = [f"reg up {upper}", f"reg x {width}", f"reg anc {width + 2}", "prep x[0] 1"]
    lines += [f"h up[{i}]" for i in range(upper)]
    lines += ["assert classical x 1", "assert superposition up", "assert classical anc 0"]
    for k, (ak, inv) in enumerate(gates.multiplier_constants(a, N, upper)):
        lines.append(f"cua up[{upper - 1 - k}] x anc[0:{width + 1}] anc[{width + 1}] {ak} {inv} {N}")
    lines += ["iqft up", "assert classical anc 0"]
    return "\n".join(lines) + "\n"


def grover_source(n: int = 3, marked: int = 5, iterations: int | None = None) -> str:
    iterations = gates.grover_iterations(n) if iterations is None else iterations
    q = tuple(range(n))
    anc = tuple(range(n, 2 * n - 1))
    registers = (Register("q", 0, n), Register("anc", n, n - 1))
    lines = [f"reg q {n}", f"reg anc {n - 1}"]
    lines += [f"h q[{i}]" for i in range(n)]
    lines += ["assert superposition q", "assert classical anc 0"]
    for _ in range(iterations):
        frag = gates.grover_oracle(q, anc, marked) + gates.grover_diffusion(q, anc)
        lines += [format_instruction(i, registers) for i in frag]
        lines.append("assert product q anc")
    return "\n".join(lines) + "\n"


# -- bug mutations ---------------------------------------------------------

def _nth_index(program: Program, predicate, n: int = 0) -> int:
    hits = [i for i, s in enumerate(program.body) if isinstance(s, Instruction) and predicate(s)]
    if len(hits) <= n:
        raise UsageError("bug does not apply to this program")
    return hits[n]


def _replace(program: Program, index: int, new_stmts) -> Program:
    body = list(program.body)
    lines = list(program.lines or (None,) * len(body))
    new_stmts = list(new_stmts)
    body[index:index + 1] = new_stmts
    lines[index:index + 1] = [lines[index]] * len(new_stmts)
    return program.with_body(body, lines)


def _flip_prep(reg: str, bit: int):
    def mutate(program: Program) -> Program:
        q = program.register(reg).qubits[bit]
        i = _nth_index(program, lambda s: s.op == "prep" and s.qubits == (q,) and s.params[0] == 1)
        return _replace(program, i, [gate("prep", q, bit=0)])
    return mutate


def _flipped_angles(program: Program) -> Program:
    """Lower every macro and build each crz from the sign-flipped decomposition."""
    body, lines = [], []
    for stmt, line in zip(program.lowered().body, program.lowered().lines):
        if isinstance(stmt, Instruction) and stmt.op == "crz":
            c, t = stmt.qubits
            parts = gates.crz_decomposed(c, t, stmt.params[0], "flipped-buggy").ops
        else:
            parts = (stmt,)
        body += parts
        lines += [line] * len(parts)
    return program.with_body(body, lines)


def _endian_swap(program: Program) -> Program:
    i = _nth_index(program, lambda s: s.op == "cadd")
    instr = program.body[i]
    ops = (tuple(reversed(instr.operands[0])),) + instr.operands[1:]
    return _replace(program, i, [Instruction(instr.op, ops, instr.params)])


def _ctrl_routing(program: Program) -> Program:
    """Lower the first multiplier and route every doubly controlled rotation
    through its second control only (the first control is never consulted)."""
    i = _nth_index(program, lambda s: s.op == "cmodmul")
    out = []
    for low in expand(program.body[i]):
        if low.op == "ccrz":
            _, c1, t = low.qubits
            low = gate("crz", c1, t, angle=low.params[0])
        out.append(low)
    return _replace(program, i, out)


def _wrong_inverse(op: str, n: int, param: int, good: int, bad: int):
    def mutate(program: Program) -> Program:
        i = _nth_index(program, lambda s: s.op == op, n)
        instr = program.body[i]
        if instr.params[param] != good:
            raise UsageError(f"expected constant {good} at parameter {param} of {op}")
        params = list(instr.params)
        params[param] = bad
        return _replace(program, i, [Instruction(op, instr.operands, tuple(params))])
    return mutate


def _unmirrored_ladder(program: Program) -> Program:
    q, anc = program.register("q").qubits, program.register("anc").qubits
    i = _nth_index(program, lambda s: s.op == "ccx" and s.qubits == (q[1], q[0], anc[0]))
    body = list(program.body)
    lines = list(program.lines)
    del body[i], lines[i]
    return program.with_body(body, lines)


@dataclass(frozen=True)
class Bug:
    id: str
    category: int
    description: str
    catches: str  # the assertion expected to catch it, in source form
    mutate: object = field(repr=False, compare=False)
    at: int = 0  # source-order index of that assertion


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    description: str
    generator: object = field(repr=False, compare=False)
    params: dict = field(default_factory=dict)
    bugs: tuple[Bug, ...] = ()
    observe: tuple[str, ...] = ()  # registers histogrammed at the final breakpoint

    def source(self) -> str:
        return self.generator(**self.params)

    def program(self) -> Program:
        return parse(self.source())

    def bug(self, bug_id: str) -> Bug:
        for b in self.bugs:
            if b.id == bug_id:
                return b
        valid = ", ".join(b.id for b in self.bugs) or "none"
        raise UsageError(f"unknown bug {bug_id!r} for {self.name}; valid: {valid}")


BENCHMARKS: dict[str, BenchmarkSpec] = {
    "bell": BenchmarkSpec("bell", "two-qubit Bell pair", bell_source),
    "qft_harness": BenchmarkSpec(
        "qft_harness", "QFT then iQFT of a classical 5 on 4 qubits", qft_harness_source,
        {"width": 4, "value": 5},
        (Bug("wrong-init", 1, "q[0] prepared as 0 instead of 1", "classical q 5 (precondition)",
             _flip_prep("q", 0), 0),)),
    "cadd_harness": BenchmarkSpec(
        "cadd_harness", "Fourier-space addition 12 + 13 on 5 qubits", cadd_harness_source,
        {"width": 5, "b": 12, "a": 13},
        (Bug("flipped-angles", 2, "controlled rotations built with sign-flipped half angles",
             "classical b 25 (output)", _flipped_angles, 1),
         Bug("endian-swap", 3, "adder applied to the register in reversed qubit order",
             "classical b 25 (output)", _endian_swap, 1))),
    "cmodmul_harness": BenchmarkSpec(
        "cmodmul_harness", "controlled modular multiply by 7 then 13 mod 15", cmodmul_harness_source,
        {"width": 5, "x": 6, "b": 7, "a": 7, "a_inv": 13, "N": 15},
        (Bug("ctrl-routing", 4, "second control used twice inside the first multiplier",
             "entangled ctrl b", _ctrl_routing, 2),
         Bug("wrong-inverse", 5, "uncompute with 12 instead of 13", "product ctrl b",
             _wrong_inverse("cmodmul", 1, 0, 13, 12), 3))),
    "shor15": BenchmarkSpec(
        "shor15", "order finding for a=7, N=15 with a 3-qubit phase register", shor15_source,
        {"a": 7, "N": 15, "upper": 3},
        (Bug("wrong-init", 1, "x[0] prepared as 0 instead of 1", "classical x 1", _flip_prep("x", 0), 0),
         Bug("wrong-inverse", 6, "first multiplier uncomputes with 12 instead of 13",
             "classical anc 0 (postcondition)", _wrong_inverse("cua", 0, 1, 13, 12), 3)),
        observe=("up", "anc")),
    "grover": BenchmarkSpec(
        "grover", "3-qubit search for a marked item, 2 iterations", grover_source,
        {"n": 3, "marked": 5},
        (Bug("unmirrored-ladder", 5,
             "first oracle drops its opening AND-ladder Toffoli, so the mirror leaves anc[0] dirty",
             "product q anc (after the last iteration)", _unmirrored_ladder, 3),),
        observe=("q",)),
}


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise UsageError(f"unknown benchmark {name!r}; valid: {', '.join(BENCHMARKS)}") from None


def inject_bug(program: Program, bug_id: str, benchmark: str | None = None) -> Program:
    """Apply a catalogued mutation; ``benchmark`` disambiguates shared bug ids."""
    specs = [get_benchmark(benchmark)] if benchmark else list(BENCHMARKS.values())
    candidates = [b for s in specs for b in s.bugs if b.id == bug_id]
    if not candidates:
        raise UsageError(f"unknown bug {bug_id!r}")
    last = None
    for bug in candidates:
        try:
            return bug.mutate(program)
        except (UsageError, KeyError) as exc:
            last = exc
    raise UsageError(f"bug {bug_id!r} does not apply to this program ({last})")

"""Line-oriented circuit language: parser, resolver, macro lowering, emitters.

One statement per line, ``#`` starts a comment::

    reg q 2
    h q[0]
    cx q[0] q[1]
    assert entangled q[0] q[1]

Qubit operands are ``name[i]`` (or a bare ``name`` for a one-qubit
register). Register operands are ``name``, ``name[i]``, a slice
``name[i:j]`` / ``name[i:j:s]``, or an index list ``name[i,j,k]``.
Quantum operands come first, numeric parameters last.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from . import gates
from .ir import ELEMENTARY, Angle, Instruction

ASSERT_KINDS = {"classical": (1, True), "superposition": (1, False),
                "entangled": (2, False), "product": (2, False)}

# macro -> (operand kinds, number of integer params); "q*" is 0..2 trailing qubits
MACROS = {
    "qft": (("r",), 0),
    "iqft": (("r",), 0),
    "cadd": (("r", "q*"), 1),
    "cadd_inv": (("r", "q*"), 1),
    "cmodmul": (("q", "r", "r", "q"), 2),
    "cmodmul_inv": (("q", "r", "r", "q"), 2),
    "cua": (("q", "r", "r", "q"), 3),
}

_NAME = re.compile(r"^[A-Za-z_]\w*$")
_OPERAND = re.compile(r"^([A-Za-z_]\w*)(?:\[([^\]]*)\])?$")
_INT = re.compile(r"^[+-]?\d+$")


@dataclass(frozen=True)
class Register:
    name: str
    offset: int
    width: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(range(self.offset, self.offset + self.width))


@dataclass(frozen=True)
class Assertion:
    """An assertion directive; ``registers`` are qubit tuples, ``labels`` their source text."""

    kind: str
    registers: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = field(compare=False)
    expected: int | None = None
    line: int | None = field(default=None, compare=False)

    def describe(self) -> str:
        tail = f" {self.expected}" if self.expected is not None else ""
        return f"{self.kind} {' '.join(self.labels)}{tail}"


@dataclass(frozen=True)
class SourceError:
    line: int
    column: int
    message: str
    category: str  # syntax | resolution | arity

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.category} error: {self.message}"


class ParseError(ValueError):
    def __init__(self, errors: list[SourceError]):
        self.errors = errors
        super().__init__("\n".join(map(str, errors)))


@dataclass(frozen=True)
class Program:
    registers: tuple[Register, ...] = ()
    body: tuple = ()  # Instruction | Assertion, in source order
    lines: tuple = field(default=(), compare=False)

    @property
    def num_qubits(self) -> int:
        return sum(r.width for r in self.registers)

    @property
    def instructions(self) -> tuple[Instruction, ...]:
        return tuple(s for s in self.body if isinstance(s, Instruction))

    @property
    def assertions(self) -> tuple[Assertion, ...]:
        return tuple(s for s in self.body if isinstance(s, Assertion))

    def register(self, name: str) -> Register:
        for r in self.registers:
            if r.name == name:
                return r
        raise KeyError(name)

    def with_body(self, body, lines=None) -> "Program":
        body = tuple(body)
        if lines is None:
            lines = (None,) * len(body)
        return replace(self, body=body, lines=tuple(lines))

    def lowered(self) -> "Program":
        """Same program with every macro expanded to elementary gates."""
        body, lines = [], []
        for stmt, line in zip(self.body, self.lines or (None,) * len(self.body)):
            parts = expand(stmt) if isinstance(stmt, Instruction) else (stmt,)
            body.extend(parts)
            lines.extend([line] * len(parts))
        return self.with_body(body, lines)


# -- macro lowering ------------------------------------------------------------

def expand(instr: Instruction) -> tuple[Instruction, ...]:
    op = instr.op
    if op in ELEMENTARY:
        return (instr,)
    ops = instr.operands
    p = instr.params
    if op in ("qft", "iqft"):
        frag = gates.qft(ops[0], inverse=op == "iqft")
    elif op in ("cadd", "cadd_inv"):
        frag = gates.cadd(ops[0], p[0], [g[0] for g in ops[1:]], inverse=op == "cadd_inv")
    elif op in ("cmodmul", "cmodmul_inv"):
        frag = gates.cmodmul(ops[0][0], ops[1], ops[2], ops[3][0], p[0], p[1],
                             inverse=op == "cmodmul_inv", allow_noninvertible=True)
    elif op == "cua":
        frag = gates.controlled_multiplier(ops[0][0], ops[1], ops[2], ops[3][0], p[0], p[1], p[2])
    else:
        raise ValueError(f"unknown macro {op!r}")
    return frag.ops


# -- parsing -------------------------------------------------------------------

class _LineError(Exception):
    def __init__(self, column: int, message: str, category: str):
        self.column = column
        self.message = message
        self.category = category


class _Skip(Exception):
    """Statement references a register whose declaration already failed."""


class _Resolver:
    def __init__(self):
        self.registers: dict[str, Register] = {}
        self.broken: set[str] = set()
        self.offset = 0
        self.touched: set[int] = set()

    def declare(self, name: str, width_tok: str, col_name: int, col_width: int) -> Register:
        if not _NAME.match(name):
            raise _LineError(col_name, f"invalid register name {name!r}", "syntax")
        if not _INT.match(width_tok) or int(width_tok) < 1:
            self.broken.add(name)
            raise _LineError(col_width, f"register width must be a positive integer, got {width_tok!r}", "syntax")
        if name in self.registers or name in self.broken:
            raise _LineError(col_name, f"register {name!r} already declared", "resolution")
        reg = Register(name, self.offset, int(width_tok))
        self.offset += reg.width
        self.registers[name] = reg
        return reg

    def _lookup(self, tok: str, col: int):
        m = _OPERAND.match(tok)
        if not m:
            raise _LineError(col, f"malformed operand {tok!r}", "syntax")
        name, sel = m.groups()
        if name in self.broken:
            raise _Skip()
        if name not in self.registers:
            raise _LineError(col, f"undeclared register {name!r}", "resolution")
        return self.registers[name], sel

    def _index(self, reg: Register, text: str, col: int) -> int:
        text = text.strip()
        if not _INT.match(text):
            raise _LineError(col, f"bad index {text!r}", "syntax")
        i = int(text)
        if not 0 <= i < reg.width:
            raise _LineError(col, f"index {i} out of range for {reg.name}[{reg.width}]", "resolution")
        return reg.offset + i

    def qubit(self, tok: str, col: int) -> int:
        reg, sel = self._lookup(tok, col)
        if sel is None:
            if reg.width != 1:
                raise _LineError(col, f"{reg.name} has {reg.width} qubits; index it", "arity")
            return reg.offset
        if ":" in sel or "," in sel:
            raise _LineError(col, f"expected a single qubit, got {tok!r}", "arity")
        return self._index(reg, sel, col)

    def register_operand(self, tok: str, col: int) -> tuple[int, ...]:
        reg, sel = self._lookup(tok, col)
        if sel is None:
            return reg.qubits
        if ":" in sel:
            parts = sel.split(":")
            if len(parts) > 3 or not all(not p.strip() or _INT.match(p.strip()) for p in parts):
                raise _LineError(col, f"bad slice {tok!r}", "syntax")
            picked = range(reg.width)[slice(*[int(p) if p.strip() else None for p in parts])]
            if not picked:
                raise _LineError(col, f"empty slice {tok!r}", "resolution")
            return tuple(reg.offset + i for i in picked)
        return tuple(self._index(reg, s, col) for s in sel.split(","))


def _tokens(code: str):
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", code)]


def _int_param(tok: str, col: int) -> int:
    if not _INT.match(tok):
        raise _LineError(col, f"expected an integer, got {tok!r}", "syntax")
    return int(tok)


def _angle_param(tok: str, col: int) -> Angle:
    try:
        return Angle.parse(tok)
    except ValueError:
        raise _LineError(col, f"bad angle {tok!r}", "syntax") from None


def _parse_statement(toks, res: _Resolver, measured: list):
    head, col = toks[0]
    if measured:
        raise _LineError(col, "no statements may follow measure_all", "syntax")
    if head == "reg":
        if len(toks) != 3:
            raise _LineError(col, "usage: reg <name> <width>", "arity")
        res.declare(toks[1][0], toks[2][0], toks[1][1], toks[2][1])
        return None
    if head == "measure_all":
        if len(toks) != 1:
            raise _LineError(toks[1][1], "measure_all takes no operands", "arity")
        measured.append(True)
        return None
    if head == "assert":
        return _parse_assert(toks, res)
    if head in ELEMENTARY:
        return _parse_gate(head, toks, res)
    if head in MACROS:
        return _parse_macro(head, toks, res)
    raise _LineError(col, f"unknown mnemonic {head!r}", "syntax")


def _check_distinct(qubits, col):
    if len(set(qubits)) != len(qubits):
        raise _LineError(col, "an instruction may not use the same qubit twice", "resolution")


def _parse_gate(op, toks, res: _Resolver) -> Instruction:
    nq, kind = ELEMENTARY[op]
    want = nq + (kind is not None)
    if len(toks) - 1 != want:
        raise _LineError(toks[0][1], f"{op} expects {nq} qubit(s)" + (f" and an {kind}" if kind else ""), "arity")
    qubits = tuple(res.qubit(t, c) for t, c in toks[1:1 + nq])
    _check_distinct(qubits, toks[0][1])
    params = ()
    if kind == "angle":
        params = (_angle_param(*toks[-1]),)
    elif kind == "bit":
        tok, c = toks[-1]
        if tok not in ("0", "1"):
            raise _LineError(c, f"prep value must be 0 or 1, got {tok!r}", "syntax")
        params = (int(tok),)
    if op == "prep":
        if qubits[0] in res.touched:
            raise _LineError(toks[1][1], "prep must precede every gate on its qubit", "resolution")
    res.touched.update(qubits)
    return Instruction(op, tuple((q,) for q in qubits), params)


def _parse_macro(op, toks, res: _Resolver) -> Instruction:
    kinds, nparams = MACROS[op]
    args = toks[1:]
    if len(args) < nparams:
        raise _LineError(toks[0][1], f"{op} expects {nparams} numeric parameter(s)", "arity")
    qtoks, ptoks = args[:len(args) - nparams], args[len(args) - nparams:]
    if kinds[-1] == "q*":
        fixed = len(kinds) - 1
        if not fixed <= len(qtoks) <= fixed + 2:
            raise _LineError(toks[0][1], f"{op} expects a register and up to 2 control qubits", "arity")
        kinds = kinds[:-1] + ("q",) * (len(qtoks) - fixed)
    elif len(qtoks) != len(kinds):
        raise _LineError(toks[0][1], f"{op} expects {len(kinds)} quantum operand(s)", "arity")
    operands = []
    for kind, (tok, c) in zip(kinds, qtoks):
        operands.append((res.qubit(tok, c),) if kind == "q" else res.register_operand(tok, c))
    params = tuple(_int_param(t, c) for t, c in ptoks)
    flat = [q for g in operands for q in g]
    _check_distinct(flat, toks[0][1])
    instr = Instruction(op, tuple(operands), params)
    try:
        expand(instr)
    except ValueError as exc:
        raise _LineError(toks[0][1], str(exc), "resolution") from None
    res.touched.update(flat)
    return instr


def _parse_assert(toks, res: _Resolver) -> Assertion:
    if len(toks) < 2:
        raise _LineError(toks[0][1], "assert needs a kind", "arity")
    kind, kcol = toks[1]
    if kind not in ASSERT_KINDS:
        raise _LineError(kcol, f"unknown assertion kind {kind!r}", "syntax")
    nregs, has_value = ASSERT_KINDS[kind]
    args = toks[2:]
    if len(args) != nregs + has_value:
        raise _LineError(kcol, f"assert {kind} expects {nregs} register(s)" + (" and a value" if has_value else ""),
                         "arity")
    regs = tuple(res.register_operand(t, c) for t, c in args[:nregs])
    labels = tuple(t for t, _ in args[:nregs])
    for reg, (_, c) in zip(regs, args):
        _check_distinct(reg, c)
    if nregs == 2 and set(regs[0]) & set(regs[1]):
        raise _LineError(args[1][1], "asserted registers overlap", "resolution")
    expected = None
    if has_value:
        expected = _int_param(*args[-1])
        if not 0 <= expected < 1 << len(regs[0]):
            raise _LineError(args[-1][1], f"value {expected} does not fit in {len(regs[0])} qubits", "resolution")
    return Assertion(kind, regs, labels, expected)


def parse_with_errors(text: str) -> tuple[Program, list[SourceError]]:
    """Parse ``text``; returns the program built from the good lines and all errors."""
    res = _Resolver()
    body, lines, errors = [], [], []
    measured: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("#", 1)[0]
        toks = _tokens(code)
        if not toks:
            continue
        try:
            stmt = _parse_statement(toks, res, measured)
        except _LineError as e:
            errors.append(SourceError(lineno, e.column, e.message, e.category))
            continue
        except _Skip:
            continue
        if stmt is None:
            continue
        if isinstance(stmt, Assertion):
            stmt = replace(stmt, line=lineno)
        body.append(stmt)
        lines.append(lineno)
    return Program(tuple(res.registers.values()), tuple(body), tuple(lines)), errors


def parse(text: str) -> Program:
    program, errors = parse_with_errors(text)
    if errors:
        raise ParseError(errors)
    return program


# -- emitting ------------------------------------------------------------------

def _names(program_regs) -> dict[int, tuple[Register, int]]:
    return {q: (r, i) for r in program_regs for i, q in enumerate(r.qubits)}


def _fmt_qubit(q: int, owner) -> str:
    reg, i = owner[q]
    return f"{reg.name}[{i}]"


def _fmt_register(qubits: tuple[int, ...], owner) -> str:
    reg, _ = owner[qubits[0]]
    if qubits == reg.qubits:
        return reg.name
    idx = [owner[q][1] for q in qubits]
    if any(owner[q][0] is not reg for q in qubits):
        raise ValueError("register operand spans several registers")
    if len(idx) > 1 and all(b - a == 1 for a, b in zip(idx, idx[1:])):
        return f"{reg.name}[{idx[0]}:{idx[-1] + 1}]"
    return f"{reg.name}[{','.join(map(str, idx))}]"


def format_instruction(instr: Instruction, registers) -> str:
    owner = _names(registers)
    if instr.op in ELEMENTARY:
        words = [instr.op] + [_fmt_qubit(g[0], owner) for g in instr.operands]
    else:
        kinds, _ = MACROS[instr.op]
        words = [instr.op]
        for i, group in enumerate(instr.operands):
            kind = kinds[min(i, len(kinds) - 1)]
            words.append(_fmt_qubit(group[0], owner) if kind in ("q", "q*") else _fmt_register(group, owner))
    words += [str(p) for p in instr.params]
    return " ".join(words)


def format_assertion(a: Assertion, registers) -> str:
    owner = _names(registers)
    words = ["assert", a.kind] + [_fmt_register(r, owner) for r in a.registers]
    if a.expected is not None:
        words.append(str(a.expected))
    return " ".join(words)


def emit_program(program: Program, expand_macros: bool = False) -> str:
    if expand_macros:
        program = program.lowered()
    out = [f"reg {r.name} {r.width}" for r in program.registers]
    for stmt in program.body:
        if isinstance(stmt, Assertion):
            out.append(format_assertion(stmt, program.registers))
        else:
            out.append(format_instruction(stmt, program.registers))
    return "\n".join(out) + "\n"


def emit_native(registers, prefix, assertion: Assertion | None, expand_macros: bool = False) -> str:
    if expand_macros:
        prefix = [i for instr in prefix for i in expand(instr)]
    out = [f"reg {r.name} {r.width}" for r in registers]
    out += [format_instruction(i, registers) for i in prefix]
    if assertion is not None:
        out.append(format_assertion(assertion, registers))
    out.append("measure_all")
    return "\n".join(out) + "\n"


def _qasm_angle(angle: Angle) -> str:
    return repr(angle.radians)


def _qasm_lines(instr: Instruction) -> list[str]:
    q = [f"q[{g[0]}]" for g in instr.operands]
    op = instr.op
    if op == "prep":
        return [f"x {q[0]}"] if instr.params[0] else []
    if op in ("x", "h", "z"):
        return [f"{op} {q[0]}"]
    if op == "rz":
        return [f"rz {q[0]}, {_qasm_angle(instr.params[0])}"]
    if op == "cx":
        return [f"cnot {q[0]}, {q[1]}"]
    if op == "cz":
        return [f"cz {q[0]}, {q[1]}"]
    if op == "ccx":
        return [f"toffoli {q[0]}, {q[1]}, {q[2]}"]
    if op == "crz":
        return [f"cr {q[0]}, {q[1]}, {_qasm_angle(instr.params[0])}"]
    if op == "ccrz":
        half = instr.params[0].half()
        c0, c1, t = q
        return [f"cr {c1}, {t}, {_qasm_angle(half)}", f"cnot {c0}, {c1}",
                f"cr {c1}, {t}, {_qasm_angle(-half)}", f"cnot {c0}, {c1}",
                f"cr {c0}, {t}, {_qasm_angle(half)}"]
    raise ValueError(f"cannot emit {op!r}")


def emit_qasm(registers, prefix, assertion: Assertion | None = None) -> str:
    """Export-only gate-per-line assembly ending in a full measurement."""
    nq = sum(r.width for r in registers)
    out = ["version 1", f"qubits {nq}"]
    for r in registers:
        out.append(f"# {r.name} = q[{r.offset}..{r.offset + r.width - 1}]")
    if assertion is not None:
        out.append(f"# breakpoint: assert {assertion.describe()}")
    for instr in prefix:
        for low in expand(instr):
            out.extend(_qasm_lines(low))
    out.append("measure_all")
    return "\n".join(out) + "\n"


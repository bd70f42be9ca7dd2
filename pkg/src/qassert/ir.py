"""Instruction and angle types shared by the gate library, parser and engine."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

_EXACT = re.compile(r"^([+-]?)(?:(\d+)\*)?pi(?:/(?:2\^(\d+)|(\d+)))?$")


@dataclass(frozen=True)
class Angle:
    """A rotation angle kept exact as a rational multiple of pi when possible."""

    pi_multiple: Fraction | None = None
    decimal: float | None = None

    @classmethod
    def pi_over_pow2(cls, k: int, sign: int = 1) -> "Angle":
        return cls(Fraction(sign, 2 ** k))

    @classmethod
    def of(cls, value) -> "Angle":
        if isinstance(value, Angle):
            return value
        if isinstance(value, Fraction):
            return cls(value)
        return cls(decimal=float(value))

    @classmethod
    def parse(cls, text: str) -> "Angle":
        m = _EXACT.match(text)
        if m:
            sign, num, k, den = m.groups()
            frac = Fraction(int(num or 1), 2 ** int(k) if k is not None else int(den or 1))
            return cls(-frac if sign == "-" else frac)
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"angle must be finite: {text!r}")
        return cls(decimal=value)

    @property
    def radians(self) -> float:
        if self.pi_multiple is not None:
            return float(self.pi_multiple) * math.pi
        return float(self.decimal)

    def __neg__(self) -> "Angle":
        if self.pi_multiple is not None:
            return Angle(-self.pi_multiple)
        return Angle(decimal=-self.decimal)

    def half(self) -> "Angle":
        if self.pi_multiple is not None:
            return Angle(self.pi_multiple / 2)
        return Angle(decimal=self.decimal / 2)

    def __str__(self) -> str:
        if self.pi_multiple is None:
            return repr(float(self.decimal))
        f = self.pi_multiple
        sign = "-" if f < 0 else ""
        num, den = abs(f.numerator), f.denominator
        head = "pi" if num == 1 else f"{num}*pi"
        if den == 1:
            return sign + head
        if den > 2 and den & (den - 1) == 0:
            return f"{sign}{head}/2^{den.bit_length() - 1}"
        return f"{sign}{head}/{den}"


# mnemonic -> (number of qubit operands, parameter kind or None)
ELEMENTARY = {
    "x": (1, None),
    "h": (1, None),
    "z": (1, None),
    "rz": (1, "angle"),
    "cx": (2, None),
    "cz": (2, None),
    "crz": (2, "angle"),
    "ccx": (3, None),
    "ccrz": (3, "angle"),
    "prep": (1, "bit"),
}
ROTATIONS = {"rz", "crz", "ccrz"}


@dataclass(frozen=True)
class Instruction:
    """One program statement.

    ``operands`` holds one tuple of qubit indices per operand: singletons for
    qubit operands, longer tuples for register operands of macros.
    """

    op: str
    operands: tuple[tuple[int, ...], ...]
    params: tuple = ()

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for group in self.operands for q in group)

    @property
    def is_elementary(self) -> bool:
        return self.op in ELEMENTARY


def gate(op: str, *qubits: int, angle=None, bit=None) -> Instruction:
    params = ()
    if angle is not None:
        params = (Angle.of(angle),)
    elif bit is not None:
        params = (int(bit),)
    return Instruction(op, tuple((int(q),) for q in qubits), params)

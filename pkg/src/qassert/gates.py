"""Gate library: elementary matrices and composite circuit fragments.

Fragments are flat sequences of elementary instructions. Controlled
rotations (``crz``/``ccrz``) use phase-gate semantics, ``diag(1, e^{i theta})``
on the target when all controls are set; the uncontrolled ``rz`` is the usual
z-rotation, which differs from a phase gate only by a global phase.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .ir import ROTATIONS, Angle, Instruction, gate

log = logging.getLogger(__name__)

_S = 1 / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
H = np.array([[_S, _S], [_S, -_S]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def phase(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)]).astype(np.complex128)


def elementary(name: str, theta: float | None = None) -> np.ndarray:
    """2x2 unitary for ``X``, ``H``, ``Z``, ``Rz(theta)`` or ``Phase(theta)``."""
    key = name.lower()
    if key in ("x", "h", "z"):
        return {"x": X, "h": H, "z": Z}[key].copy()
    if key in ("rz", "phase", "p"):
        if theta is None or not math.isfinite(theta):
            raise ValueError(f"{name} needs a finite angle")
        return rz(theta) if key == "rz" else phase(theta)
    raise ValueError(f"unknown elementary gate {name!r}")


def operator(instr: Instruction) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    """(matrix, targets, controls) realizing an elementary instruction."""
    q = instr.qubits
    op = instr.op
    if op in ROTATIONS:
        theta = instr.params[0].radians
        if op == "rz":
            return rz(theta), q, ()
        return phase(theta), q[-1:], q[:-1]
    if op in ("x", "cx", "ccx"):
        return X, q[-1:], q[:-1]
    if op in ("z", "cz"):
        return Z, q[-1:], q[:-1]
    if op == "h":
        return H, q, ()
    raise ValueError(f"{op!r} is not a unitary elementary gate")


def invert(instr: Instruction) -> Instruction:
    if instr.op in ROTATIONS:
        return Instruction(instr.op, instr.operands, (-instr.params[0],))
    if instr.op in ("x", "h", "z", "cx", "cz", "ccx"):
        return instr
    raise ValueError(f"{instr.op!r} has no inverse")


@dataclass(frozen=True)
class Fragment:
    """Immutable sequence of elementary instructions plus the ancillas it borrows."""

    ops: tuple[Instruction, ...] = ()
    ancillas: frozenset[int] = field(default_factory=frozenset)

    def inverse(self) -> "Fragment":
        return Fragment(tuple(invert(i) for i in reversed(self.ops)), self.ancillas)

    def __add__(self, other: "Fragment") -> "Fragment":
        return Fragment(self.ops + other.ops, self.ancillas | other.ancillas)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @property
    def qubits(self) -> frozenset[int]:
        return frozenset(q for i in self.ops for q in i.qubits)


def concat(parts) -> Fragment:
    out = Fragment()
    for p in parts:
        out = out + p
    return out


def unitary(fragment: Fragment, num_qubits: int) -> np.ndarray:
    """Dense matrix of a fragment, built column by column on basis states."""
    from .statevector import StateVector, apply

    dim = 1 << num_qubits
    cols = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        amps = np.zeros(dim, dtype=np.complex128)
        amps[j] = 1.0
        sv = StateVector(amps)
        for instr in fragment:
            apply(sv, *operator(instr))
        cols[:, j] = sv.amplitudes
    return cols


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    """Compare matrices after aligning the first nonzero entry of column 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    pivot = np.flatnonzero(np.abs(a[:, 0]) > atol)
    if len(pivot) == 0:
        return np.allclose(a, b, atol=atol)
    i = pivot[0]
    if abs(b[i, 0]) <= atol:
        return False
    ph = (b[i, 0] / abs(b[i, 0])) / (a[i, 0] / abs(a[i, 0]))
    return np.allclose(a * ph, b, atol=atol)


# -- controlled rotation ---------------------------------------------------

CRZ_VARIANTS = ("drop-A", "drop-C", "flipped-buggy")


def crz_decomposed(control: int, target: int, theta, variant: str = "drop-C") -> Fragment:
    """Controlled rotation from two CNOTs and three z-rotations.

    ``drop-A`` and ``drop-C`` are the two correct orderings; ``flipped-buggy``
    swaps the target half-angle signs and rotates the wrong way.
    """
    if control == target:
        raise ValueError("control and target must differ")
    half = Angle.of(theta).half()
    c, t = control, target
    if variant == "drop-A":
        ops = [gate("rz", t, angle=half), gate("cx", c, t), gate("rz", t, angle=-half), gate("cx", c, t)]
    elif variant == "drop-C":
        ops = [gate("cx", c, t), gate("rz", t, angle=-half), gate("cx", c, t), gate("rz", t, angle=half)]
    elif variant == "flipped-buggy":
        ops = [gate("rz", t, angle=-half), gate("cx", c, t), gate("rz", t, angle=half), gate("cx", c, t)]
    else:
        raise ValueError(f"unknown variant {variant!r}; choose from {CRZ_VARIANTS}")
    ops.append(gate("rz", c, angle=half))
    return Fragment(tuple(ops))


# -- Fourier-space arithmetic ----------------------------------------------

def qft(qubits, inverse: bool = False) -> Fragment:
    """QFT without the final swaps: qubit j ends with phase 2*pi*b / 2^(j+1)."""
    qubits = tuple(qubits)
    if not qubits:
        raise ValueError("qft needs at least one qubit")
    ops = []
    for j in range(len(qubits) - 1, -1, -1):
        ops.append(gate("h", qubits[j]))
        for k in range(j - 1, -1, -1):
            ops.append(gate("crz", qubits[k], qubits[j], angle=Angle.pi_over_pow2(j - k)))
    frag = Fragment(tuple(ops))
    return frag.inverse() if inverse else frag


def cadd(b, a: int, controls=(), inverse: bool = False) -> Fragment:
    """Add the constant ``a`` to Fourier-encoded ``b`` (mod 2^len(b)).

    Up to two control qubits; the inverse reverses the loops and negates
    every angle, computing ``b - a``.
    """
    b = tuple(b)
    controls = tuple(controls)
    width = len(b)
    if len(controls) > 2:
        raise ValueError(f"cadd supports at most 2 controls, got {len(controls)}")
    if not 0 <= a < 1 << width:
        raise ValueError(f"constant {a} does not fit in {width} bits")
    if set(controls) & set(b):
        raise ValueError("controls overlap the target register")
    ops = []
    for b_indx in range(width - 1, -1, -1):
        for a_indx in range(b_indx, -1, -1):
            if (a >> a_indx) & 1:
                angle = Angle.pi_over_pow2(b_indx - a_indx)
                op = ("rz", "crz", "ccrz")[len(controls)]
                ops.append(gate(op, *controls, b[b_indx], angle=angle))
    frag = Fragment(tuple(ops))
    return frag.inverse() if inverse else frag


def modadd(b, anc: int, a: int, N: int, controls=(), inverse: bool = False) -> Fragment:
    """Doubly controlled ``b <- (b + a) mod N`` on Fourier-encoded ``b``.

    ``b`` needs one spare high qubit for the sign test; ``anc`` is a single
    comparison ancilla that is returned to |0>. Requires ``a, b < N``.
    """
    b = tuple(b)
    if N >= 1 << (len(b) - 1):
        raise ValueError(f"modulus {N} needs a register wider than {len(b)} qubits")
    if not 0 <= a < N:
        raise ValueError(f"constant {a} must lie in [0, {N})")
    msb = b[-1]
    add_a = cadd(b, a, controls)
    parts = [
        add_a,
        cadd(b, N, inverse=True),
        qft(b, inverse=True),
        Fragment((gate("cx", msb, anc),)),
        qft(b),
        cadd(b, N, (anc,)),
        add_a.inverse(),
        qft(b, inverse=True),
        Fragment((gate("x", msb), gate("cx", msb, anc), gate("x", msb))),
        qft(b),
        add_a,
    ]
    frag = Fragment(concat(parts).ops, frozenset({anc}))
    return frag.inverse() if inverse else frag


def cmodmul(ctrl: int, x, b, anc: int, a: int, N: int, inverse: bool = False,
            allow_noninvertible: bool = False) -> Fragment:
    """Controlled ``b <- (b + a*x) mod N``; the inverse computes ``b - a*x``.

    Each bit of ``x`` drives one doubly controlled modular adder of
    ``2^i * a mod N``. With ``ctrl`` at 0 the register ``b`` is unchanged.
    """
    x = tuple(x)
    b = tuple(b)
    if N < 2:
        raise ValueError("modulus must be at least 2")
    if math.gcd(a, N) != 1:
        if not allow_noninvertible:
            raise ValueError(f"multiplier {a} is not invertible mod {N}")
        log.warning("multiplier %d is not invertible mod %d", a, N)
    if len(b) < N.bit_length() + 1:
        raise ValueError(f"b register needs at least {N.bit_length() + 1} qubits")
    parts = [qft(b)]
    for i, xi in enumerate(x):
        parts.append(modadd(b, anc, (a << i) % N, N, (ctrl, xi)))
    parts.append(qft(b, inverse=True))
    frag = Fragment(concat(parts).ops, frozenset({anc}))
    return frag.inverse() if inverse else frag


def cswap(ctrl: int, p, q) -> Fragment:
    ops = []
    for pi, qi in zip(p, q, strict=True):
        ops += [gate("cx", qi, pi), gate("ccx", ctrl, pi, qi), gate("cx", qi, pi)]
    return Fragment(tuple(ops))


def controlled_multiplier(ctrl: int, x, b, anc: int, a: int, a_inv: int, N: int,
                          allow_noninvertible: bool = True) -> Fragment:
    """In-place controlled ``x <- a*x mod N`` using ``b`` as a zeroed workspace.

    Multiply-accumulate into ``b``, swap, then un-accumulate with ``a_inv``;
    ``b`` only returns to zero when ``a * a_inv = 1 (mod N)``.
    """
    x = tuple(x)
    b = tuple(b)
    if len(x) >= len(b):
        raise ValueError("workspace b must be wider than x")
    if (a * a_inv) % N != 1:
        log.warning("a=%d, a_inv=%d are not inverses mod %d; workspace will not be cleared", a, a_inv, N)
    return (cmodmul(ctrl, x, b, anc, a, N)
            + cswap(ctrl, x, b[:len(x)])
            + cmodmul(ctrl, x, b, anc, a_inv, N, inverse=True, allow_noninvertible=allow_noninvertible))


def multiplier_constants(a: int, N: int, count: int) -> list[tuple[int, int]]:
    """``(a^(2^k) mod N, its inverse)`` for k = 0 .. count-1."""
    if math.gcd(a, N) != 1:
        raise ValueError(f"{a} is not invertible mod {N}")
    out = []
    ak = a % N
    for _ in range(count):
        out.append((ak, pow(ak, -1, N)))
        ak = ak * ak % N
    return out


def cmodexp(upper, x, b, anc: int, a: int, N: int, inverses=None) -> Fragment:
    """Controlled modular exponentiation ladder for phase estimation.

    ``upper[-1-k]`` controls multiplication by ``a^(2^k)``, so an inverse QFT
    on ``upper`` reads the phase estimate as a little-endian integer. The
    lower register ``x`` must hold 1 beforehand.
    """
    upper = tuple(upper)
    consts = multiplier_constants(a, N, len(upper))
    if inverses is None:
        inverses = [inv for _, inv in consts]
    if len(inverses) != len(upper):
        raise ValueError("need one inverse per upper-register qubit")
    stages = [
        controlled_multiplier(upper[-1 - k], x, b, anc, ak, int(inverses[k]), N)
        for k, (ak, _) in enumerate(consts)
    ]
    return concat(stages)


# -- amplitude amplification -----------------------------------------------

def _and_ladder(q, ancilla) -> Fragment:
    q = tuple(q)
    anc = tuple(ancilla)
    ops = [gate("ccx", q[1], q[0], anc[0])]
    for j in range(1, len(q) - 1):
        ops.append(gate("ccx", anc[j - 1], q[j + 1], anc[j]))
    return Fragment(tuple(ops), frozenset(anc))


def _phase_flip_all_ones(q, ancilla) -> Fragment:
    q = tuple(q)
    anc = tuple(ancilla)
    if len(q) < 2:
        raise ValueError("need at least two search qubits")
    if len(anc) < len(q) - 1:
        raise ValueError(f"{len(q)} search qubits need {len(q) - 1} ancillas, got {len(anc)}")
    ladder = _and_ladder(q, anc)
    return ladder + Fragment((gate("cz", anc[len(q) - 2], q[-1]),)) + ladder.inverse()


def grover_diffusion(q, ancilla) -> Fragment:
    """Reflection about the uniform superposition using a Toffoli ladder."""
    q = tuple(q)
    hs = Fragment(tuple(gate("h", j) for j in q))
    xs = Fragment(tuple(gate("x", j) for j in q))
    return hs + xs + _phase_flip_all_ones(q, ancilla) + xs + hs


def grover_oracle(q, ancilla, marked: int) -> Fragment:
    """Phase-flip the basis state ``marked`` of register ``q``."""
    q = tuple(q)
    if not 0 <= marked < 1 << len(q):
        raise ValueError(f"marked item {marked} out of range for {len(q)} qubits")
    flips = Fragment(tuple(gate("x", j) for i, j in enumerate(q) if not (marked >> i) & 1))
    return flips + _phase_flip_all_ones(q, ancilla) + flips


def grover_iterations(n: int) -> int:
    return int(math.floor(math.pi / 4 * math.sqrt(2 ** n)))


"""Chi-square goodness-of-fit and independence tests.

The p-value kernel is the regularized upper incomplete gamma function
``Q(a, x)``; ``P(chi2_dof >= s) = Q(dof / 2, s / 2)``.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

ITMAX = 10_000
EPS = 1e-16
FPMIN = 1e-300
LOW_EXPECTED = 5.0


class Histogram(Mapping):
    """Immutable outcome -> count map over integer register readings."""

    def __init__(self, counts: Mapping[int, int] | None = None):
        data = {}
        for outcome, count in (counts or {}).items():
            count = int(count)
            if count < 0:
                raise ValueError(f"negative count {count} for outcome {outcome}")
            if count:
                data[int(outcome)] = count
        self._counts = dict(sorted(data.items()))

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "Histogram":
        arr = np.asarray(values if isinstance(values, np.ndarray) else list(values), dtype=np.int64)
        outcomes, counts = np.unique(arr, return_counts=True)
        return cls(dict(zip(outcomes.tolist(), counts.tolist())))

    def __getitem__(self, outcome: int) -> int:
        return self._counts.get(outcome, 0)

    def __iter__(self):
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __contains__(self, outcome) -> bool:
        return outcome in self._counts

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def frequencies(self) -> dict[int, float]:
        total = self.total
        return {k: v / total for k, v in self._counts.items()}

    def __eq__(self, other) -> bool:
        if isinstance(other, Histogram):
            return self._counts == other._counts
        if isinstance(other, Mapping):
            return self._counts == {k: v for k, v in other.items() if v}
        return NotImplemented

    def __repr__(self) -> str:
        return f"Histogram({self._counts})"


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts; ``counts[i][j]`` pairs ``rows[i]`` of A with ``cols[j]`` of B."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]

    @classmethod
    def from_pairs(cls, a_values, b_values) -> "ContingencyTable":
        a = np.asarray(a_values, dtype=np.int64)
        b = np.asarray(b_values, dtype=np.int64)
        if a.shape != b.shape:
            raise ValueError("paired readings must have equal length")
        rows, ai = np.unique(a, return_inverse=True)
        cols, bi = np.unique(b, return_inverse=True)
        grid = np.zeros((len(rows), len(cols)), dtype=np.int64)
        np.add.at(grid, (ai, bi), 1)
        return cls(tuple(rows.tolist()), tuple(cols.tolist()), tuple(map(tuple, grid.tolist())))

    @classmethod
    def from_array(cls, counts) -> "ContingencyTable":
        grid = np.asarray(counts, dtype=np.int64)
        if grid.ndim != 2 or (grid < 0).any():
            raise ValueError("contingency counts must be a nonnegative 2-D array")
        return cls(tuple(range(grid.shape[0])), tuple(range(grid.shape[1])), tuple(map(tuple, grid.tolist())))

    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64).reshape(len(self.rows), len(self.cols))

    @property
    def total(self) -> int:
        return int(sum(map(sum, self.counts)))

    def transpose(self) -> "ContingencyTable":
        return ContingencyTable(self.cols, self.rows, tuple(zip(*self.counts)) if self.counts else ())

    def pruned(self) -> "ContingencyTable":
        grid = self.array()
        keep_r = grid.sum(axis=1) > 0
        keep_c = grid.sum(axis=0) > 0
        grid = grid[keep_r][:, keep_c].astype(np.int64)
        return ContingencyTable(
            tuple(r for r, k in zip(self.rows, keep_r) if k),
            tuple(c for c, k in zip(self.cols, keep_c) if k),
            tuple(map(tuple, grid.tolist())),
        )


@dataclass(frozen=True)
class ChiSquareResult:
    """Outcome of a chi-square test.

    ``flag`` marks results that were not computed from the statistic:
    ``"impossible"`` (observed mass on a zero-probability cell, p = 0) and
    ``"degenerate"`` (fewer than two populated rows or columns; dof = 0, p = 1).
    """

    statistic: float
    dof: int
    p_value: float
    min_expected: float = math.inf
    flag: str | None = field(default=None)

    @property
    def low_power(self) -> bool:
        return self.min_expected < LOW_EXPECTED


def _series_p(a: float, x: float, gln: float) -> float:
    ap = a
    term = total = 1.0 / a
    for _ in range(ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(-x + a * math.log(x) - gln)
    raise ArithmeticError(f"incomplete gamma series failed to converge (a={a}, x={x})")


def _continued_fraction_q(a: float, x: float, gln: float) -> float:
    # modified Lentz evaluation
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(-x + a * math.log(x) - gln) * h
    raise ArithmeticError(f"incomplete gamma continued fraction failed to converge (a={a}, x={x})")


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    a = float(a)
    x = float(x)
    if not (math.isfinite(a) and math.isfinite(x)):
        raise ValueError(f"gamma_q needs finite arguments, got a={a}, x={x}")
    if a <= 0 or x < 0:
        raise ValueError(f"gamma_q needs a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0.0:
        return 1.0
    gln = math.lgamma(a)
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _series_p(a, x, gln)))
    return min(1.0, max(0.0, _continued_fraction_q(a, x, gln)))


def chi2_sf(statistic: float, dof: int) -> float:
    if dof < 1:
        raise ValueError("dof must be positive")
    return gamma_q(dof / 2.0, max(statistic, 0.0) / 2.0)


def chi2_gof(observed: Mapping[int, int], expected: Mapping[int, float]) -> ChiSquareResult:
    """Pearson goodness of fit of ``observed`` counts to ``expected`` probabilities.

    Cells are the outcomes with nonzero expected probability; dof is their
    count minus one. Observed counts on zero-probability outcomes make the
    hypothesis impossible and yield ``p_value == 0`` flagged ``"impossible"``.
    """
    probs = {int(k): float(v) for k, v in expected.items()}
    if any(p < 0 for p in probs.values()):
        raise ValueError("expected probabilities must be nonnegative")
    if abs(sum(probs.values()) - 1.0) > 1e-9:
        raise ValueError(f"expected probabilities sum to {sum(probs.values())!r}, not 1")
    total = sum(int(c) for c in observed.values())
    if total <= 0:
        raise ValueError("observed histogram is empty")
    cells = sorted(k for k, p in probs.items() if p > 0)
    stray = sum(int(c) for k, c in observed.items() if probs.get(int(k), 0.0) <= 0)
    if stray:
        return ChiSquareResult(math.inf, max(len(cells) - 1, 1), 0.0, flag="impossible")
    obs = np.array([observed.get(k, 0) for k in cells], dtype=np.float64)
    exp = np.array([probs[k] for k in cells]) * total
    statistic = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(cells) - 1
    if dof < 1:
        # a single admissible cell holding all mass is a perfect fit
        return ChiSquareResult(0.0, 0, 1.0, float(exp.min()), flag="degenerate")
    return ChiSquareResult(statistic, dof, chi2_sf(statistic, dof), float(exp.min()))


def chi2_contingency(table: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-square test of independence (no continuity correction)."""
    pruned = table.pruned()
    grid = pruned.array()
    r, c = grid.shape
    if r < 2 or c < 2:
        return ChiSquareResult(0.0, 0, 1.0, flag="degenerate")
    total = grid.sum()
    expected = np.outer(grid.sum(axis=1), grid.sum(axis=0)) / total
    statistic = float(np.sum((grid - expected) ** 2 / expected))
    dof = (r - 1) * (c - 1)
    return ChiSquareResult(statistic, dof, chi2_sf(statistic, dof), float(expected.min()))

"""Multi-seed soak checks of the statistical assertions' operating characteristics."""
from __future__ import annotations

from dataclasses import dataclass, field

from .assertions import PASS, run_program
from .program import parse

BELL = "reg q 2\nh q[0]\ncx q[0] q[1]\nassert entangled q[0] q[1]\n"
INDEPENDENT = "reg q 2\nh q[0]\nh q[1]\nassert product q[0] q[1]\n"

POWER_SHOTS = (4, 8, 16, 32)
BELL_MIN_PASS = 0.99
PRODUCT_MIN_PASS = 0.90


def pass_count(source: str, shots: int, seeds) -> int:
    program = parse(source)
    return sum(run_program(program, shots=shots, seed=s, workers=1)[0].status == PASS for s in seeds)


@dataclass
class SoakResult:
    seeds: int
    bell_pass: int
    product_pass: int
    power: dict[int, int] = field(default_factory=dict)  # shots -> Bell rejections

    @property
    def monotone(self) -> bool:
        rates = [self.power[s] for s in sorted(self.power)]
        return all(a <= b for a, b in zip(rates, rates[1:]))

    @property
    def ok(self) -> bool:
        return (self.bell_pass >= BELL_MIN_PASS * self.seeds
                and self.product_pass >= PRODUCT_MIN_PASS * self.seeds
                and self.monotone)

    def summary(self) -> str:
        power = ", ".join(f"{s}:{n}/{self.seeds}" for s, n in sorted(self.power.items()))
        return "\n".join([
            f"bell entangled @16 shots: {self.bell_pass}/{self.seeds} pass (need >= {BELL_MIN_PASS:.0%})",
            f"independent product @16 shots: {self.product_pass}/{self.seeds} pass (need >= {PRODUCT_MIN_PASS:.0%})",
            f"bell power by shots: {power} ({'monotone' if self.monotone else 'NOT monotone'})",
            f"soak: {'pass' if self.ok else 'fail'}",
        ]) + "\n"


def run_soak(seeds: int = 100) -> SoakResult:
    rng = range(seeds)
    power = {n: pass_count(BELL, n, rng) for n in POWER_SHOTS}
    return SoakResult(seeds, power[16], pass_count(INDEPENDENT, 16, rng), power)

"""Finite-shot simulation of the control-qubit measurement.

Every estimate is a deterministic function of its inputs and a 64-bit
seed. Counts come from :mod:`swapnet.kernels`; the compiled and numpy
kernels return identical counts for the same seed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist

from . import kernels
from .networks import NetworkSpec, run_interferometer

DEFAULT_SHOTS = 10_000
DEFAULT_CONFIDENCE = 0.95
CSV_HEADER = "point,std_error,ci_low,ci_high,shots,p0_hat"
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ShotPlan:
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    confidence: float = DEFAULT_CONFIDENCE

    def __post_init__(self):
        if isinstance(self.shots, bool) or int(self.shots) != self.shots or self.shots < 1:
            raise ValueError(f"shots must be a positive integer, got {self.shots!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= _SEED_MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must lie in (0, 1), got {self.confidence!r}")
        object.__setattr__(self, "shots", int(self.shots))
        object.__setattr__(self, "seed", int(self.seed))

    def child(self, index: int, shots: int | None = None) -> "ShotPlan":
        """Plan for sub-task ``index`` with a seed split off this one."""
        return ShotPlan(self.shots if shots is None else shots, derive_seed(self.seed, index), self.confidence)


@dataclass(frozen=True)
class EstimateResult:
    point: float
    std_error: float
    ci_low: float
    ci_high: float
    shots: int
    p0_hat: float

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> str:
        return ",".join(_fmt(v) for v in (self.point, self.std_error, self.ci_low, self.ci_high, self.shots, self.p0_hat))

    def map_affine(self, slope: float, offset: float) -> "EstimateResult":
        """Push the estimate through ``x -> slope * x + offset`` (slope > 0)."""
        if slope <= 0:
            raise ValueError("slope must be positive to preserve interval order")
        return EstimateResult(
            point=slope * self.point + offset,
            std_error=slope * self.std_error,
            ci_low=slope * self.ci_low + offset,
            ci_high=slope * self.ci_high + offset,
            shots=self.shots,
            p0_hat=self.p0_hat,
        )


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else format(v, ".17g")


def derive_seed(master: int, index: int) -> int:
    """Seed for task ``index`` under ``master``; independent of scheduling order."""
    return kernels.mix64(kernels.stream_key(master) ^ kernels.mix64(index + 0x9E3779B97F4A7C15))


def sample_counts(p0: float, plan: ShotPlan) -> tuple[int, int]:
    """Simulate ``plan.shots`` control measurements; returns (zeros, ones)."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"probability out of range: {p0!r}")
    n0 = int(kernels.count_below(float(p0), plan.shots, plan.seed))
    return n0, plan.shots - n0


def wilson_interval(successes: int, n: int, confidence: float) -> tuple[float, float]:
    z = NormalDist().inv_cdf(0.5 * (1.0 + confidence))
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, min(phat, center - half)), min(1.0, max(phat, center + half))


def estimate_from_counts(n0: int, shots: int, confidence: float) -> EstimateResult:
    p0_hat = n0 / shots
    lo, hi = wilson_interval(n0, shots, confidence)
    return EstimateResult(
        point=2.0 * p0_hat - 1.0,
        std_error=2.0 * math.sqrt(p0_hat * (1.0 - p0_hat) / shots),
        ci_low=2.0 * lo - 1.0,
        ci_high=2.0 * hi - 1.0,
        shots=shots,
        p0_hat=p0_hat,
    )


def estimate_from_p0(p0: float, plan: ShotPlan) -> EstimateResult:
    """Visibility estimate v = 2 * P0_hat - 1 from a known exact P0."""
    n0, _ = sample_counts(p0, plan)
    return estimate_from_counts(n0, plan.shots, plan.confidence)


def estimate_visibility(spec: NetworkSpec, rho, phi: float, plan: ShotPlan) -> EstimateResult:
    """Simulate the interferometer exactly, then sample the control qubit."""
    return estimate_from_p0(run_interferometer(spec, rho, phi), plan)


def shots_for_precision(epsilon: float, confidence: float) -> int:
    """Hoeffding shot count so that |v_hat - v| <= epsilon with the given confidence."""
    if not 0.0 < epsilon <= 2.0:
        raise ValueError(f"epsilon must lie in (0, 2], got {epsilon!r}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence!r}")
    return max(1, math.ceil(2.0 * math.log(2.0 / (1.0 - confidence)) / epsilon**2))

"""Monte Carlo engine for exact-recovery experiments.

One trial: draw a fresh sensing matrix and a fresh random support, place
case-defined values on it, measure ``y = A x`` exactly, run the pursuit
for K iterations, and score exact recovery.  An experiment sweeps a grid
of (case, K, m) points, tallies successes per point, and attaches the
two probability bounds for comparison.

Determinism is structural: trial ``t`` of grid point ``g`` always uses
``StreamKey(master_seed, g * trials + t)``, so the tally is a pure
function of the config no matter how trials are scheduled.  Success
counts are summed, which is associative and commutative, so splitting
trials across processes cannot change any result.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Tuple

from scipy.stats import norm as _std_normal

from . import bounds
from .omp import DegenerateColumnError, check_exact_recovery, run_omp
from .phi import PhiFunction
from .signals import (
    Purpose,
    SensingMatrix,
    SignalCase,
    StreamKey,
    generate_signal,
    sample_sensing_matrix,
    sample_support,
)

__all__ = [
    "ExperimentConfig",
    "PointResult",
    "ExperimentResult",
    "TrialError",
    "phi_for_case",
    "run_trial",
    "run_experiment",
    "wilson_interval",
]

DEFAULT_RECOVERY_TOL = 1e-10

# Largest m accepted by run_trial; keeps a typo'd config from trying to
# allocate a multi-gigabyte matrix.
_MAX_M = 100_000


class TrialError(RuntimeError):
    """Solver failure inside one trial, tagged with where it happened."""

    def __init__(
        self, m: int, K: int, case: SignalCase, trial_index: int, cause: Exception
    ) -> None:
        super().__init__(
            f"trial {trial_index} failed at m={m}, K={K}, case={case.label()}: {cause}"
        )
        self.m = m
        self.K = K
        self.case = case
        self.trial_index = trial_index


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment sweep.

    The grid is the cartesian product ``cases x k_values x m_values``,
    iterated in that nesting order.  ``master_seed`` pins every random
    draw; two runs of the same config give the same counts.
    """

    n: int
    m_values: Tuple[int, ...]
    k_values: Tuple[int, ...]
    cases: Tuple[SignalCase, ...]
    trials: int
    master_seed: int
    recovery_tolerance: float = DEFAULT_RECOVERY_TOL

    def __post_init__(self) -> None:
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "cases", tuple(self.cases))
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if not self.m_values:
            raise ValueError("m_values must be nonempty")
        if any(b <= a for a, b in zip(self.m_values, self.m_values[1:])):
            raise ValueError("m_values must be strictly increasing")
        if not self.k_values:
            raise ValueError("k_values must be nonempty")
        for K in self.k_values:
            if not 1 <= K < min(self.m_values):
                raise ValueError(
                    f"every K must satisfy 1 <= K < min(m), got K={K} "
                    f"with min(m)={min(self.m_values)}"
                )
            if K >= self.n:
                raise ValueError(f"every K must be < n, got K={K}, n={self.n}")
        if not self.cases:
            raise ValueError("cases must be nonempty")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0.0 < self.recovery_tolerance < 1.0:
            raise ValueError("recovery_tolerance must be in (0, 1)")

    @classmethod
    def reference_grid(
        cls,
        trials: int = 1000,
        master_seed: int = 0,
        n: int = 1024,
    ) -> "ExperimentConfig":
        """The standard large sweep: m = 100:50:1000, K in {15, 30},
        all four signal cases."""
        return cls(
            n=n,
            m_values=tuple(range(100, 1001, 50)),
            k_values=(15, 30),
            cases=(
                SignalCase.flat(),
                SignalCase.decaying(1.1),
                SignalCase.decaying(1.2),
                SignalCase.gaussian(1.0),
            ),
            trials=trials,
            master_seed=master_seed,
        )

    def grid_points(self) -> Iterator[Tuple[SignalCase, int, int]]:
        """Yield (case, K, m) in deterministic sweep order."""
        for case in self.cases:
            for K in self.k_values:
                for m in self.m_values:
                    yield case, K, m

    @property
    def point_count(self) -> int:
        return len(self.cases) * len(self.k_values) * len(self.m_values)


def phi_for_case(case: SignalCase) -> PhiFunction:
    """Disparity function matched to a signal case.

    Flat magnitudes admit no better budget than Cauchy-Schwarz;
    geometric decay gets the tight geometric budget with the same ratio;
    Gaussian magnitudes get the piecewise empirical budget.
    """
    if case.kind == "flat":
        return PhiFunction.cauchy_schwarz()
    if case.kind == "decaying":
        assert case.alpha is not None
        return PhiFunction.strongly_decaying(case.alpha)
    return PhiFunction.gaussian_empirical()


def run_trial(
    m: int,
    n: int,
    K: int,
    case: SignalCase,
    key: StreamKey,
    tolerance: float = DEFAULT_RECOVERY_TOL,
    matrix: Optional[SensingMatrix] = None,
) -> bool:
    """One recovery trial; True iff the pursuit reproduces the signal.

    The matrix, support and nonzero values come from substreams of
    ``key``, so the outcome is a pure function of the arguments.
    ``matrix`` overrides the sampled one (a hook for tests that need a
    designed operator, e.g. the identity).

    Raises
    ------
    ValueError
        If ``K >= m`` or ``m`` exceeds the size cap.
    """
    if not 1 <= K < m:
        raise ValueError(f"need 1 <= K < m, got K={K}, m={m}")
    if m > _MAX_M:
        raise ValueError(f"m={m} exceeds the cap of {_MAX_M}")
    if matrix is None:
        matrix = sample_sensing_matrix(m, n, key.with_purpose(Purpose.MATRIX))
    elif matrix.entries.shape != (m, n):
        raise ValueError("matrix hook has the wrong shape")
    support = sample_support(n, K, key.with_purpose(Purpose.SUPPORT))
    signal = generate_signal(n, support, case, key.with_purpose(Purpose.SIGNAL))
    y = matrix.entries @ signal.values
    result = run_omp(matrix, y, K)
    return check_exact_recovery(result, signal, tolerance)


def _count_successes(
    m: int,
    n: int,
    K: int,
    case: SignalCase,
    master_seed: int,
    first_trial: int,
    count: int,
    tolerance: float,
) -> int:
    """Run ``count`` consecutive keyed trials; return the success tally.

    Top-level so process pools can pickle it.
    """
    hits = 0
    for t in range(first_trial, first_trial + count):
        key = StreamKey(master_seed, trial_index=t)
        try:
            if run_trial(m, n, K, case, key, tolerance):
                hits += 1
        except DegenerateColumnError as err:
            raise TrialError(m, K, case, t, err) from err
    return hits


@dataclass(frozen=True)
class PointResult:
    """Tally and attached bounds for one (m, K, case) grid point."""

    m: int
    n: int
    K: int
    case: SignalCase
    trials: int
    successes: int
    disparity_bound_value: float
    baseline_bound_value: float

    def __post_init__(self) -> None:
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def probability(self) -> float:
        return self.successes / self.trials

    def confidence_interval(self, confidence: float = 0.95) -> Tuple[float, float]:
        return wilson_interval(self.successes, self.trials, confidence)


@dataclass(frozen=True)
class ExperimentResult:
    """All grid-point tallies plus the config that produced them."""

    config: ExperimentConfig
    points: Tuple[PointResult, ...]

    def point(self, m: int, K: int, case: SignalCase) -> PointResult:
        for p in self.points:
            if p.m == m and p.K == K and p.case == case:
                return p
        raise KeyError(f"no grid point m={m}, K={K}, case={case.label()}")


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Stays inside [0, 1] and keeps sensible width at proportions of 0 or
    1, where the normal-approximation interval collapses.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    z = float(_std_normal.ppf(0.5 + confidence / 2.0))
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = (
        z
        * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
        / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


def _chunk_ranges(total: int, chunks: int) -> Iterator[Tuple[int, int]]:
    """Split ``range(total)`` into ``chunks`` contiguous (start, count) runs."""
    chunks = max(1, min(chunks, total))
    base, extra = divmod(total, chunks)
    start = 0
    for i in range(chunks):
        count = base + (1 if i < extra else 0)
        yield start, count
        start += count


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    progress: Optional[Callable[[int, int, PointResult], None]] = None,
) -> ExperimentResult:
    """Sweep the config's grid and tally recoveries at every point.

    ``workers > 1`` fans trials out over a process pool; per-trial keyed
    streams make the result identical for every worker count.
    ``progress``, if given, is called after each grid point with
    ``(points_done, points_total, result)``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    total = config.point_count
    points = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for g, (case, K, m) in enumerate(config.grid_points()):
            first = g * config.trials
            if pool is None:
                successes = _count_successes(
                    m, config.n, K, case, config.master_seed,
                    first, config.trials, config.recovery_tolerance,
                )
            else:
                futures = [
                    pool.submit(
                        _count_successes,
                        m, config.n, K, case, config.master_seed,
                        first + start, count, config.recovery_tolerance,
                    )
                    for start, count in _chunk_ranges(config.trials, workers)
                ]
                successes = sum(f.result() for f in futures)
            phi = phi_for_case(case)
            point = PointResult(
                m=m,
                n=config.n,
                K=K,
                case=case,
                trials=config.trials,
                successes=successes,
                disparity_bound_value=bounds.disparity_bound(m, config.n, K, phi).value,
                baseline_bound_value=bounds.baseline_bound(m, config.n, K).value,
            )
            points.append(point)
            if progress is not None:
                progress(g + 1, total, point)
    finally:
        if pool is not None:
            pool.shutdown()
    return ExperimentResult(config=config, points=tuple(points))

"""Seeded Monte Carlo estimation of range-union sizes.

Every random number is produced by a counter-based generator: draw j of
purpose segment s in replica r is a pure function of (seed, r, s, j).
Replicas therefore have independent, randomly-accessible streams, and an
estimate is bit-identical for a fixed seed no matter how replicas are
batched or spread across workers.  The mixer is the splitmix64 finalizer.

Walk simulation is vectorized across replicas: one inverse-CDF step per
time unit for discrete chains, and exponential holding times summed until
the budget is exceeded for continuous time (the final partial hold adds no
vertex).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain import (
    CONTINUOUS,
    Coupling,
    FixedPoints,
    IIDProduct,
    SharedPoint,
    StartScheme,
    TransitionKernel,
)
from .errors import (
    AssumptionViolationError,
    NegativeTimeError,
    SamplesNotRetainedError,
)

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SALT = np.uint64(0xD1B54A32D192ED03)
_SEGMENT = np.uint64(1) << np.uint64(40)


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _stream_keys(seed: int, replicas: np.ndarray) -> np.ndarray:
    """One decorrelated 64-bit stream key per replica index."""
    with np.errstate(over="ignore"):
        s = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GAMMA)
        r = _mix64(replicas.astype(np.uint64) * _GAMMA + _SALT)
        return _mix64(s ^ r)


def _uniforms(keys: np.ndarray, segment: int, counters) -> np.ndarray:
    """Uniforms in [0, 1) at the given (segment, counter) coordinates.

    ``counters`` may be a scalar (one draw per replica) or an array, in which
    case the result has shape (len(keys), len(counters)).
    """
    with np.errstate(over="ignore"):
        base = np.uint64(segment) * _SEGMENT
        c = np.asarray(counters, dtype=np.uint64) + np.uint64(1)
        if c.ndim == 0:
            state = keys + (base + c) * _GAMMA
        else:
            state = keys[:, None] + (base + c)[None, :] * _GAMMA
        bits = _mix64(state)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0**-53)


def derive_seed(seed: int, *parts: int) -> int:
    """Deterministically derive a sub-seed from a base seed and labels."""
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for p in parts:
            z = _mix64(z + _GAMMA * np.uint64((int(p) + 1) & 0xFFFFFFFFFFFFFFFF))
    return int(z)


@dataclass(frozen=True, eq=False)
class WalkJob:
    """A reproducible Monte Carlo job: kernel, start scheme, lifespans, seed."""

    kernel: TransitionKernel
    scheme: StartScheme
    lifespans: tuple
    replicas: int
    seed: int
    retain_samples: bool = False

    def __post_init__(self):
        if self.replicas < 1:
            raise AssumptionViolationError("need at least one replica")
        ts = tuple(self.lifespans)
        if self.kernel.variant == CONTINUOUS:
            ts = tuple(float(t) for t in ts)
        else:
            for t in ts:
                if isinstance(t, float) and not t.is_integer():
                    raise AssumptionViolationError(
                        "discrete chains need integer lifespans"
                    )
            ts = tuple(int(t) for t in ts)
        if any(t < 0 for t in ts):
            raise NegativeTimeError("lifespans must be >= 0")
        object.__setattr__(self, "lifespans", ts)
        self.scheme.validate_for(self.kernel)
        k = getattr(self.scheme, "k", None)
        if k is not None and not isinstance(self.scheme, SharedPoint):
            if k != len(ts):
                raise AssumptionViolationError(
                    f"scheme has {k} walkers but {len(ts)} lifespans given"
                )

    @property
    def k(self) -> int:
        return len(self.lifespans)


@dataclass(frozen=True, eq=False)
class RangeEstimate:
    """Mean union size with its standard error; samples kept on request."""

    mean: float
    std_error: float
    replicas: int
    seed: int
    samples: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Right-continuous step function F(y) = P(value <= y)."""

    values: np.ndarray
    probs: np.ndarray

    def evaluate(self, y) -> float:
        idx = int(np.searchsorted(self.values, y, side="right")) - 1
        return 0.0 if idx < 0 else float(self.probs[idx])

    def steps(self) -> list[tuple[float, float]]:
        return [(float(v), float(p)) for v, p in zip(self.values, self.probs)]


class _JobPlan:
    """Per-job precomputation shared by all replica batches."""

    def __init__(self, job: WalkJob):
        self.job = job
        kernel = job.kernel
        n = kernel.n
        self.n = n
        cum = np.cumsum(kernel.P, axis=1)
        cum[:, -1] = 1.0
        self.cum_rows = cum
        scheme = job.scheme
        if isinstance(scheme, IIDProduct):
            self.kind = "iid"
            self.start_cums = [self._cum(nu) for nu in scheme.nus]
        elif isinstance(scheme, SharedPoint):
            self.kind = "shared"
            self.start_cums = [self._cum(scheme.nu)]
        elif isinstance(scheme, FixedPoints):
            self.kind = "fixed"
            self.points = scheme.points
        elif isinstance(scheme, Coupling):
            self.kind = "coupling"
            self.table_shape = scheme.table.shape
            self.flat_cum = self._cum(scheme.table.reshape(-1))
        else:
            raise AssumptionViolationError(f"unknown scheme {type(scheme).__name__}")

    @staticmethod
    def _cum(weights: np.ndarray) -> np.ndarray:
        c = np.cumsum(np.asarray(weights, dtype=float))
        c[-1] = 1.0
        return c

    def starts(self, keys: np.ndarray) -> list[np.ndarray]:
        """Starting vertex of each walker, drawn from segment 0."""
        B = len(keys)
        k = self.job.k
        if self.kind == "fixed":
            return [np.full(B, x, dtype=np.intp) for x in self.points]
        if self.kind == "iid":
            out = []
            for i in range(k):
                u = _uniforms(keys, 0, i)
                out.append(np.searchsorted(self.start_cums[i], u, side="right"))
            return out
        if self.kind == "shared":
            u = _uniforms(keys, 0, 0)
            x = np.searchsorted(self.start_cums[0], u, side="right")
            return [x] * k
        # coupling: one draw over the flattened joint table
        u = _uniforms(keys, 0, 0)
        flat = np.searchsorted(self.flat_cum, u, side="right")
        multi = np.unravel_index(flat, self.table_shape)
        return [np.asarray(m, dtype=np.intp) for m in multi]


def _step(plan: _JobPlan, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    rows = plan.cum_rows[states]
    nxt = (rows <= u[:, None]).sum(axis=1)
    return np.minimum(nxt, plan.n - 1)


def _jump_counts(keys, segment, budget: float) -> np.ndarray:
    """Number of exponential(1) holding times fitting within the budget."""
    B = len(keys)
    counts = np.zeros(B, dtype=np.intp)
    if budget <= 0:
        return counts
    block = max(8, int(budget + 6.0 * math.sqrt(budget) + 16))
    total = np.zeros(B)
    idx = np.arange(B)
    offset = 0
    while len(idx):
        u = _uniforms(keys[idx], segment, offset + np.arange(block))
        holds = -np.log1p(-u)
        csum = total[idx, None] + np.cumsum(holds, axis=1)
        within = csum <= budget
        counts[idx] += within.sum(axis=1)
        total[idx] = csum[:, -1]
        idx = idx[within[:, -1]]
        offset += block
    return counts


def _simulate_batch(plan: _JobPlan, lo: int, hi: int) -> np.ndarray:
    """Union sizes for replicas lo..hi-1; pure in (job, replica index)."""
    job = plan.job
    B = hi - lo
    keys = _stream_keys(job.seed, np.arange(lo, hi))
    rows = np.arange(B)
    visited = np.zeros((B, plan.n), dtype=bool)
    starts = plan.starts(keys)
    continuous = job.kernel.variant == CONTINUOUS
    for i, t in enumerate(job.lifespans):
        states = np.array(starts[i], dtype=np.intp)
        visited[rows, states] = True
        step_seg = 1 + 2 * i
        if continuous:
            jumps = _jump_counts(keys, 2 + 2 * i, float(t))
            for j in range(int(jumps.max()) if B else 0):
                act = jumps > j
                if not act.any():
                    break
                u = _uniforms(keys, step_seg, j)
                states[act] = _step(plan, states[act], u[act])
                visited[rows[act], states[act]] = True
        else:
            for j in range(int(t)):
                u = _uniforms(keys, step_seg, j)
                states = _step(plan, states, u)
                visited[rows, states] = True
    return visited.sum(axis=1)


def sample_union(job: WalkJob, replica_index: int) -> int:
    """Union size of one replica; a pure function of (job, replica_index)."""
    plan = _JobPlan(job)
    return int(_simulate_batch(plan, replica_index, replica_index + 1)[0])


def _batch_size(n: int, replicas: int) -> int:
    return max(1, min(replicas, 65536, (1 << 21) // max(n, 1)))


def estimate(job: WalkJob, workers: int = 1) -> RangeEstimate:
    """Mean and standard error of the union size over job.replicas replicas.

    The result is bit-identical for a fixed seed regardless of ``workers``:
    replica streams are counter-based and aggregation order is fixed by
    replica index.
    """
    plan = _JobPlan(job)
    R = job.replicas
    sizes = np.empty(R, dtype=np.intp)
    chunk = _batch_size(plan.n, R)
    ranges = [(lo, min(lo + chunk, R)) for lo in range(0, R, chunk)]
    if workers > 1 and len(ranges) > 1:
        def run(bounds):
            lo, hi = bounds
            sizes[lo:hi] = _simulate_batch(plan, lo, hi)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, ranges))
    else:
        for lo, hi in ranges:
            sizes[lo:hi] = _simulate_batch(plan, lo, hi)
    mean = float(sizes.mean())
    se = float(sizes.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
    return RangeEstimate(
        mean=mean,
        std_error=se,
        replicas=R,
        seed=job.seed,
        samples=sizes if job.retain_samples else None,
    )


def empirical_cdf(source) -> EmpiricalCdf:
    """Empirical CDF of union sizes.

    Accepts a RangeEstimate whose samples were retained, or a WalkJob with
    ``retain_samples=True`` (which is then estimated here).
    """
    if isinstance(source, WalkJob):
        if not source.retain_samples:
            raise SamplesNotRetainedError("job was created without retain_samples")
        source = estimate(source)
    if not isinstance(source, RangeEstimate) or source.samples is None:
        raise SamplesNotRetainedError("no retained samples to build a CDF from")
    values, counts = np.unique(source.samples, return_counts=True)
    probs = np.cumsum(counts) / len(source.samples)
    probs[-1] = 1.0
    return EmpiricalCdf(values=values.astype(float), probs=probs)

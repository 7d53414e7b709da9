"""Exact survival probabilities and expected range sizes.

For a target vertex y, the survival probability P_nu(tau(y) > t) is the
chance that a walk started from nu has not visited y by time t.  Removing
row and column y from the kernel gives the grounded (substochastic) kernel
whose t-th power's row sums are exactly these probabilities.  Everything
here is built on that identity, evaluated three independent ways:

* iterated kernel-vector products (discrete time),
* a Poisson-weighted power series over the embedded jump kernel
  (continuous time, uniformization),
* the eigendecomposition of the grounded kernel symmetrized by the
  stationary distribution, which also yields the moment diagnostics used
  by the collaboration inequalities.

Expected range sizes follow from E|R(t)| = n - sum_y P_nu(tau(y) > t) and
its union analogues for several independent walkers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np
from scipy.special import gammaln

from .chain import (
    CONTINUOUS,
    LAZY,
    PLAIN,
    Coupling,
    FixedPoints,
    IIDProduct,
    SharedPoint,
    StartScheme,
    TransitionKernel,
    point_mass,
)
from .errors import (
    AssumptionViolationError,
    BadVertexError,
    EigenFailureError,
    NegativeTimeError,
    ParityViolationError,
    TableTooLargeError,
    TooLargeError,
)

POISSON_TAIL = 1e-12
ALPHA_CLAMP = 1e-12

# survival vectors are memoized per kernel while the tables stay small
_CACHE_MAX_N = 64
_CACHE_MAX_T = 512
_KERNEL_CACHE: WeakKeyDictionary = WeakKeyDictionary()


def _cache_for(kernel: TransitionKernel) -> dict:
    store = _KERNEL_CACHE.get(kernel)
    if store is None:
        store = {}
        _KERNEL_CACHE[kernel] = store
    return store


@dataclass(frozen=True, eq=False)
class GroundedKernel:
    """Kernel with the target's row and column removed.

    ``vertices[i]`` is the original label of reduced index i; the reduced
    matrix ``qhat`` is substochastic, with strict deficit on every row whose
    vertex neighbors the target.
    """

    y: int
    qhat: np.ndarray
    vertices: np.ndarray
    variant: str
    n_full: int

    def reduce_measure(self, nu: np.ndarray) -> np.ndarray:
        """Restriction of a start measure to the surviving states.

        Mass on the target is dropped: those trajectories are hit at time 0
        and contribute survival 0.
        """
        return np.asarray(nu, dtype=float)[self.vertices]


def grounded(kernel: TransitionKernel, y: int) -> GroundedKernel:
    """Remove row and column y from the kernel."""
    if not (0 <= y < kernel.n):
        raise BadVertexError(f"target {y} out of range for n={kernel.n}")
    keep = np.array([x for x in range(kernel.n) if x != y], dtype=int)
    qhat = kernel.P[np.ix_(keep, keep)].copy()
    qhat.setflags(write=False)
    return GroundedKernel(
        y=y, qhat=qhat, vertices=keep, variant=kernel.variant, n_full=kernel.n
    )


def _check_time_discrete(t) -> int:
    if isinstance(t, float) and not t.is_integer():
        raise AssumptionViolationError(f"discrete chains need integer times, got {t}")
    t = int(t)
    if t < 0:
        raise NegativeTimeError(f"time must be >= 0, got {t}")
    return t


def _check_time_real(t) -> float:
    t = float(t)
    if t < 0:
        raise NegativeTimeError(f"time must be >= 0, got {t}")
    return t


def _start_weights(gk: GroundedKernel, start) -> np.ndarray:
    """Start measure restricted to the grounded state space."""
    if np.isscalar(start) or isinstance(start, (int, np.integer)):
        x = int(start)
        if not (0 <= x < gk.n_full):
            raise BadVertexError(f"start {x} out of range")
        nu = point_mass(gk.n_full, x)
    else:
        nu = np.asarray(start, dtype=float)
        if nu.shape != (gk.n_full,):
            raise BadVertexError("start measure has wrong length")
    return gk.reduce_measure(nu)


def survival_power(gk: GroundedKernel, start, t) -> float:
    """P_nu(tau(y) > t) for a discrete chain by t kernel-vector products."""
    if gk.variant not in (PLAIN, LAZY):
        raise AssumptionViolationError("survival_power needs a discrete-time kernel")
    t = _check_time_discrete(t)
    nu_hat = _start_weights(gk, start)
    w = np.ones(len(gk.vertices))
    for _ in range(t):
        w = gk.qhat @ w
    return float(nu_hat @ w)


def _poisson_depth(times: np.ndarray) -> int:
    """Smallest power-series depth whose Poisson tail is below POISSON_TAIL
    for every requested time, honoring the 10*(t+10) hard cap."""
    tmax = float(np.max(times)) if len(times) else 0.0
    cap = int(10 * (tmax + 10))
    if tmax == 0.0:
        return 0
    m = np.arange(cap + 1)
    depth = 0
    for t in np.atleast_1d(times):
        t = float(t)
        if t == 0.0:
            continue
        logw = -t + m * math.log(t) - gammaln(m + 1)
        cdf = np.cumsum(np.exp(logw))
        idx = int(np.searchsorted(cdf, 1.0 - POISSON_TAIL))
        depth = max(depth, min(idx, cap))
    return depth


def _poisson_weight_rows(times: np.ndarray, depth: int) -> np.ndarray:
    """Row i holds Poisson(times[i]) pmf values for m = 0..depth."""
    m = np.arange(depth + 1)
    rows = np.empty((len(times), depth + 1))
    for i, t in enumerate(times):
        t = float(t)
        if t == 0.0:
            rows[i] = 0.0
            rows[i, 0] = 1.0
        else:
            rows[i] = np.exp(-t + m * math.log(t) - gammaln(m + 1))
    return rows


def survival_continuous(gk: GroundedKernel, start, t) -> float:
    """P_nu(tau(y) > t) for the rate-1 continuous-time chain.

    Uniformization: sum_m e^{-t} t^m / m! times the m-step grounded jump
    probabilities, truncated once the Poisson tail is below POISSON_TAIL.
    """
    if gk.variant != CONTINUOUS:
        raise AssumptionViolationError(
            "survival_continuous needs a continuous-time kernel"
        )
    t = _check_time_real(t)
    nu_hat = _start_weights(gk, start)
    return float(_uniformized_row_sums(gk.qhat, np.array([t]))[0] @ nu_hat)


def _uniformized_row_sums(qhat: np.ndarray, times: np.ndarray, depth: int | None = None):
    """For each time, the vector of per-start survival probabilities
    sum_xi exp(t (Qhat - I))(x, xi), via the Poisson-weighted power series."""
    if depth is None:
        depth = _poisson_depth(times)
    weights = _poisson_weight_rows(times, depth)
    dim = qhat.shape[0]
    g = np.ones(dim)
    acc = np.zeros((len(times), dim))
    acc += weights[:, 0:1] * g[None, :]
    for m in range(1, depth + 1):
        g = qhat @ g
        acc += weights[:, m : m + 1] * g[None, :]
    return acc


def _survival_vectors(kernel: TransitionKernel, y: int, times) -> dict:
    """Map each requested time to the full-length vector w with
    w[x] = P_x(tau(y) > t) and w[y] = 0."""
    if not (0 <= y < kernel.n):
        raise BadVertexError(f"target {y} out of range")
    n = kernel.n
    if kernel.variant == CONTINUOUS:
        ts = [(_check_time_real(t)) for t in times]
        uniq = sorted(set(ts))
        gk_rows = _ct_vectors(kernel, y, uniq)
        return {t: gk_rows[t] for t in ts}
    ts = [_check_time_discrete(t) for t in times]
    tmax = max(ts) if ts else 0
    if n <= _CACHE_MAX_N and tmax <= _CACHE_MAX_T:
        ws = _cache_for(kernel).setdefault(("w", y), [])
        if not ws:
            w0 = np.ones(n)
            w0[y] = 0.0
            ws.append(w0)
        while len(ws) <= tmax:
            w = kernel.P @ ws[-1]
            w[y] = 0.0
            ws.append(w)
        return {t: ws[t] for t in ts}
    # streaming fallback for large tables: keep only the requested times
    wanted = set(ts)
    out = {}
    w = np.ones(n)
    w[y] = 0.0
    if 0 in wanted:
        out[0] = w.copy()
    for t in range(1, tmax + 1):
        w = kernel.P @ w
        w[y] = 0.0
        if t in wanted:
            out[t] = w.copy()
    return {t: out[t] for t in ts}


def _ct_vectors(kernel: TransitionKernel, y: int, uniq_times: list) -> dict:
    n = kernel.n
    keep = np.array([x for x in range(n) if x != y], dtype=int)
    qhat = kernel.P[np.ix_(keep, keep)]
    times = np.asarray(uniq_times, dtype=float)
    rows = _uniformized_row_sums(qhat, times)
    out = {}
    for i, t in enumerate(uniq_times):
        full = np.zeros(n)
        full[keep] = rows[i]
        out[t] = full
    return out


def survival_probability(kernel: TransitionKernel, start, y: int, t) -> float:
    """P_nu(tau(y) > t) under the kernel's own time semantics."""
    gk = grounded(kernel, y)
    if kernel.variant == CONTINUOUS:
        return survival_continuous(gk, start, t)
    return survival_power(gk, start, t)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenstructure of the grounded kernel symmetrized by pi.

    ``lambdas`` are per-unit-time decay factors: eigenvalues of the grounded
    kernel for discrete variants, and exp(lambda - 1) for the continuous-time
    semigroup so that the same power formula applies at real times.  The
    weights satisfy sum_v alphas[v] = 1 - pi(y) and

        P_pi(tau(y) > t) = sum_v alphas[v] * lambdas[v]**t.
    """

    y: int
    lambdas: np.ndarray
    alphas: np.ndarray
    pi_y: float
    variant: str

    def stationary_survival(self, t) -> float:
        if self.variant == CONTINUOUS:
            t = _check_time_real(t)
        else:
            t = _check_time_discrete(t)
        if len(self.lambdas) == 0:
            return 0.0
        if t == 0:
            return float(self.alphas.sum())
        return float(self.alphas @ self.lambdas**t)

    def moment(self, t) -> float:
        """E[W^t] for the normalized weight law P(W = lambda_v) ~ alpha_v."""
        return self.stationary_survival(t) / (1.0 - self.pi_y)


def spectral(kernel: TransitionKernel, y: int) -> SpectralDecomposition:
    """Symmetric eigendecomposition of the grounded kernel at target y.

    The conjugated matrix A(x, xi) = pi(x)^{1/2} pi(xi)^{-1/2} Qhat(x, xi)
    is symmetric by reversibility; its eigenpairs (lambda_v, phi_v) give
    alpha_v = (sum_xi phi_v(xi) pi(xi)^{1/2})^2.
    """
    if not (0 <= y < kernel.n):
        raise BadVertexError(f"target {y} out of range")
    flux = kernel.pi[:, None] * kernel.P
    if np.max(np.abs(flux - flux.T)) > 1e-10:
        raise AssumptionViolationError("kernel is not reversible")
    keep = np.array([x for x in range(kernel.n) if x != y], dtype=int)
    qhat = kernel.P[np.ix_(keep, keep)]
    root = np.sqrt(kernel.pi[keep])
    A = root[:, None] * qhat / root[None, :]
    A = 0.5 * (A + A.T)
    try:
        lams, phis = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(str(exc)) from exc
    alphas = (root @ phis) ** 2
    clamped = np.clip(alphas, 0.0, None)
    if float(np.abs(alphas - clamped).sum()) > 1e-9:
        raise EigenFailureError("negative spectral weights beyond tolerance")
    if kernel.variant == CONTINUOUS:
        lams = np.exp(lams - 1.0)
    return SpectralDecomposition(
        y=y,
        lambdas=lams,
        alphas=clamped,
        pi_y=float(kernel.pi[y]),
        variant=kernel.variant,
    )


def moment_inequality_check(decomp: SpectralDecomposition, t, s) -> tuple[float, float]:
    """Evaluate (E[W^t] E[W^s], E[W^{t+s}]) for the normalized weight law.

    For lazy and continuous-time sources the weights are nonnegative and the
    product inequality lhs <= rhs is guaranteed; for plain discrete sources
    it is only guaranteed when t and s share parity, and mixed parity raises
    ParityViolationError (that regime is explored, never asserted).
    """
    if decomp.variant == PLAIN:
        t = _check_time_discrete(t)
        s = _check_time_discrete(s)
        if (t - s) % 2 != 0:
            raise ParityViolationError(
                f"plain-chain moments with mixed parity (t={t}, s={s}) are outside "
                "the proven cases"
            )
    lhs = decomp.moment(t) * decomp.moment(s)
    rhs = decomp.moment(t + s)
    return lhs, rhs


def _check_measure(kernel: TransitionKernel, nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (kernel.n,):
        raise AssumptionViolationError(
            f"measure has shape {nu.shape}, kernel has n={kernel.n}"
        )
    if np.any(nu < 0) or abs(float(nu.sum()) - 1.0) > 1e-12:
        raise AssumptionViolationError("start measure is not a probability vector")
    return nu


def expected_range_single(kernel: TransitionKernel, nu, t) -> float:
    """E|R(t)| = n - sum_y P_nu(tau(y) > t) for one walk started from nu."""
    nu = _check_measure(kernel, nu)
    total = 0.0
    for y in range(kernel.n):
        w = _survival_vectors(kernel, y, [t])[t]
        total += float(nu @ w)
    return kernel.n - total


def expected_union_product(kernel: TransitionKernel, nus, ts) -> float:
    """Expected union size for k independent walkers with independent starts.

    Independence factorizes each vacancy probability:
    E|union R_i| = n - sum_y prod_i P_{nu_i}(tau(y) > t_i).
    """
    nus = [_check_measure(kernel, nu) for nu in nus]
    ts = list(ts)
    if len(nus) != len(ts) or not nus:
        raise AssumptionViolationError("need one start measure per lifespan")
    total = 0.0
    for y in range(kernel.n):
        vecs = _survival_vectors(kernel, y, ts)
        prod = 1.0
        for nu, t in zip(nus, ts):
            prod *= float(nu @ vecs[t])
        total += prod
    return kernel.n - total


def expected_union_star(kernel: TransitionKernel, nu, ts) -> float:
    """Expected union size when all walkers share one start sampled from nu:
    E|union R_i| = n - sum_y sum_x nu(x) prod_i P_x(tau(y) > t_i)."""
    nu = _check_measure(kernel, nu)
    ts = list(ts)
    if not ts:
        raise AssumptionViolationError("need at least one lifespan")
    total = 0.0
    for y in range(kernel.n):
        vecs = _survival_vectors(kernel, y, ts)
        prod = np.ones(kernel.n)
        for t in ts:
            prod = prod * vecs[t]
        total += float(nu @ prod)
    return kernel.n - total


def expected_union_coupled(kernel: TransitionKernel, coupling, ts) -> float:
    """Expected union size under an explicit joint start law mu on V^k."""
    if isinstance(coupling, Coupling):
        table = coupling.table
    else:
        table = np.asarray(coupling, dtype=float)
        if table.size > 10**6:
            raise TableTooLargeError(f"coupling table has {table.size} entries")
    ts = list(ts)
    if table.ndim != len(ts):
        raise AssumptionViolationError("coupling order does not match lifespans")
    if table.shape != (kernel.n,) * table.ndim:
        raise AssumptionViolationError("coupling table shape does not match kernel")
    total = 0.0
    for y in range(kernel.n):
        vecs = _survival_vectors(kernel, y, ts)
        acc = table
        for t in ts:
            acc = np.tensordot(acc, vecs[t], axes=([0], [0]))
        total += float(acc)
    return kernel.n - total


def expected_union(kernel: TransitionKernel, scheme: StartScheme, ts) -> float:
    """Dispatch on the start scheme to the matching exact evaluator."""
    scheme.validate_for(kernel)
    ts = list(ts)
    if isinstance(scheme, IIDProduct):
        if len(scheme.nus) != len(ts):
            raise AssumptionViolationError("scheme walker count != lifespan count")
        return expected_union_product(kernel, scheme.nus, ts)
    if isinstance(scheme, SharedPoint):
        return expected_union_star(kernel, scheme.nu, ts)
    if isinstance(scheme, FixedPoints):
        if len(scheme.points) != len(ts):
            raise AssumptionViolationError("scheme walker count != lifespan count")
        nus = [point_mass(kernel.n, x) for x in scheme.points]
        return expected_union_product(kernel, nus, ts)
    if isinstance(scheme, Coupling):
        return expected_union_coupled(kernel, scheme, ts)
    raise AssumptionViolationError(f"unknown scheme {type(scheme).__name__}")


# ---------------------------------------------------------------------------
# brute-force trajectory oracle
# ---------------------------------------------------------------------------

_ORACLE_MAX_N = 6
_ORACLE_MAX_K = 3
_ORACLE_MAX_TOTAL = 10


def _popcounts(n: int) -> np.ndarray:
    return np.array([bin(m).count("1") for m in range(1 << n)])


def _range_distribution(kernel: TransitionKernel, x: int, t: int) -> np.ndarray:
    """Exact distribution of the visited set of a t-step walk from x, as a
    probability vector indexed by vertex bitmask.

    Sums over all trajectories, grouped by (current position, visited set);
    the grouping is lossless because the pair is a sufficient statistic.
    """
    store = _cache_for(kernel).setdefault(("dp", x), [])
    n = kernel.n
    size = 1 << n
    if not store:
        cur = np.zeros((n, size))
        cur[x, 1 << x] = 1.0
        store.append(cur)
    masks = np.arange(size)
    while len(store) <= t:
        cur = store[-1]
        new = np.zeros((n, size))
        for pos in range(n):
            row = kernel.P[pos]
            weights = cur[pos]
            if not weights.any():
                continue
            for pos2 in np.nonzero(row > 0)[0]:
                np.add.at(new[pos2], masks | (1 << int(pos2)), row[pos2] * weights)
        store.append(new)
    return store[t].sum(axis=0)


def _or_convolve(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    size = len(d1)
    out = np.zeros(size)
    m1 = np.arange(size)[:, None]
    m2 = np.arange(size)[None, :]
    np.add.at(out, m1 | m2, np.outer(d1, d2))
    return out


def _mask_distribution(kernel: TransitionKernel, scheme: StartScheme, ts) -> np.ndarray:
    n = kernel.n
    ts = [int(t) for t in ts]

    def per_walker_from(x, t):
        return _range_distribution(kernel, x, t)

    if isinstance(scheme, FixedPoints):
        dists = [per_walker_from(x, t) for x, t in zip(scheme.points, ts)]
        out = dists[0]
        for d in dists[1:]:
            out = _or_convolve(out, d)
        return out
    if isinstance(scheme, IIDProduct):
        out = None
        for nu, t in zip(scheme.nus, ts):
            d = np.zeros(1 << n)
            for x in range(n):
                if nu[x] > 0:
                    d += nu[x] * per_walker_from(x, t)
            out = d if out is None else _or_convolve(out, d)
        return out
    if isinstance(scheme, SharedPoint):
        out = np.zeros(1 << n)
        for x in range(n):
            if scheme.nu[x] <= 0:
                continue
            joint = per_walker_from(x, ts[0])
            for t in ts[1:]:
                joint = _or_convolve(joint, per_walker_from(x, t))
            out += scheme.nu[x] * joint
        return out
    if isinstance(scheme, Coupling):
        out = np.zeros(1 << n)
        it = np.ndindex(*scheme.table.shape)
        for idx in it:
            w = scheme.table[idx]
            if w <= 0:
                continue
            joint = per_walker_from(idx[0], ts[0])
            for x, t in zip(idx[1:], ts[1:]):
                joint = _or_convolve(joint, per_walker_from(x, t))
            out += w * joint
        return out
    raise AssumptionViolationError(f"unknown scheme {type(scheme).__name__}")


def _oracle_guard(kernel: TransitionKernel, scheme: StartScheme, ts):
    if kernel.variant == CONTINUOUS:
        raise TooLargeError("the trajectory oracle only enumerates discrete chains")
    ts = [_check_time_discrete(t) for t in ts]
    if kernel.n > _ORACLE_MAX_N:
        raise TooLargeError(f"oracle limited to n <= {_ORACLE_MAX_N}")
    if len(ts) > _ORACLE_MAX_K:
        raise TooLargeError(f"oracle limited to k <= {_ORACLE_MAX_K}")
    if sum(ts) > _ORACLE_MAX_TOTAL:
        raise TooLargeError(f"oracle limited to total lifespan <= {_ORACLE_MAX_TOTAL}")
    scheme.validate_for(kernel)
    return ts


def brute_force_oracle(kernel: TransitionKernel, scheme: StartScheme, ts) -> float:
    """Exact expected union size by exhaustive trajectory summation.

    Independent of the survival-probability engines: it tracks visited sets
    directly.  Admissible for n <= 6, k <= 3, total lifespan <= 10.
    """
    ts = _oracle_guard(kernel, scheme, ts)
    dist = _mask_distribution(kernel, scheme, ts)
    return float(dist @ _popcounts(kernel.n))


def brute_force_distribution(kernel: TransitionKernel, scheme: StartScheme, ts):
    """Exact distribution of the union size: (sizes, probabilities)."""
    ts = _oracle_guard(kernel, scheme, ts)
    dist = _mask_distribution(kernel, scheme, ts)
    pops = _popcounts(kernel.n)
    sizes = np.arange(kernel.n + 1)
    probs = np.zeros(kernel.n + 1)
    np.add.at(probs, pops, dist)
    keep = probs > 0
    return sizes[keep], probs[keep]

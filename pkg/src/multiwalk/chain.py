"""Reversible Markov kernels on networks and joint start-position schemes.

A kernel comes in one of three variants:

* ``plain``            -- discrete time, P(x, y) = c(x, y) / c(x);
* ``lazy``             -- discrete time, holds with probability 1/2;
* ``continuous-time``  -- rate-1 exponential clock; the stored matrix is the
  embedded jump kernel (identical to the plain one) and the variant tag
  switches every evaluator to continuous-time semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolationError, TableTooLargeError, WrongVariantError
from .network import Network

PLAIN = "plain"
LAZY = "lazy"
CONTINUOUS = "continuous-time"

VARIANTS = (PLAIN, LAZY, CONTINUOUS)

STOCHASTIC_TOL = 1e-12
BALANCE_TOL = 1e-12
COUPLING_MAX_ENTRIES = 10**6


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Row-stochastic kernel with its stationary distribution.

    ``P`` is dense n x n.  For the continuous-time variant ``P`` holds the
    embedded jump kernel.  ``pi`` satisfies detailed balance with ``P``.
    """

    n: int
    P: np.ndarray
    variant: str
    pi: np.ndarray
    network: Network | None = field(default=None, repr=False)

    @property
    def discrete(self) -> bool:
        return self.variant in (PLAIN, LAZY)

    def describe(self) -> str:
        name = self.network.name if self.network is not None else f"n={self.n}"
        return name


def _validate_kernel(P: np.ndarray, pi: np.ndarray) -> None:
    n = P.shape[0]
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > STOCHASTIC_TOL:
        raise AssumptionViolationError("rows of P do not sum to 1")
    if np.any(pi <= 0) or abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
        raise AssumptionViolationError("pi is not a positive probability vector")
    flux = pi[:, None] * P
    if np.max(np.abs(flux - flux.T)) > BALANCE_TOL:
        raise AssumptionViolationError("detailed balance fails")


def kernel_from_network(network: Network) -> TransitionKernel:
    """Plain kernel P(x, y) = c(x, y) / c(x) with pi(x) = c(x) / sum_y c(y).

    The single-vertex graph gets the absorbing kernel P = [[1]].
    """
    n = network.n
    if n == 1:
        return TransitionKernel(
            n=1, P=_frozen([[1.0]]), variant=PLAIN, pi=_frozen([1.0]), network=network
        )
    c = network.conductance_matrix()
    deg = c.sum(axis=1)
    P = c / deg[:, None]
    pi = deg / deg.sum()
    _validate_kernel(P, pi)
    return TransitionKernel(n=n, P=_frozen(P), variant=PLAIN, pi=_frozen(pi), network=network)


def make_lazy(kernel: TransitionKernel) -> TransitionKernel:
    """Half-lazy version (1/2) I + (1/2) P of a plain kernel; pi is unchanged."""
    if kernel.variant != PLAIN:
        raise WrongVariantError(f"make_lazy needs a plain kernel, got {kernel.variant}")
    P = 0.5 * np.eye(kernel.n) + 0.5 * kernel.P
    return TransitionKernel(
        n=kernel.n, P=_frozen(P), variant=LAZY, pi=kernel.pi, network=kernel.network
    )


def make_continuous(kernel: TransitionKernel) -> TransitionKernel:
    """Continuous-time version: same jump kernel and pi, exponential-clock semantics."""
    if kernel.variant != PLAIN:
        raise WrongVariantError(
            f"make_continuous needs a plain kernel, got {kernel.variant}"
        )
    return TransitionKernel(
        n=kernel.n, P=kernel.P, variant=CONTINUOUS, pi=kernel.pi, network=kernel.network
    )


def with_variant(kernel: TransitionKernel, variant: str) -> TransitionKernel:
    """Plain kernel re-tagged to the requested variant."""
    if variant == PLAIN:
        return kernel
    if variant == LAZY:
        return make_lazy(kernel)
    if variant == CONTINUOUS:
        return make_continuous(kernel)
    raise WrongVariantError(f"unknown variant {variant!r}")


def pi_star(kernel: TransitionKernel) -> float:
    """min_x pi(x) / (1 - pi(x)); equals 1/(n-1) exactly when pi is uniform."""
    if kernel.n == 1:
        return float("inf")
    pmin = float(kernel.pi.min())
    return pmin / (1.0 - pmin)


def _is_bipartite(P: np.ndarray) -> bool:
    n = P.shape[0]
    color = [-1] * n
    for s in range(n):
        if color[s] != -1:
            continue
        color[s] = 0
        stack = [s]
        while stack:
            x = stack.pop()
            for y in np.nonzero(P[x] > 0)[0]:
                y = int(y)
                if y == x:
                    return False  # self-loop
                if color[y] == -1:
                    color[y] = 1 - color[x]
                    stack.append(y)
                elif color[y] == color[x]:
                    return False
    return True


def check_aperiodic(kernel: TransitionKernel) -> bool:
    """Lazy and continuous-time chains are always aperiodic; a plain walk on a
    connected simple graph is aperiodic exactly when the graph is non-bipartite."""
    if kernel.variant in (LAZY, CONTINUOUS):
        return True
    if kernel.n == 1:
        return True
    return not _is_bipartite(kernel.P)


def _check_probability_vector(nu, n: int) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (n,):
        raise AssumptionViolationError(f"measure has shape {nu.shape}, expected ({n},)")
    if np.any(nu < 0) or abs(nu.sum() - 1.0) > STOCHASTIC_TOL:
        raise AssumptionViolationError("measure is not a probability vector")
    return _frozen(nu)


class StartScheme:
    """Joint law of the k walkers' starting positions."""

    k: int

    def validate_for(self, kernel: TransitionKernel) -> None:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class IIDProduct(StartScheme):
    """Independent starts, walker i drawn from its own measure nu_i."""

    nus: tuple[np.ndarray, ...]

    def __init__(self, *nus):
        vecs = tuple(np.asarray(v, dtype=float) for v in nus)
        n = vecs[0].shape[0]
        object.__setattr__(
            self, "nus", tuple(_check_probability_vector(v, n) for v in vecs)
        )

    @property
    def k(self) -> int:
        return len(self.nus)

    def validate_for(self, kernel: TransitionKernel) -> None:
        for nu in self.nus:
            if nu.shape != (kernel.n,):
                raise AssumptionViolationError("measure size does not match kernel")


@dataclass(frozen=True, eq=False)
class SharedPoint(StartScheme):
    """All walkers launched from one shared vertex sampled from nu."""

    nu: np.ndarray

    def __init__(self, nu):
        nu = np.asarray(nu, dtype=float)
        object.__setattr__(self, "nu", _check_probability_vector(nu, nu.shape[0]))

    def validate_for(self, kernel: TransitionKernel) -> None:
        if self.nu.shape != (kernel.n,):
            raise AssumptionViolationError("measure size does not match kernel")


@dataclass(frozen=True, eq=False)
class FixedPoints(StartScheme):
    """Deterministic starting vertices, one per walker."""

    points: tuple[int, ...]

    def __init__(self, *points):
        if len(points) == 1 and isinstance(points[0], (tuple, list)):
            points = tuple(points[0])
        object.__setattr__(self, "points", tuple(int(x) for x in points))

    @property
    def k(self) -> int:
        return len(self.points)

    def validate_for(self, kernel: TransitionKernel) -> None:
        for x in self.points:
            if not (0 <= x < kernel.n):
                raise AssumptionViolationError(f"start vertex {x} out of range")


@dataclass(frozen=True, eq=False)
class Coupling(StartScheme):
    """Explicit joint probability table mu over V^k with declared marginals.

    The table must have at most COUPLING_MAX_ENTRIES entries and its
    one-dimensional marginals must match the declared nu_i to 1e-12.
    """

    table: np.ndarray
    nus: tuple[np.ndarray, ...]

    def __init__(self, table, nus=None):
        table = np.asarray(table, dtype=float)
        if table.size > COUPLING_MAX_ENTRIES:
            raise TableTooLargeError(
                f"coupling table has {table.size} entries, cap is {COUPLING_MAX_ENTRIES}"
            )
        if np.any(table < 0) or abs(table.sum() - 1.0) > STOCHASTIC_TOL:
            raise AssumptionViolationError("coupling table is not a probability table")
        k = table.ndim
        margs = []
        for axis in range(k):
            other = tuple(a for a in range(k) if a != axis)
            margs.append(table.sum(axis=other))
        if nus is None:
            nus = margs
        else:
            nus = [np.asarray(v, dtype=float) for v in nus]
            for got, declared in zip(margs, nus):
                if np.max(np.abs(got - declared)) > STOCHASTIC_TOL:
                    raise AssumptionViolationError(
                        "coupling marginals do not match the declared measures"
                    )
        object.__setattr__(self, "table", _frozen(table))
        object.__setattr__(self, "nus", tuple(_frozen(v) for v in nus))

    @property
    def k(self) -> int:
        return self.table.ndim

    def validate_for(self, kernel: TransitionKernel) -> None:
        if self.table.shape != (kernel.n,) * self.table.ndim:
            raise AssumptionViolationError("coupling table shape does not match kernel")


def stationary(kernel: TransitionKernel) -> np.ndarray:
    """The kernel's stationary distribution (alias for ``kernel.pi``)."""
    return kernel.pi


def uniform_measure(n: int) -> np.ndarray:
    return _frozen(np.full(n, 1.0 / n))


def point_mass(n: int, x: int) -> np.ndarray:
    nu = np.zeros(n)
    nu[x] = 1.0
    return _frozen(nu)

"""Finite connected weighted graphs: construction, generators, and edge-list IO.

Vertices are dense integers 0..n-1.  Each undirected edge is stored once as
(u, v, c) with u < v and conductance c > 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DisconnectedError,
    InvalidEdgeError,
    InvalidSizeError,
    ParseError,
    RetriesExhaustedError,
)

GNP_RETRY_CAP = 1000


@dataclass(frozen=True)
class Network:
    """Connected undirected graph with positive edge conductances.

    Instances are immutable; construct them through :func:`build` or one of
    the generators so the invariants (connectivity, positive weights, no
    self-loops or duplicate pairs) are enforced.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    name: str = field(default="", compare=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def conductance_matrix(self) -> np.ndarray:
        """Dense symmetric matrix C with C[u, v] = c(u, v) and zero diagonal."""
        c = np.zeros((self.n, self.n))
        for u, v, w in self.edges:
            c[u, v] = w
            c[v, u] = w
        return c

    def degrees(self) -> np.ndarray:
        """Total conductance c(x) at each vertex."""
        return self.conductance_matrix().sum(axis=1)

    def neighbors(self, x: int) -> list[int]:
        out = []
        for u, v, _ in self.edges:
            if u == x:
                out.append(v)
            elif v == x:
                out.append(u)
        return sorted(out)


def _check_connected(n: int, pairs: list[tuple[int, int]]) -> bool:
    if n <= 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                count += 1
                stack.append(y)
    return count == n


def build(n: int, edges, name: str = "") -> Network:
    """Validate and construct a :class:`Network`.

    Raises InvalidEdgeError for self-loops, duplicate unordered pairs,
    nonpositive conductances, or out-of-range indices, and DisconnectedError
    if the edges do not connect all n vertices.
    """
    if n < 1:
        raise InvalidSizeError(f"need at least one vertex, got n={n}")
    canonical = []
    seen_pairs = set()
    for u, v, c in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidEdgeError(f"edge ({u},{v}) out of range for n={n}")
        if u == v:
            raise InvalidEdgeError(f"self-loop at vertex {u}")
        c = float(c)
        if not (c > 0) or not math.isfinite(c):
            raise InvalidEdgeError(f"edge ({u},{v}) has nonpositive weight {c}")
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            raise InvalidEdgeError(f"duplicate edge {pair}")
        seen_pairs.add(pair)
        canonical.append((pair[0], pair[1], c))
    canonical.sort()
    if not _check_connected(n, [(u, v) for u, v, _ in canonical]):
        raise DisconnectedError(f"graph on {n} vertices is not connected")
    if not name:
        name = f"graph(n={n},m={len(canonical)})"
    return Network(n=n, edges=tuple(canonical), name=name)


def generate_path(n: int) -> Network:
    """Path on n >= 2 vertices with unit conductances."""
    if n < 2:
        raise InvalidSizeError(f"path needs n >= 2, got {n}")
    return build(n, [(i, i + 1, 1.0) for i in range(n - 1)], name=f"path({n})")


def generate_cycle(n: int) -> Network:
    """Cycle on n >= 3 vertices with unit conductances."""
    if n < 3:
        raise InvalidSizeError(f"cycle needs n >= 3, got {n}")
    edges = [(i, (i + 1) % n, 1.0) for i in range(n)]
    return build(n, edges, name=f"cycle({n})")


def generate_complete(n: int) -> Network:
    """Complete graph on n >= 2 vertices with unit conductances."""
    if n < 2:
        raise InvalidSizeError(f"complete graph needs n >= 2, got {n}")
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)]
    return build(n, edges, name=f"complete({n})")


def generate_torus(d: int, n: int) -> Network:
    """d-dimensional discrete torus of side length n >= 3, unit conductances.

    Vertex index encodes coordinates in mixed radix, least significant first:
    index = sum_j x_j * n**j, so vertex 0 is the origin (0, ..., 0).
    Every vertex has degree 2d and there are exactly d * n**d edges.
    """
    if d < 1:
        raise InvalidSizeError(f"torus needs d >= 1, got {d}")
    if n < 3:
        raise InvalidSizeError(f"torus needs side length n >= 3, got {n}")
    size = n**d
    edges = []
    for idx in range(size):
        coords = []
        rem = idx
        for _ in range(d):
            coords.append(rem % n)
            rem //= n
        for j in range(d):
            stepped = list(coords)
            stepped[j] = (stepped[j] + 1) % n
            nbr = sum(x * n**k for k, x in enumerate(stepped))
            edges.append((idx, nbr, 1.0))
    return build(size, edges, name=f"torus({d},{n})")


def generate_gnp(n: int, p: float, seed: int) -> Network:
    """Connected Erdos-Renyi G(n, p) sample with unit conductances.

    Pure function of (n, p, seed).  Disconnected samples are discarded and
    resampled with the next derived seed; after GNP_RETRY_CAP failures a
    RetriesExhaustedError is raised.
    """
    if n < 1:
        raise InvalidSizeError(f"need n >= 1, got {n}")
    if not (0 < p <= 1):
        raise InvalidSizeError(f"need 0 < p <= 1, got p={p}")
    pairs = list(itertools.combinations(range(n), 2))
    for attempt in range(GNP_RETRY_CAP):
        rng = np.random.default_rng([seed, attempt])
        u = rng.random(len(pairs))
        chosen = [pairs[i] for i in np.nonzero(u < p)[0]]
        if _check_connected(n, chosen):
            return build(
                n,
                [(a, b, 1.0) for a, b in chosen],
                name=f"gnp({n},{p},seed={seed})",
            )
    raise RetriesExhaustedError(
        f"no connected G({n},{p}) sample in {GNP_RETRY_CAP} attempts"
    )


def write_edge_list(network: Network, path) -> None:
    """Write the text edge-list format: first line n, then one 'u v c' per edge.

    Conductances are written with full round-trip precision.
    """
    with open(path, "w") as fh:
        fh.write(f"{network.n}\n")
        for u, v, c in network.edges:
            fh.write(f"{u} {v} {c!r}\n")


def read_edge_list(path) -> Network:
    """Read the edge-list format written by :func:`write_edge_list`.

    Lines starting with '#' and blank lines are ignored.  Raises ParseError
    with the offending line number; structural problems (self-loops,
    duplicates, disconnection) surface as the corresponding build errors.
    """
    n = None
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if n is None:
                try:
                    n = int(line)
                except ValueError:
                    raise ParseError(f"expected vertex count, got {line!r}", lineno)
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'u v c', got {line!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
                c = float(parts[2])
            except ValueError:
                raise ParseError(f"malformed edge line {line!r}", lineno)
            edges.append((u, v, c))
    if n is None:
        raise ParseError("empty file", 1)
    import os

    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return build(n, edges, name=stem)


def _canonical_key(n: int, pair_set: frozenset) -> tuple:
    """Isomorphism-invariant key: lexicographically smallest relabeled edge set."""
    best = None
    for perm in itertools.permutations(range(n)):
        relabeled = tuple(
            sorted(
                (min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in pair_set
            )
        )
        if best is None or relabeled < best:
            best = relabeled
    return best


def enumerate_connected_graphs(max_n: int, min_n: int = 1) -> list[Network]:
    """All connected simple graphs with min_n <= n <= max_n, one per isomorphism
    class, with unit conductances.

    Intended for exhaustive small-graph scans; feasible for max_n <= 6.
    """
    if max_n > 7:
        raise InvalidSizeError("exhaustive enumeration supported up to n=7")
    out = []
    for n in range(min_n, max_n + 1):
        if n == 1:
            out.append(build(1, [], name="n1"))
            continue
        pairs = list(itertools.combinations(range(n), 2))
        seen_keys = set()
        for bits in range(1 << len(pairs)):
            chosen = [pairs[i] for i in range(len(pairs)) if bits >> i & 1]
            if len(chosen) < n - 1:
                continue
            if not _check_connected(n, chosen):
                continue
            key = _canonical_key(n, frozenset(chosen))
            if key in seen_keys:
                continue
            seen_keys.add(key)
            out.append(
                build(
                    n,
                    [(u, v, 1.0) for u, v in chosen],
                    name=f"g{n}-{len(seen_keys)}",
                )
            )
    return out

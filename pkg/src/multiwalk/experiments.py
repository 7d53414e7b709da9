"""Inequality verification and the batch experiments built on top of it.

Each verifier evaluates both sides of one collaboration inequality with the
exact engines and returns an InequalityReport carrying lhs, rhs, and their
gap.  The Monte Carlo experiments (gap decay on G(n, p), the torus
three-walker run, dominance CDFs) wrap the simulator with derived seeds so
every report is reproducible from a single seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import (
    CONTINUOUS,
    LAZY,
    PLAIN,
    Coupling,
    FixedPoints,
    IIDProduct,
    SharedPoint,
    TransitionKernel,
    check_aperiodic,
    kernel_from_network,
    pi_star,
    point_mass,
    uniform_measure,
    with_variant,
)
from .errors import (
    AssumptionViolationError,
    CaseViolationError,
    DegenerateFitError,
    InvalidDimensionError,
)
from .network import (
    Network,
    generate_complete,
    generate_cycle,
    generate_gnp,
    generate_path,
    generate_torus,
)
from .simulate import (
    EmpiricalCdf,
    WalkJob,
    derive_seed,
    empirical_cdf,
    estimate,
)
from .survival import (
    expected_range_single,
    expected_union_coupled,
    expected_union_product,
    expected_union_star,
)

GAP_TOLERANCE = -1e-9
_BOUND_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class InequalityReport:
    """Evaluated left/right sides of one inequality plus run metadata."""

    name: str
    graph: str
    variant: str
    k: int
    lifespans: tuple
    lhs: float
    rhs: float
    gap: float
    method: str
    seed: int | None = None
    lhs_se: float = 0.0
    rhs_se: float = 0.0
    gap_se: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.gap >= GAP_TOLERANCE


def _report(name, kernel, ts, lhs, rhs, method, seed=None, lhs_se=0.0, rhs_se=0.0, extra=None):
    return InequalityReport(
        name=name,
        graph=kernel.describe(),
        variant=kernel.variant,
        k=len(ts),
        lifespans=tuple(ts),
        lhs=lhs,
        rhs=rhs,
        gap=lhs - rhs,
        method=method,
        seed=seed,
        lhs_se=lhs_se,
        rhs_se=rhs_se,
        gap_se=math.hypot(lhs_se, rhs_se),
        extra=extra or {},
    )


def _require_case(kernel: TransitionKernel, ts) -> None:
    """Chain admissibility for the one-vs-many family: reversible (by
    construction), aperiodic, and even total lifespan for plain chains."""
    if kernel.variant == PLAIN:
        if not check_aperiodic(kernel):
            raise AssumptionViolationError(
                "plain walk on a bipartite graph is periodic; use lazy or "
                "continuous-time"
            )
        if int(sum(ts)) % 2 != 0:
            raise CaseViolationError(
                f"plain chains need an even total lifespan, got {tuple(ts)}; "
                "odd totals are explored by odd_case_scan"
            )


def verify_one_vs_many(kernel: TransitionKernel, k: int, ts) -> InequalityReport:
    """k stationary independent walkers vs one walker with the summed lifespan."""
    ts = tuple(ts)
    if len(ts) != k:
        raise AssumptionViolationError(f"expected {k} lifespans, got {len(ts)}")
    _require_case(kernel, ts)
    pi = kernel.pi
    lhs = expected_union_product(kernel, [pi] * k, ts)
    rhs = expected_range_single(kernel, pi, sum(ts))
    return _report("OneVsMany", kernel, ts, lhs, rhs, "exact")


def admissible_ratio_bound(kernel: TransitionKernel, k: int, epsilon: float = 1.0) -> float:
    """Largest allowed relative deviation from pi per walker:
    (1 + epsilon * pi_star)^(1/k) - 1."""
    return (1.0 + epsilon * pi_star(kernel)) ** (1.0 / k) - 1.0


def _check_ratio(kernel: TransitionKernel, nu: np.ndarray, bound: float, label: str):
    ratios = np.abs(nu - kernel.pi) / kernel.pi
    worst = int(np.argmax(ratios))
    if ratios[worst] > bound * (1.0 + 1e-9) + _BOUND_SLACK:
        raise AssumptionViolationError(
            f"{label}: deviation ratio {ratios[worst]:.6g} at vertex {worst} "
            f"exceeds the admissible bound {bound:.6g}"
        )


def verify_near_uniform_independent(
    kernel: TransitionKernel, k: int, ts, nus
) -> InequalityReport:
    """Independent walkers whose start measures deviate from pi by at most
    (1 + pi_star)^(1/k) - 1 in relative terms, vs one stationary walker."""
    ts = tuple(ts)
    nus = [np.asarray(nu, dtype=float) for nu in nus]
    if len(ts) != k or len(nus) != k:
        raise AssumptionViolationError(f"expected {k} lifespans and {k} measures")
    _require_case(kernel, ts)
    bound = admissible_ratio_bound(kernel, k)
    for i, nu in enumerate(nus):
        _check_ratio(kernel, nu, bound, f"walker {i}")
    lhs = expected_union_product(kernel, nus, ts)
    rhs = expected_range_single(kernel, kernel.pi, sum(ts))
    return _report("NearUniformIndependent", kernel, ts, lhs, rhs, "exact")


def verify_near_uniform_dependent(
    kernel: TransitionKernel, k: int, ts, coupling: Coupling, epsilon: float
) -> InequalityReport:
    """Dependent walkers coupled by an explicit table mu that is close to the
    product of near-stationary marginals, vs one stationary walker.

    Marginal condition: relative deviation at most (1 + eps*pi_star)^(1/k)-1.
    Coupling condition: |mu - prod nu_i| <= (1-eps)*pi_star*prod pi pointwise.
    """
    ts = tuple(ts)
    if not (0.0 < epsilon < 1.0):
        raise AssumptionViolationError(f"epsilon must be in (0,1), got {epsilon}")
    if coupling.k != k or len(ts) != k:
        raise AssumptionViolationError("coupling order, k, and lifespans disagree")
    coupling.validate_for(kernel)
    _require_case(kernel, ts)
    bound = admissible_ratio_bound(kernel, k, epsilon)
    for i, nu in enumerate(coupling.nus):
        _check_ratio(kernel, nu, bound, f"marginal {i}")
    product = coupling.nus[0]
    for nu in coupling.nus[1:]:
        product = np.multiply.outer(product, nu)
    pi_prod = kernel.pi
    for _ in range(k - 1):
        pi_prod = np.multiply.outer(pi_prod, kernel.pi)
    dev = np.abs(coupling.table - product) / pi_prod
    cap = (1.0 - epsilon) * pi_star(kernel)
    worst = np.unravel_index(int(np.argmax(dev)), dev.shape)
    if dev[worst] > cap * (1.0 + 1e-9) + _BOUND_SLACK:
        raise AssumptionViolationError(
            f"coupling deviation {dev[worst]:.6g} at {tuple(int(i) for i in worst)} "
            f"exceeds (1-eps)*pi_star = {cap:.6g}"
        )
    lhs = expected_union_coupled(kernel, coupling, ts)
    rhs = expected_range_single(kernel, kernel.pi, sum(ts))
    return _report(
        "NearUniformDependent", kernel, ts, lhs, rhs, "exact", extra={"epsilon": epsilon}
    )


def verify_star_vs_iid(kernel: TransitionKernel, k: int, t, nu) -> InequalityReport:
    """k independent starts from nu vs k walkers sharing one nu-sampled start,
    equal lifespans.  Holds for any measure and any connected graph."""
    nu = np.asarray(nu, dtype=float)
    ts = (t,) * k
    lhs = expected_union_product(kernel, [nu] * k, ts)
    rhs = expected_union_star(kernel, nu, ts)
    return _report("StarVsIID", kernel, ts, lhs, rhs, "exact")


def perturbed_measure(
    kernel: TransitionKernel,
    k: int,
    epsilon: float = 1.0,
    direction: int = +1,
    vertex: int | None = None,
    scale: float = 1.0,
) -> np.ndarray:
    """pi perturbed at one vertex by ``scale`` times the maximal admissible
    relative deviation, mass-balanced on the remaining vertices.

    With scale=1.0 the result sits exactly at the admissibility boundary;
    scale > 1 produces a deliberately inadmissible measure.
    """
    pi = kernel.pi
    r = scale * admissible_ratio_bound(kernel, k, epsilon)
    v = int(np.argmin(pi)) if vertex is None else int(vertex)
    sgn = 1.0 if direction >= 0 else -1.0
    nu = pi * (1.0 - sgn * r * pi[v] / (1.0 - pi[v]))
    nu[v] = pi[v] * (1.0 + sgn * r)
    return nu


def near_uniform_coupling(
    kernel: TransitionKernel, k: int, epsilon: float, scale: float = 1.0
) -> Coupling:
    """Explicit coupling at the boundary of the dependence condition.

    Marginals are maximal admissible perturbations of pi (alternating
    directions); the joint table is their product plus a zero-marginal sign
    pattern on the two highest-pi vertices, scaled so the pointwise relative
    deviation equals ``scale`` times (1-eps)*pi_star.
    """
    n = kernel.n
    nus = [
        perturbed_measure(kernel, k, epsilon, direction=+1 if i % 2 == 0 else -1)
        for i in range(k)
    ]
    table = nus[0]
    for nu in nus[1:]:
        table = np.multiply.outer(table, nu)
    order = np.argsort(kernel.pi)
    a, b = int(order[-1]), int(order[-2])
    w = scale * (1.0 - epsilon) * pi_star(kernel) * min(kernel.pi[a], kernel.pi[b]) ** k
    table = table.copy()
    for cell in np.ndindex(*(2,) * k):
        idx = tuple(a if c == 0 else b for c in cell)
        sign = (-1.0) ** sum(cell)
        table[idx] += sign * w
    if np.any(table < 0):
        raise AssumptionViolationError("constructed coupling went negative")
    return Coupling(table, nus=nus)


# ---------------------------------------------------------------------------
# small-graph suite
# ---------------------------------------------------------------------------


def suite_networks() -> list[Network]:
    """The pinned small-graph suite: complete graphs, cycles, paths, two small
    tori, and five fixed connected G(n, p) samples."""
    nets = [generate_complete(n) for n in range(2, 6)]
    nets += [generate_cycle(n) for n in range(3, 7)]
    nets += [generate_path(n) for n in range(2, 7)]
    nets += [generate_torus(1, 4), generate_torus(2, 3)]
    nets += [
        generate_gnp(6, 0.4, 101),
        generate_gnp(7, 0.35, 102),
        generate_gnp(8, 0.3, 103),
        generate_gnp(8, 0.5, 104),
        generate_gnp(5, 0.6, 105),
    ]
    return nets


def suite_cases(variants=(LAZY, CONTINUOUS, PLAIN)) -> list[TransitionKernel]:
    """Kernel for each (suite network, variant) pair, skipping plain kernels
    on bipartite graphs (they are periodic)."""
    out = []
    for net in suite_networks():
        plain = kernel_from_network(net)
        for variant in variants:
            if variant == PLAIN and not check_aperiodic(plain):
                continue
            out.append(with_variant(plain, variant))
    return out


def lifespan_grid(k: int, max_total: int, even_total: bool = False) -> list[tuple]:
    """Nondecreasing k-tuples of lifespans with the given total cap."""

    def rec(prefix, remaining, minimum):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        slots = k - len(prefix)
        for t in range(minimum, remaining // slots + 1):
            yield from rec(prefix + [t], remaining - t, t)

    grid = []
    for ts in rec([], max_total, 0):
        if even_total and sum(ts) % 2 != 0:
            continue
        grid.append(ts)
    return grid


def run_suite(
    names=("OneVsMany", "NearUniformIndependent", "NearUniformDependent", "StarVsIID"),
    ks=(2, 3),
    max_total: int = 12,
    cases: list[TransitionKernel] | None = None,
    epsilon: float = 0.5,
) -> list[InequalityReport]:
    """Evaluate the selected inequalities over the whole small-graph suite."""
    if cases is None:
        cases = suite_cases()
    reports = []
    for kernel in cases:
        star_measures = _star_measures(kernel)
        for k in ks:
            even = kernel.variant == PLAIN
            grid = lifespan_grid(k, max_total, even_total=even)
            if "NearUniformIndependent" in names:
                nus = [
                    perturbed_measure(kernel, k, direction=+1 if i % 2 == 0 else -1)
                    for i in range(k)
                ]
            if "NearUniformDependent" in names:
                coupling = near_uniform_coupling(kernel, k, epsilon)
            for ts in grid:
                if "OneVsMany" in names:
                    reports.append(verify_one_vs_many(kernel, k, ts))
                if "NearUniformIndependent" in names:
                    reports.append(verify_near_uniform_independent(kernel, k, ts, nus))
                if "NearUniformDependent" in names:
                    reports.append(
                        verify_near_uniform_dependent(kernel, k, ts, coupling, epsilon)
                    )
            if "StarVsIID" in names:
                for t in range(0, max_total // k + 1):
                    for nu in star_measures:
                        reports.append(verify_star_vs_iid(kernel, k, t, nu))
    return reports


def _star_measures(kernel: TransitionKernel) -> list[np.ndarray]:
    skew = kernel.pi**2
    skew = skew / skew.sum()
    return [
        kernel.pi,
        uniform_measure(kernel.n),
        point_mass(kernel.n, 0),
        skew,
    ]


def odd_case_scan(networks, ks, max_total: int) -> list[InequalityReport]:
    """Exact one-vs-many gaps for plain chains with odd total lifespans.

    This is the regime the proved cases exclude; gaps are reported, never
    asserted.  Bipartite graphs are included and flagged as periodic.
    """
    reports = []
    for net in networks:
        kernel = kernel_from_network(net)
        aperiodic = check_aperiodic(kernel)
        for k in ks:
            for ts in lifespan_grid(k, max_total):
                if sum(ts) % 2 == 0:
                    continue
                lhs = expected_union_product(kernel, [kernel.pi] * k, ts)
                rhs = expected_range_single(kernel, kernel.pi, sum(ts))
                reports.append(
                    _report(
                        "OddCaseScan",
                        kernel,
                        ts,
                        lhs,
                        rhs,
                        "exact",
                        extra={"aperiodic": aperiodic},
                    )
                )
    return reports


def min_gap(reports) -> float:
    return min(r.gap for r in reports) if reports else float("nan")


# ---------------------------------------------------------------------------
# Monte Carlo experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GapDecayPoint:
    c: float
    T: int
    multi_mean: float
    multi_se: float
    single_mean: float
    single_se: float
    gap: float
    gap_se: float


@dataclass(frozen=True, eq=False)
class GapDecayCurve:
    """Gap between k-walker and single-walker coverage across lifespan scales,
    with a least-squares exponential fit gap ~ a * exp(-b * c)."""

    points: list[GapDecayPoint]
    fit_a: float
    fit_b: float
    fit_residual: float
    graph: str
    variant: str
    k: int
    replicas: int
    seed: int


def _fit_exponential(points: list[GapDecayPoint]) -> tuple[float, float, float]:
    usable = [p for p in points if p.gap > 2.0 * p.gap_se and p.gap > 0]
    if len(usable) < 3:
        raise DegenerateFitError(
            f"only {len(usable)} points with gap above noise; need >= 3"
        )
    cs = np.array([p.c for p in usable])
    logs = np.log(np.array([p.gap for p in usable]))
    slope, intercept = np.polyfit(cs, logs, 1)
    resid = logs - (slope * cs + intercept)
    return math.exp(intercept), -slope, float(np.sqrt(np.mean(resid**2)))


def gap_decay_experiment(
    n: int,
    p: float,
    k: int,
    c_grid,
    replicas: int,
    seed: int,
    variant: str = PLAIN,
    workers: int = 1,
) -> GapDecayCurve:
    """Coverage gap on a connected G(n, p) sample versus the lifespan scale c.

    For each c the k walkers get equal lifespans ceil(c * n^2) and the single
    walker gets their total T; all starts are uniform over vertices.  Both
    sides are estimated from independent derived seeds.
    """
    net = generate_gnp(n, p, derive_seed(seed, 0))
    kernel = with_variant(kernel_from_network(net), variant)
    uni = uniform_measure(n)
    points = []
    for j, c in enumerate(sorted(c_grid)):
        t_each = math.ceil(c * n * n)
        T = k * t_each
        multi = estimate(
            WalkJob(
                kernel=kernel,
                scheme=IIDProduct(*([uni] * k)),
                lifespans=(t_each,) * k,
                replicas=replicas,
                seed=derive_seed(seed, j + 1, 1),
            ),
            workers=workers,
        )
        single = estimate(
            WalkJob(
                kernel=kernel,
                scheme=IIDProduct(uni),
                lifespans=(T,),
                replicas=replicas,
                seed=derive_seed(seed, j + 1, 2),
            ),
            workers=workers,
        )
        points.append(
            GapDecayPoint(
                c=float(c),
                T=T,
                multi_mean=multi.mean,
                multi_se=multi.std_error,
                single_mean=single.mean,
                single_se=single.std_error,
                gap=multi.mean - single.mean,
                gap_se=math.hypot(multi.std_error, single.std_error),
            )
        )
    fit_a, fit_b, resid = _fit_exponential(points)
    return GapDecayCurve(
        points=points,
        fit_a=fit_a,
        fit_b=fit_b,
        fit_residual=resid,
        graph=net.name,
        variant=variant,
        k=k,
        replicas=replicas,
        seed=seed,
    )


def torus_star_vs_single(
    d: int,
    n: int,
    t1: int,
    t2: int,
    t3: int,
    replicas: int,
    seed: int,
    variant: str = LAZY,
    c0: float = 10.0,
    workers: int = 1,
) -> InequalityReport:
    """Three walkers from vertex 0 on the d-dimensional torus (d >= 3) vs one
    walker with the summed lifespan, by Monte Carlo.

    Requires t1 >= c0 * n^2 * log n: the first walker must have time to mix.
    The report records t1 / (n^2 log n) and whether gap + 4*SE >= 0.
    """
    if d < 3:
        raise InvalidDimensionError(f"need dimension d >= 3, got {d}")
    threshold = c0 * n * n * math.log(n)
    if t1 < threshold:
        raise AssumptionViolationError(
            f"t1={t1} is below c0*n^2*log(n) = {threshold:.1f}"
        )
    net = generate_torus(d, n)
    kernel = with_variant(kernel_from_network(net), variant)
    multi = estimate(
        WalkJob(
            kernel=kernel,
            scheme=FixedPoints(0, 0, 0),
            lifespans=(t1, t2, t3),
            replicas=replicas,
            seed=derive_seed(seed, 1),
        ),
        workers=workers,
    )
    single = estimate(
        WalkJob(
            kernel=kernel,
            scheme=FixedPoints(0),
            lifespans=(t1 + t2 + t3,),
            replicas=replicas,
            seed=derive_seed(seed, 2),
        ),
        workers=workers,
    )
    gap_se = math.hypot(multi.std_error, single.std_error)
    return _report(
        "TorusStarVsSingle",
        kernel,
        (t1, t2, t3),
        multi.mean,
        single.mean,
        "monte-carlo",
        seed=seed,
        lhs_se=multi.std_error,
        rhs_se=single.std_error,
        extra={
            "t1_ratio": t1 / (n * n * math.log(n)),
            "within_4se": multi.mean - single.mean >= -4.0 * gap_se,
        },
    )


@dataclass(frozen=True, eq=False)
class DominanceReport:
    """Paired empirical CDFs of the union size under the k-walker and the
    single-walker schemes; max_crossing = sup_y (F_multi - F_single).

    Stochastic dominance of the k-walker union corresponds to F_multi <=
    F_single everywhere, i.e. max_crossing <= 0.  Exploratory only.
    """

    multi: EmpiricalCdf
    single: EmpiricalCdf
    max_crossing: float
    graph: str
    variant: str
    k: int
    lifespans: tuple
    replicas: int
    seed: int


def dominance_scan(
    kernel: TransitionKernel, k: int, ts, replicas: int, seed: int, workers: int = 1
) -> DominanceReport:
    """Compare the full distributions (not just means) of the two schemes.

    Both jobs run from the same seed, so with k=1 the two sides are the very
    same job and the crossing statistic is exactly 0.
    """
    ts = tuple(ts)
    multi_job = WalkJob(
        kernel=kernel,
        scheme=IIDProduct(*([kernel.pi] * k)),
        lifespans=ts,
        replicas=replicas,
        seed=seed,
        retain_samples=True,
    )
    single_job = WalkJob(
        kernel=kernel,
        scheme=IIDProduct(kernel.pi),
        lifespans=(sum(ts),),
        replicas=replicas,
        seed=seed,
        retain_samples=True,
    )
    f_multi = empirical_cdf(estimate(multi_job, workers=workers))
    f_single = empirical_cdf(estimate(single_job, workers=workers))
    grid = np.union1d(f_multi.values, f_single.values)
    crossing = max(f_multi.evaluate(y) - f_single.evaluate(y) for y in grid)
    return DominanceReport(
        multi=f_multi,
        single=f_single,
        max_crossing=float(crossing),
        graph=kernel.describe(),
        variant=kernel.variant,
        k=k,
        lifespans=ts,
        replicas=replicas,
        seed=seed,
    )


def survival_by_distance(kernel: TransitionKernel, y: int, t) -> dict[int, list[float]]:
    """Tabulate P_x(tau(y) > t) grouped by graph distance from y.

    Exploration aid for the question of whether survival is monotone in
    distance; nothing anywhere asserts it.
    """
    from .survival import _survival_vectors

    n = kernel.n
    dist = np.full(n, -1)
    dist[y] = 0
    frontier = [y]
    while frontier:
        nxt = []
        for x in frontier:
            for z in np.nonzero(kernel.P[x] > 0)[0]:
                z = int(z)
                if dist[z] < 0:
                    dist[z] = dist[x] + 1
                    nxt.append(z)
        frontier = nxt
    w = _survival_vectors(kernel, y, [t])[t]
    out: dict[int, list[float]] = {}
    for x in range(n):
        if x == y:
            continue
        out.setdefault(int(dist[x]), []).append(float(w[x]))
    return {d: sorted(v) for d, v in sorted(out.items())}

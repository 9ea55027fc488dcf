"""Averaging operators for group orbits on the torus.

Spherical averages push a basepoint around by the inverses of all group
elements of one length (enumerated as combing paths) and average a test
function; Cesaro, counting-weighted and Markov-weighted variants follow.
All exact-mode enumeration shares one depth-first engine that records the
orbit coordinates per path length as unsigned 64-bit arrays, so a whole
family of characters can be averaged from a single pass.  Sums are taken in
DFS order, block-wise, with compensated accumulation across blocks.

Monte Carlo counterparts draw paths from the prefix-then-uniform measure or
follow a single Markov ray; both are deterministic given a seed.
"""

from __future__ import annotations

import cmath
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import markov as markov_mod
from . import spectral
from .algebra import MASK, SCALE, GroupMatrix, TorusPoint, phase64, word_act
from .combing import GraphStructure, _backward_counts
from .errors import BudgetExceededError, DimensionMismatchError, SpherecombError

DEFAULT_BUDGET = 10**7

_TWO_PI_OVER_SCALE = 2.0 * np.pi / SCALE
_BLOCK = 4096


@dataclass(frozen=True)
class TestFunction:
    """Trigonometric polynomial on the torus: sum of coeff * chi_k.

    chi_k(x) = exp(2 pi i <k, x>); the pairing <k, x> is computed exactly
    mod 1 in 64-bit fixed point before any float enters.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    terms: tuple[tuple[tuple[int, ...], complex], ...]

    def __post_init__(self):
        terms = tuple((tuple(int(v) for v in k), complex(c)) for k, c in self.terms)
        if terms:
            d = len(terms[0][0])
            for k, _ in terms:
                if len(k) != d:
                    raise DimensionMismatchError(f"mixed frequency dimensions in {terms!r}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def character(cls, k: Sequence[int]) -> "TestFunction":
        return cls(((tuple(k), 1.0 + 0.0j),))

    @property
    def dim(self) -> int | None:
        return len(self.terms[0][0]) if self.terms else None

    @property
    def haar(self) -> complex:
        """Integral against Haar measure: the coefficient of the trivial character."""
        return sum((c for k, c in self.terms if not any(k)), 0.0 + 0.0j)

    def evaluate(self, x: TorusPoint) -> complex:
        out = 0.0 + 0.0j
        for k, c in self.terms:
            t = phase64(k, x)
            out += c * cmath.exp(2j * cmath.pi * (t / SCALE))
        return out


def haar_integral(f: TestFunction) -> complex:
    """Integral of f over the torus (the trivial-character coefficient)."""
    return f.haar


# ---------------------------------------------------------------------------
# exact enumeration engine


def _neumaier(values) -> float:
    s = 0.0
    comp = 0.0
    for x in values:
        t = s + x
        if abs(s) >= abs(x):
            comp += (s - t) + x
        else:
            comp += (x - t) + s
        s = t
    return s + comp


def _block_sum(vals: np.ndarray) -> complex:
    """Deterministic sum: pairwise inside blocks, compensated across blocks."""
    n = len(vals)
    if n == 0:
        return 0.0 + 0.0j
    res = [complex(vals[i : i + _BLOCK].sum()) for i in range(0, n, _BLOCK)]
    return complex(_neumaier(z.real for z in res), _neumaier(z.imag for z in res))


def _edge_actions(graph: GraphStructure, inverse: bool) -> list[tuple[tuple[int, ...], ...]]:
    """Per edge, the matrix applied to the running state, entries reduced mod 2**64."""
    system = graph.system
    acts = []
    for e in graph.edges:
        if inverse:
            m = system.word_matrix(e.word).inverse()
        else:
            m = system.word_matrix(e.word)
        acts.append(tuple(tuple(v & MASK for v in row) for row in m.rows))
    return acts


def _apply_point(rows, pt):
    return tuple(sum(a * b for a, b in zip(row, pt)) & MASK for row in rows)


def _matmul_mod(left, right):
    cols = tuple(zip(*right))
    return tuple(
        tuple(sum(a * b for a, b in zip(row, col)) & MASK for col in cols) for row in left
    )


def _dfs_tables(
    graph: GraphStructure,
    n_max: int,
    start: int,
    states,  # initial state: coords tuple (inverse mode) or matrix rows (forward mode)
    x_coords,  # None in inverse mode; basepoint coords in forward mode
    end: int | None,
    acts,
    arrays: list[np.ndarray],
    idx: list[int],
    depth_offset: int = 0,
) -> None:
    """Iterative DFS recording orbit coordinates per depth, in edge order."""
    d = graph.system.dim
    edges = graph.edges
    out = graph.out_edges
    forward = x_coords is not None

    def record(depth: int, state) -> None:
        coords = _apply_point(state, x_coords) if forward else state
        a = arrays[depth]
        i = idx[depth]
        for c in range(d):
            a[i, c] = coords[c]
        idx[depth] += 1

    if end is None or start == end:
        record(depth_offset, states)
    if n_max == 0:
        return
    state_stack = [states]
    iters = [iter(out[start])]
    while iters:
        it = iters[-1]
        advanced = False
        for ei in it:
            e = edges[ei]
            rows = acts[ei]
            st = (
                _apply_point(rows, state_stack[-1])
                if not forward
                else _matmul_mod(state_stack[-1], rows)
            )
            depth = len(iters)
            if end is None or e.dst == end:
                record(depth + depth_offset, st)
            if depth < n_max:
                state_stack.append(st)
                iters.append(iter(out[e.dst]))
                advanced = True
                break
        if not advanced:
            iters.pop()
            if state_stack and len(state_stack) > len(iters):
                state_stack.pop()


def _table_worker(payload):
    (graph, n_rel, entries, x_coords, end, inverse) = payload
    acts = _edge_actions(graph, inverse)
    d = graph.system.dim
    counts = _backward_counts(graph, n_rel, target=end)
    sizes = [0] * (n_rel + 1)
    for v, _ in entries:
        for m in range(n_rel + 1):
            sizes[m] += counts[m][v]
    arrays = [np.empty((sizes[m], d), dtype=np.uint64) for m in range(n_rel + 1)]
    idx = [0] * (n_rel + 1)
    for v, st in entries:
        _dfs_tables(graph, n_rel, v, st, x_coords, end, acts, arrays, idx)
    return arrays


def orbit_tables(
    graph: GraphStructure,
    x: TorusPoint,
    n_max: int,
    *,
    start: int | None = None,
    end: int | None = None,
    inverse: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> list[np.ndarray]:
    """Orbit coordinates w^-1.x (or w.x) for every path w from start, by length.

    Returns one (count_n, d) uint64 array per length n = 0..n_max, rows in DFS
    edge order.  The enumeration tree is walked once; with ``workers > 1`` it
    is partitioned by first edge, which leaves the row order unchanged.
    """
    if x.dim != graph.system.dim:
        raise DimensionMismatchError(f"basepoint dim {x.dim} vs system dim {graph.system.dim}")
    if start is None:
        start = graph.initial
    counts_any = _backward_counts(graph, n_max)
    total_nodes = sum(counts_any[m][start] for m in range(n_max + 1))
    if total_nodes > budget:
        raise BudgetExceededError(total_nodes, budget)
    counts = (
        counts_any if end is None else _backward_counts(graph, n_max, target=end)
    )
    d = graph.system.dim
    arrays = [
        np.empty((counts[m][start], d), dtype=np.uint64) for m in range(n_max + 1)
    ]
    if inverse:
        root_state = x.coords
        x_coords = None
    else:
        root_state = tuple(tuple(r) for r in GroupMatrix.identity(d).rows)
        x_coords = x.coords

    acts = _edge_actions(graph, inverse)
    if workers <= 1 or n_max < 2 or total_nodes < 50_000:
        idx = [0] * (n_max + 1)
        _dfs_tables(graph, n_max, start, root_state, x_coords, end, acts, arrays, idx)
        return arrays

    # parallel: the root is handled here, each first edge spawns a subtree task
    idx = [0] * (n_max + 1)
    if end is None or start == end:
        root_arr = np.empty((1, d), dtype=np.uint64)
        coords = _apply_point(root_state, x_coords) if x_coords is not None else root_state
        root_arr[0] = coords
    else:
        root_arr = np.empty((0, d), dtype=np.uint64)
    prefix_entries = []
    for ei in graph.out_edges[start]:
        e = graph.edges[ei]
        st = (
            _apply_point(acts[ei], root_state)
            if x_coords is None
            else _matmul_mod(root_state, acts[ei])
        )
        prefix_entries.append((e.dst, st))
    n_tasks = max(1, min(len(prefix_entries), workers * 3))
    chunks: list[list] = [[] for _ in range(n_tasks)]
    for i, entry in enumerate(prefix_entries):
        chunks[i * n_tasks // len(prefix_entries)].append(entry)
    payloads = [
        (graph, n_max - 1, chunk, x_coords, end, inverse) for chunk in chunks if chunk
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_table_worker, payloads))
    merged = [root_arr]
    for m in range(1, n_max + 1):
        parts = [res[m - 1] for res in results]
        merged.append(np.concatenate(parts) if parts else arrays[m])
    return merged


def character_sums(tables: list[np.ndarray], k: Sequence[int]) -> list[complex]:
    """Sum of chi_k over each table, phases computed exactly mod 2**64."""
    out = []
    for arr in tables:
        if arr.shape[0] == 0:
            out.append(0.0 + 0.0j)
            continue
        if len(k) != arr.shape[1]:
            raise DimensionMismatchError(
                f"frequency has {len(k)} entries, torus has dimension {arr.shape[1]}"
            )
        phases = np.zeros(arr.shape[0], dtype=np.uint64)
        for i, ki in enumerate(k):
            phases += arr[:, i] * np.uint64(int(ki) & MASK)
        values = np.exp(1j * (phases.astype(np.float64) * _TWO_PI_OVER_SCALE))
        out.append(_block_sum(values))
    return out


def _function_sums(tables: list[np.ndarray], f: TestFunction) -> list[complex]:
    """Sum of f over each table: per-character sums combined by coefficients."""
    totals = [0.0 + 0.0j] * len(tables)
    for k, coeff in f.terms:
        sums = character_sums(tables, k)
        totals = [t + coeff * s for t, s in zip(totals, sums)]
    return totals


# ---------------------------------------------------------------------------
# averaging operators, exact mode


@dataclass(frozen=True)
class AveragingReport:
    """Spherical and Cesaro averages for n = 1..N, with their path counts."""

    mode: str
    inverse: bool
    basepoint: TorusPoint
    function: TestFunction
    ns: tuple[int, ...]
    path_counts: tuple[int, ...]
    spherical: tuple[complex, ...]
    cesaro: tuple[complex, ...]
    stderr: tuple[float, ...] | None = None
    samples: int | None = None
    seed: int | None = None

    def spherical_at(self, n: int) -> complex:
        return self.spherical[self.ns.index(n)]

    def cesaro_at(self, n: int) -> complex:
        return self.cesaro[self.ns.index(n)]


def sphere_series(
    graph: GraphStructure,
    x: TorusPoint,
    f: TestFunction,
    n_max: int,
    *,
    inverse: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> AveragingReport:
    """Exact spherical averages for every n = 1..n_max plus running Cesaro means.

    One DFS pass serves all lengths: the average over paths of length n uses
    the depth-n slice of the enumeration tree.
    """
    tables = orbit_tables(
        graph, x, n_max, inverse=inverse, budget=budget, workers=workers
    )
    sums = _function_sums(tables, f)
    counts = [t.shape[0] for t in tables]
    sph = []
    for n in range(1, n_max + 1):
        if counts[n] == 0:
            raise SpherecombError(f"no paths of length {n} from the start vertex")
        sph.append(sums[n] / counts[n])
    ces = []
    acc = 0.0 + 0.0j
    for n, v in enumerate(sph, start=1):
        acc += v
        ces.append(acc / n)
    return AveragingReport(
        mode="exact",
        inverse=inverse,
        basepoint=x,
        function=f,
        ns=tuple(range(1, n_max + 1)),
        path_counts=tuple(counts[1:]),
        spherical=tuple(sph),
        cesaro=tuple(ces),
    )


def spherical_average(
    graph: GraphStructure,
    x: TorusPoint,
    f: TestFunction,
    n: int,
    *,
    inverse: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> complex:
    """Average of f over the n-sphere: (1/#S_n) sum over |w| = n of f(w^-1 x)."""
    if n == 0:
        return f.evaluate(x)
    report = sphere_series(
        graph, x, f, n, inverse=inverse, budget=budget, workers=workers
    )
    return report.spherical_at(n)


def cesaro_average(
    graph: GraphStructure,
    x: TorusPoint,
    f: TestFunction,
    n_max: int,
    *,
    inverse: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> complex:
    """Cesaro mean (1/N) sum_{n=1..N} of the spherical averages; n = 0 is excluded."""
    report = sphere_series(
        graph, x, f, n_max, inverse=inverse, budget=budget, workers=workers
    )
    return report.cesaro_at(n_max)


@dataclass(frozen=True)
class WeightedAverageResult:
    """A finite-N weighted average together with its predicted limit."""

    value: complex
    predicted_limit: complex
    n_max: int
    start: int | None
    end: int | None


def kappa_average(
    graph: GraphStructure,
    x: TorusPoint,
    f: TestFunction,
    n_max: int,
    *,
    data: spectral.SpectralData | None = None,
    start: int | None = None,
    end: int | None = None,
    inverse: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> WeightedAverageResult:
    """Counting average: (1/N) sum_n (1 / #Omega^n) sum over paths of f(w^-1 x).

    Paths of every starting vertex contribute to the normalizer #Omega^n;
    ``start``/``end`` restrict which paths contribute to the numerator (the
    per-block average kappa^{i,j}).  The predicted limit in the primitive case
    is q_i p_j / c times the Haar integral; unrestricted it is the Haar
    integral itself.
    """
    if data is None:
        data = spectral.perron_data(spectral.transition_matrix(graph))
    starts = list(range(graph.n_vertices)) if start is None else [start]
    counts_any = _backward_counts(graph, n_max)
    omega = [sum(counts_any[m]) for m in range(n_max + 1)]
    need = sum(counts_any[m][v] for v in starts for m in range(n_max + 1))
    if need > budget:
        raise BudgetExceededError(need, budget)
    sums = [0.0 + 0.0j] * (n_max + 1)
    for v in starts:
        tables = orbit_tables(
            graph, x, n_max, start=v, end=end, inverse=inverse,
            budget=budget, workers=workers,
        )
        for m, s in enumerate(_function_sums(tables, f)):
            sums[m] += s
    acc = 0.0 + 0.0j
    for n in range(1, n_max + 1):
        if omega[n] == 0:
            raise SpherecombError(f"no paths of length {n} at all")
        acc += sums[n] / omega[n]
    value = acc / n_max
    if data.c is None:
        predicted = complex(float("nan"), float("nan"))
    else:
        qi = float(data.q[start]) if start is not None else float(np.sum(data.q))
        pj = float(data.p[end]) if end is not None else float(np.sum(data.p))
        predicted = (qi * pj / data.c) * f.haar
    return WeightedAverageResult(
        value=value, predicted_limit=predicted, n_max=n_max, start=start, end=end
    )


def markov_cesaro(
    model: markov_mod.MarkovModel,
    x: TorusPoint,
    f: TestFunction,
    n_max: int,
    start: int,
    end: int,
    *,
    inverse: bool = True,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> WeightedAverageResult:
    """Markov-weighted Cesaro average over paths from one vertex to another.

    Each length-n path from i to j carries weight q_i p_j / lambda^n; the
    predicted limit is pi_i pi_j times the Haar integral.
    """
    graph = model.graph
    tables = orbit_tables(
        graph, x, n_max, start=start, end=end, inverse=inverse,
        budget=budget, workers=workers,
    )
    sums = _function_sums(tables, f)
    weight = model.q[start] * model.p[end]
    acc = 0.0 + 0.0j
    for n in range(1, n_max + 1):
        acc += weight / model.lam**n * sums[n]
    value = acc / n_max
    predicted = (model.pi[start] * model.pi[end]) * f.haar
    return WeightedAverageResult(
        value=value, predicted_limit=predicted, n_max=n_max, start=start, end=end
    )


# ---------------------------------------------------------------------------
# Monte Carlo mode


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error."""

    value: complex
    stderr: float
    samples: int


def mc_spherical(
    graph: GraphStructure,
    data: spectral.SpectralData,
    x: TorusPoint,
    f: TestFunction,
    n: int,
    samples: int,
    seed,
    *,
    inverse: bool = True,
) -> McEstimate:
    """Monte Carlo spherical average at length n under the prefix-then-uniform measure.

    For p* = 1 the sampling measure is exactly uniform counting measure, so
    this estimates the exact spherical average without bias.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    lp = markov_mod.lambda_prime(graph, data, n)
    rng = markov_mod._as_rng(seed)
    system = graph.system
    values = np.empty(samples, dtype=np.complex128)
    for s in range(samples):
        path = lp.sample(rng)
        word = graph.path_word(path)
        y = word_act(word, x, system, inverse=inverse)
        values[s] = f.evaluate(y)
    mean = complex(values.mean())
    if samples > 1:
        var = float(np.var(values.real, ddof=1) + np.var(values.imag, ddof=1))
        err = (var / samples) ** 0.5
    else:
        err = float("inf")
    return McEstimate(value=mean, stderr=err, samples=samples)


def random_geodesic_average(
    model: markov_mod.MarkovModel,
    x: TorusPoint,
    f: TestFunction,
    n_max: int,
    seed,
    *,
    start: int | str | None = None,
    inverse: bool = True,
) -> complex:
    """Time average (1/N) sum_{n=1..N} f(gamma(n)^-1 x) along one sampled ray.

    The ray is a Markov trajectory from the start vertex (the graph's initial
    vertex by default); the orbit point is refined incrementally, one inverse
    generator application per step.
    """
    if start is None:
        start = model.graph.initial
    path = markov_mod.sample_path(model, start, n_max, seed)
    graph = model.graph
    acts = _edge_actions(graph, inverse)
    system = graph.system
    if inverse:
        state = x.coords
    else:
        state = tuple(tuple(r) for r in GroupMatrix.identity(system.dim).rows)
    values = np.empty(n_max, dtype=np.complex128)
    for i, ei in enumerate(path.edges):
        if inverse:
            state = _apply_point(acts[ei], state)
            coords = state
        else:
            state = _matmul_mod(state, acts[ei])
            coords = _apply_point(state, x.coords)
        values[i] = f.evaluate(TorusPoint(coords))
    return _block_sum(values) / n_max

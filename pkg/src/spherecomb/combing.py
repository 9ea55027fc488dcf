"""Graph structures for geodesic combings and their path combinatorics.

A graph structure is a finite directed multigraph with a start vertex and
edges labeled by words in a generator system.  Paths from the start vertex
evaluate to group elements by multiplying edge labels left to right; the
structure is a geodesic combing when this evaluation is a length-preserving
bijection onto the group (checked against a breadth-first Cayley-graph
oracle by :func:`verify_geodesic`).

Two constructions are provided: the explicit no-backtracking automaton of a
free generating set, and the cone-type automaton computed from the exact
matrix representation by breadth-first search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Sequence

from . import spectral
from .algebra import GeneratorSystem, GroupMatrix
from .errors import (
    AutomatonFormatError,
    InconsistentAutomatonError,
    RadiusExhaustedError,
    SpherecombError,
    UnknownLabelError,
)


class Edge(NamedTuple):
    """Directed edge carrying a nonempty word of generator labels."""

    src: int
    dst: int
    word: tuple[str, ...]


@dataclass(frozen=True)
class GraphStructure:
    """Directed multigraph with a start vertex, edges labeled by generator words."""

    system: GeneratorSystem
    n_vertices: int
    initial: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        if not 0 <= self.initial < self.n_vertices:
            raise ValueError(f"initial vertex {self.initial} out of range")
        known = set(self.system.labels)
        for i, e in enumerate(self.edges):
            if not (0 <= e.src < self.n_vertices and 0 <= e.dst < self.n_vertices):
                raise AutomatonFormatError(
                    f"edge {i} joins {e.src}->{e.dst}, outside 0..{self.n_vertices - 1}"
                )
            if not e.word:
                raise AutomatonFormatError(f"edge {i} has an empty label word")
            for s in e.word:
                if s not in known:
                    raise UnknownLabelError(f"edge {i} uses unknown label {s!r}")

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return tuple(tuple(o) for o in out)

    @cached_property
    def _count_rows(self) -> tuple[tuple[int, ...], ...]:
        """Dense integer edge-multiplicity rows, for exact path counting."""
        rows = [[0] * self.n_vertices for _ in range(self.n_vertices)]
        for e in self.edges:
            rows[e.src][e.dst] += 1
        return tuple(tuple(r) for r in rows)

    def path_word(self, path: Sequence[int]) -> tuple[str, ...]:
        """Concatenated label word of a path given as edge indices."""
        out: list[str] = []
        for i in path:
            out.extend(self.edges[i].word)
        return tuple(out)

    def path_matrix(self, path: Sequence[int]) -> GroupMatrix:
        """Exact evaluation of a path to a group element."""
        return self.system.word_matrix(self.path_word(path))

    def path_vertices(self, start: int, path: Sequence[int]) -> tuple[int, ...]:
        verts = [start]
        for i in path:
            e = self.edges[i]
            if e.src != verts[-1]:
                raise ValueError(f"edge {i} does not continue the path at vertex {verts[-1]}")
            verts.append(e.dst)
        return tuple(verts)


def build_free_group_combing(system: GeneratorSystem) -> GraphStructure:
    """No-backtracking automaton of a free basis: 2k+1 vertices for rank k.

    Vertex 0 is the start; each label gets one vertex, entered by edges with
    that label from every vertex except the one of its inverse label.  Every
    label must be distinct from its inverse (free bases have no involutions).
    """
    labels = system.labels
    for s in labels:
        if system.inverse_of(s) == s:
            raise ValueError(f"label {s!r} is an involution; a free basis has none")
    vertex_of = {s: 1 + i for i, s in enumerate(labels)}
    edges = [Edge(0, vertex_of[s], (s,)) for s in labels]
    for s in labels:
        for t in labels:
            if t != system.inverse_of(s):
                edges.append(Edge(vertex_of[s], vertex_of[t], (t,)))
    return GraphStructure(system, 1 + len(labels), 0, tuple(edges))


# ---------------------------------------------------------------------------
# breadth-first search on the Cayley graph (the geodesic oracle)


def cayley_ball(
    system: GeneratorSystem, radius: int
) -> tuple[dict[GroupMatrix, int], list[list[GroupMatrix]]]:
    """Word-length of every element within the radius, plus elements by sphere.

    Breadth-first, expanding labels in declaration order, so the first path
    that discovers an element is its shortlex-least geodesic word.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    ident = GroupMatrix.identity(system.dim)
    dist: dict[GroupMatrix, int] = {ident: 0}
    spheres: list[list[GroupMatrix]] = [[ident]]
    mats = [system.matrix_of(s) for s in system.labels]
    for n in range(1, radius + 1):
        sphere: list[GroupMatrix] = []
        for g in spheres[n - 1]:
            for m in mats:
                h = g @ m
                if h not in dist:
                    dist[h] = n
                    sphere.append(h)
        spheres.append(sphere)
        if not sphere:
            break
    return dist, spheres


def cayley_sphere_counts(system: GeneratorSystem, radius: int) -> tuple[int, ...]:
    """Sphere sizes #S_n of the group for n = 0..radius, by brute-force BFS."""
    _, spheres = cayley_ball(system, radius)
    counts = [len(s) for s in spheres]
    counts += [0] * (radius + 1 - len(counts))
    return tuple(counts)


def _cone_type(
    system: GeneratorSystem,
    dist: dict[GroupMatrix, int],
    g: GroupMatrix,
    depth: int,
    lookahead: int,
) -> frozenset[tuple[str, ...]]:
    """Geodesic extensions of g up to the lookahead: words u with |gu| = |g| + |u|."""
    out: set[tuple[str, ...]] = set()
    stack = [(g, (), 0)]
    while stack:
        h, word, n = stack.pop()
        if n == lookahead:
            continue
        for s in system.labels:
            h2 = h @ system.matrix_of(s)
            if dist.get(h2) == depth + n + 1:
                w2 = word + (s,)
                out.add(w2)
                stack.append((h2, w2, n + 1))
    return frozenset(out)


def build_cone_type_combing(
    system: GeneratorSystem, radius: int, lookahead: int
) -> GraphStructure:
    """Cone-type automaton from the exact matrix representation.

    Elements within the radius are enumerated by breadth-first search; two
    elements share a state when their geodesic extensions agree to the given
    lookahead depth.  The result is self-checked: its path counts from the
    start must reproduce the Cayley sphere counts for all n <= radius -
    lookahead, else the lookahead was too shallow and the automaton is
    rejected.
    """
    if lookahead < 1:
        raise ValueError("lookahead must be at least 1")
    if radius <= lookahead:
        raise RadiusExhaustedError(
            f"radius {radius} leaves no room below lookahead {lookahead}"
        )
    dist, spheres = cayley_ball(system, radius)
    depth_cap = radius - lookahead
    for n in range(radius + 1):
        if n < len(spheres) and spheres[n]:
            continue
        raise RadiusExhaustedError(
            f"sphere {n} is empty: the group ball stops growing before radius {radius}"
        )

    state_of_type: dict[frozenset, int] = {}
    rep: list[tuple[GroupMatrix, int]] = []  # (element, depth), first BFS occurrence
    state_of_elem: dict[GroupMatrix, int] = {}
    for n in range(depth_cap + 1):
        for g in spheres[n]:
            t = _cone_type(system, dist, g, n, lookahead)
            if t not in state_of_type:
                state_of_type[t] = len(rep)
                rep.append((g, n))
            state_of_elem[g] = state_of_type[t]

    edges: list[Edge] = []
    for state, (g, depth) in enumerate(rep):
        if depth > depth_cap - 1:
            raise InconsistentAutomatonError(
                f"state {state} first appears at depth {depth}; its transitions "
                f"are not visible within radius {radius} (raise the radius)"
            )
        for s in system.labels:
            h = g @ system.matrix_of(s)
            if dist.get(h) == depth + 1:
                edges.append(Edge(state, state_of_elem[h], (s,)))

    graph = GraphStructure(system, len(rep), 0, tuple(edges))
    got = sphere_counts(graph, depth_cap)
    want = tuple(len(spheres[n]) for n in range(depth_cap + 1))
    if got != want:
        raise InconsistentAutomatonError(
            f"inconsistent automaton: path counts {got} != sphere counts {want} "
            f"up to n = {depth_cap}; raise the lookahead"
        )
    return graph


# ---------------------------------------------------------------------------
# path counting and enumeration


def _backward_counts(
    graph: GraphStructure, n_max: int, target: int | None = None
) -> list[list[int]]:
    """c[m][v] = exact number of length-m paths from v (ending at target, if given)."""
    rows = graph._count_rows
    nv = graph.n_vertices
    if target is None:
        cur = [1] * nv
    else:
        cur = [1 if v == target else 0 for v in range(nv)]
    table = [cur]
    for _ in range(n_max):
        cur = [sum(row[j] * cur[j] for j in range(nv) if row[j]) for row in rows]
        table.append(cur)
    return table


def count_paths(
    graph: GraphStructure, source: int | None, length: int, target: int | None = None
) -> int:
    """Exact number of length-n paths, via integer matrix powers.

    ``source=None`` counts paths from every vertex (the Omega^n of the whole
    structure); ``target=None`` places no condition on the endpoint.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    table = _backward_counts(graph, length, target)
    if source is None:
        return sum(table[length])
    return table[length][source]


def sphere_counts(graph: GraphStructure, n_max: int) -> tuple[int, ...]:
    """Path counts from the start vertex for n = 0..n_max (one matrix-vector pass)."""
    table = _backward_counts(graph, n_max)
    return tuple(table[n][graph.initial] for n in range(n_max + 1))


def enumerate_paths(
    graph: GraphStructure,
    source: int,
    length: int,
    target: int | None = None,
    *,
    on_push: Callable[[int], None] | None = None,
    on_pop: Callable[[int], None] | None = None,
) -> Iterator[tuple[int, ...]]:
    """All length-n paths from source, as tuples of edge indices, in DFS edge order.

    The optional hooks observe every DFS descent/backtrack (by edge index), so
    a caller can maintain an incremental state, e.g. a torus point refined per
    edge, with O(1) work per tree edge instead of O(n) per path.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    if not 0 <= source < graph.n_vertices:
        raise ValueError(f"source vertex {source} out of range")
    if length == 0:
        if target is None or source == target:
            yield ()
        return
    out = graph.out_edges
    edges = graph.edges
    path: list[int] = []
    # stack of iterators over edge indices, one per depth
    iters = [iter(out[source])]
    while iters:
        it = iters[-1]
        advanced = False
        for ei in it:
            e = edges[ei]
            path.append(ei)
            if on_push is not None:
                on_push(ei)
            if len(path) == length:
                if target is None or e.dst == target:
                    yield tuple(path)
                if on_pop is not None:
                    on_pop(ei)
                path.pop()
            else:
                iters.append(iter(out[e.dst]))
                advanced = True
                break
        if not advanced:
            iters.pop()
            if path:
                ei = path.pop()
                if on_pop is not None:
                    on_pop(ei)


def loop_paths(graph: GraphStructure, vertex: int, length: int) -> Iterator[tuple[int, ...]]:
    """Length-n paths from a vertex back to itself (elements of its loop semigroup)."""
    return enumerate_paths(graph, vertex, length, target=vertex)


# ---------------------------------------------------------------------------
# restriction, p-step, components


def restrict(
    graph: GraphStructure, keep: Sequence[int], new_initial: int | None = None
) -> GraphStructure:
    """Induced substructure on a vertex subset, vertices renumbered in sorted order.

    ``new_initial`` defaults to the old start vertex, which then must survive.
    """
    kept = sorted(set(keep))
    if not kept:
        raise ValueError("restriction to an empty vertex set")
    for v in kept:
        if not 0 <= v < graph.n_vertices:
            raise ValueError(f"vertex {v} out of range")
    if new_initial is None:
        new_initial = graph.initial
    if new_initial not in kept:
        raise ValueError(f"initial vertex {new_initial} is not in the kept set")
    index = {v: i for i, v in enumerate(kept)}
    edges = tuple(
        Edge(index[e.src], index[e.dst], e.word)
        for e in graph.edges
        if e.src in index and e.dst in index
    )
    return GraphStructure(graph.system, len(kept), index[new_initial], edges)


def p_step(graph: GraphStructure, p: int) -> GraphStructure:
    """Structure whose edges are the length-p paths, labels concatenated in order."""
    if p < 1:
        raise ValueError("p must be at least 1")
    edges: list[Edge] = []
    for v in range(graph.n_vertices):
        for path in enumerate_paths(graph, v, p):
            edges.append(Edge(v, graph.edges[path[-1]].dst, graph.path_word(path)))
    return GraphStructure(graph.system, graph.n_vertices, graph.initial, tuple(edges))


@dataclass(frozen=True)
class ComponentDecomposition:
    """Strongly connected components with growth data, per vertex."""

    components: tuple[tuple[int, ...], ...]
    comp_of: tuple[int, ...]
    radii: tuple[float, ...]
    maximal: tuple[bool, ...]
    lam: float
    large_growth: tuple[bool, ...]

    def large_vertices(self) -> tuple[int, ...]:
        return tuple(v for v, big in enumerate(self.large_growth) if big)


def components(graph: GraphStructure, lam: float | None = None) -> ComponentDecomposition:
    """Component decomposition of the transition matrix, with growth classes.

    A component is maximal when its spectral radius attains the leading
    eigenvalue (supplied, or computed from the structure itself); a vertex has
    large growth when it reaches a maximal component.  Raises
    NotAlmostSemisimpleError when a path joins two distinct maximal components.
    """
    cls = spectral.classify(spectral.transition_matrix(graph), lam=lam)
    if not cls.almost_semisimple and cls.lam > 0:
        from .errors import NotAlmostSemisimpleError

        raise NotAlmostSemisimpleError(
            "not almost semisimple: a path joins two maximal components"
        )
    return ComponentDecomposition(
        components=cls.components,
        comp_of=cls.comp_of,
        radii=cls.radii,
        maximal=cls.maximal,
        lam=cls.lam,
        large_growth=cls.large_growth,
    )


def prune_small_growth(graph: GraphStructure) -> GraphStructure:
    """Restriction to the large-growth vertices (start vertex must survive)."""
    decomp = components(graph)
    return restrict(graph, decomp.large_vertices())


# ---------------------------------------------------------------------------
# geodesic verification against the BFS oracle


@dataclass(frozen=True)
class GeodesicReport:
    """Outcome of checking a structure against the Cayley-graph oracle."""

    radius: int
    injective: bool
    length_preserving: bool
    automaton_counts: tuple[int, ...]
    bfs_counts: tuple[int, ...]
    witness: str | None

    @property
    def counts_match(self) -> bool:
        return self.automaton_counts == self.bfs_counts

    @property
    def passed(self) -> bool:
        """True when evaluation is a length-preserving bijection onto every sphere."""
        return self.injective and self.length_preserving and self.counts_match


def verify_geodesic(graph: GraphStructure, radius: int) -> GeodesicReport:
    """Check injectivity and length preservation of path evaluation up to a radius.

    Every path from the start of length n <= radius is evaluated exactly; the
    element must have word length n (oracle: BFS on the Cayley graph), and no
    two paths may evaluate to the same element.  Together with equality of
    sphere counts this certifies the combing property up to the radius.
    """
    system = graph.system
    dist, spheres = cayley_ball(system, radius)
    bfs_counts = tuple(len(s) for s in spheres) + (0,) * (radius + 1 - len(spheres))
    seen: dict[GroupMatrix, tuple[str, ...]] = {}
    injective = True
    length_preserving = True
    witness: str | None = None
    auto_counts = [0] * (radius + 1)
    auto_counts[0] = 1

    mat_stack = [GroupMatrix.identity(system.dim)]
    word_stack: list[str] = []

    def push(ei: int) -> None:
        e = graph.edges[ei]
        m = mat_stack[-1]
        for s in e.word:
            m = m @ system.matrix_of(s)
        mat_stack.append(m)
        word_stack.extend(e.word)

    def pop(ei: int) -> None:
        mat_stack.pop()
        for _ in graph.edges[ei].word:
            word_stack.pop()

    for n in range(1, radius + 1):
        for _ in enumerate_paths(graph, graph.initial, n, on_push=push, on_pop=pop):
            auto_counts[n] += 1
            g = mat_stack[-1]
            word = tuple(word_stack)
            if len(word) != n:
                # composite labels: a "length-n" path may spell a longer word
                length_preserving = False
                if witness is None:
                    witness = f"path {''.join(word)} has {n} edges but spells {len(word)} letters"
                continue
            d = dist.get(g)
            if d != n:
                length_preserving = False
                if witness is None:
                    witness = f"word {''.join(word)} has word length {d}, not {n}"
            if g in seen:
                injective = False
                if witness is None:
                    witness = f"words {''.join(seen[g])} and {''.join(word)} evaluate equally"
            else:
                seen[g] = word

    return GeodesicReport(
        radius=radius,
        injective=injective,
        length_preserving=length_preserving,
        automaton_counts=tuple(auto_counts),
        bfs_counts=bfs_counts,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# automaton file format


def _graph_to_obj(graph: GraphStructure) -> dict:
    system = graph.system
    for i, e in enumerate(graph.edges):
        if len(e.word) != 1:
            raise AutomatonFormatError(
                f"edge {i} carries a composite word {e.word}; only unit labels serialize"
            )
    return {
        "dim": system.dim,
        "generators": [
            {
                "label": s,
                "inverse": system.inverse_of(s),
                "matrix": [list(row) for row in system.matrix_of(s).rows],
            }
            for s in system.labels
        ],
        "vertices": graph.n_vertices,
        "initial": graph.initial,
        "edges": [[e.src, e.dst, e.word[0]] for e in graph.edges],
    }


def save_automaton(graph: GraphStructure, path: str | Path) -> None:
    """Write the canonical JSON form; loading it back reproduces the structure exactly."""
    data = json.dumps(_graph_to_obj(graph), indent=2) + "\n"
    Path(path).write_text(data)


def load_automaton(path: str | Path) -> GraphStructure:
    """Read an automaton file, validating the format and all structure invariants."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise AutomatonFormatError(f"not valid JSON: {err}") from err
    for key in ("dim", "generators", "vertices", "initial", "edges"):
        if key not in obj:
            raise AutomatonFormatError(f"missing required key {key!r}")
    dim = obj["dim"]
    labels: list[str] = []
    matrices: list[GroupMatrix] = []
    inverses: list[str] = []
    for i, g in enumerate(obj["generators"]):
        for key in ("label", "inverse", "matrix"):
            if key not in g:
                raise AutomatonFormatError(f"generator {i} is missing {key!r}")
        m = GroupMatrix(tuple(tuple(int(v) for v in row) for row in g["matrix"]))
        if m.dim != dim:
            raise AutomatonFormatError(
                f"generator {g['label']!r} has dimension {m.dim}, file says {dim}"
            )
        labels.append(g["label"])
        matrices.append(m)
        inverses.append(g["inverse"])
    system = GeneratorSystem(tuple(labels), tuple(matrices), tuple(inverses))
    n = int(obj["vertices"])
    edges = []
    for i, e in enumerate(obj["edges"]):
        if len(e) != 3:
            raise AutomatonFormatError(f"edge {i} must be [src, dst, label], got {e!r}")
        src, dst, label = int(e[0]), int(e[1]), e[2]
        if not (0 <= src < n and 0 <= dst < n):
            raise AutomatonFormatError(
                f"edge {i} joins {src}->{dst}, outside 0..{n - 1}"
            )
        edges.append(Edge(src, dst, (label,)))
    try:
        return GraphStructure(system, n, int(obj["initial"]), tuple(edges))
    except SpherecombError as err:
        raise AutomatonFormatError(f"invalid automaton file: {err}") from err

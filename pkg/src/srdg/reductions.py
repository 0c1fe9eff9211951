"""Hardness-gadget builders and source-problem oracles.

Four reductions produce decaying-graph instances whose feasibility verdict
matches a classical source problem: multicolored independent set on unit
interval graphs (capacity-one exogenous path), cubic independent set
(capacitated star, lifetime 27), vertex cover (capacity-one star), and
(2,2)-3SAT (uncapacitated exogenous tree, lifetime 4).  Exhaustive oracles
for the source problems back the end-to-end correctness tests.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .errors import FormatError, ResourceLimitError
from .model import EDGE, Connection, DecayingGraph, Instance, RoutePath

# ---------------------------------------------------------------------------
# source-problem types


@dataclass(frozen=True)
class UnitIntervalInstance:
    """Colored unit intervals [a, a+1] with integer starts; every color
    class must be pairwise disjoint (an independent set)."""

    classes: tuple  # tuple of tuples of integer starts

    def __post_init__(self):
        if not self.classes:
            raise FormatError("need at least one color class")
        seen = set()
        for cls in self.classes:
            if not cls:
                raise FormatError("empty color class")
            for a in cls:
                if not isinstance(a, int) or a < 1:
                    raise FormatError(f"interval start must be a positive integer: {a!r}")
                if a in seen:
                    raise FormatError(f"duplicate interval start {a}")
                seen.add(a)
            for a, b in itertools.combinations(cls, 2):
                if abs(a - b) < 2:
                    raise FormatError(
                        f"color class not independent: intervals at {a} and {b} intersect"
                    )

    def starts(self):
        return [a for cls in self.classes for a in cls]


@dataclass(frozen=True)
class VcInstance:
    """Simple undirected graph for VERTEX COVER."""

    vertices: tuple
    edges: tuple  # tuple of frozensets

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise FormatError("duplicate vertex")
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise FormatError(f"edge must join two distinct vertices: {set(e)!r}")
            if not e <= set(self.vertices):
                raise FormatError(f"edge uses unknown vertex: {set(e)!r}")
            if e in seen:
                raise FormatError(f"duplicate edge: {set(e)!r}")
            seen.add(e)


@dataclass(frozen=True)
class CubicGraph:
    """Simple undirected graph with every vertex of degree exactly three."""

    vertices: tuple
    edges: tuple

    def __post_init__(self):
        base = VcInstance(self.vertices, self.edges)
        deg = {v: 0 for v in base.vertices}
        for e in self.edges:
            for v in e:
                deg[v] += 1
        bad = [v for v, d in deg.items() if d != 3]
        if bad:
            raise FormatError(f"graph is not cubic at {bad!r}")
        assert 2 * len(self.edges) == 3 * len(self.vertices)


@dataclass(frozen=True)
class Formula223:
    """(2,2)-3SAT formula: clauses of three distinct variables, every
    variable appearing exactly twice negated and twice unnegated."""

    n_vars: int
    clauses: tuple  # tuple of tuples of signed 1-based ints

    def __post_init__(self):
        if self.n_vars < 1:
            raise FormatError("formula needs at least one variable")
        pos = {i: 0 for i in range(1, self.n_vars + 1)}
        neg = {i: 0 for i in range(1, self.n_vars + 1)}
        for clause in self.clauses:
            if len(clause) != 3:
                raise FormatError(f"clause must have three literals: {clause!r}")
            if len({abs(l) for l in clause}) != 3:
                raise FormatError(f"clause variables must be distinct: {clause!r}")
            for lit in clause:
                v = abs(lit)
                if lit == 0 or v > self.n_vars:
                    raise FormatError(f"literal out of range: {lit}")
                (pos if lit > 0 else neg)[v] += 1
        for i in range(1, self.n_vars + 1):
            if pos[i] != 2 or neg[i] != 2:
                raise FormatError(
                    f"variable {i} must appear twice unnegated and twice negated "
                    f"(got {pos[i]}+/{neg[i]}-)"
                )
        assert 4 * self.n_vars == 3 * len(self.clauses)

    def occurrences(self, var: int, negated: bool):
        """Clause indices (1-based, ascending) holding the literal."""
        want = -var if negated else var
        return [j + 1 for j, clause in enumerate(self.clauses) if want in clause]


# ---------------------------------------------------------------------------
# oracles (exhaustive, desk scale)

_ORACLE_BUDGET = 24


def oracle_mis_uig(src: UnitIntervalInstance) -> bool:
    """Is there one interval per color, pairwise disjoint?"""
    if len(src.starts()) > _ORACLE_BUDGET:
        raise ResourceLimitError("interval instance too large for the oracle")
    for pick in itertools.product(*src.classes):
        if all(abs(a - b) >= 2 for a, b in itertools.combinations(pick, 2)):
            return True
    return False


def oracle_is(src: CubicGraph, k: int) -> bool:
    """Is there an independent set of size k?"""
    if len(src.vertices) > _ORACLE_BUDGET:
        raise ResourceLimitError("graph too large for the independent-set oracle")
    edges = set(src.edges)
    for pick in itertools.combinations(src.vertices, k):
        if all(frozenset((u, w)) not in edges for u, w in itertools.combinations(pick, 2)):
            return True
    return False


def oracle_vc(src: VcInstance, k: int) -> bool:
    """Is there a vertex cover of size at most k?"""
    if len(src.vertices) > _ORACLE_BUDGET:
        raise ResourceLimitError("graph too large for the vertex-cover oracle")
    if k >= len(src.vertices):
        return True
    for pick in itertools.combinations(src.vertices, k):
        chosen = set(pick)
        if all(e & chosen for e in src.edges):
            return True
    return False


def oracle_223sat(src: Formula223) -> bool:
    """Is the formula satisfiable?"""
    if src.n_vars > _ORACLE_BUDGET:
        raise ResourceLimitError("formula too large for the SAT oracle")
    for bits in itertools.product((False, True), repeat=src.n_vars):
        ok = True
        for clause in src.clauses:
            if not any(bits[abs(l) - 1] == (l > 0) for l in clause):
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# construction helpers


def _build(tau, names, capacities, specs, routes):
    conns = [Connection(t, h, EDGE, th, d) for t, h, th, d in specs]
    graph = DecayingGraph(tau, names, capacities, conns)
    return Instance(graph, [RoutePath(tuple(r)) for r in routes])


# ---------------------------------------------------------------------------
# Construction: MIS on unit interval graphs -> capacity-one exogenous path


def scaled_intervals(src: UnitIntervalInstance):
    """Per color class a list of (start, end) pairs; starts closer than 2
    anywhere trigger the doubling transform (length-2 intervals), which
    preserves the intersection graph and spaces all starts by >= 2."""
    starts = src.starts()
    spaced = all(abs(a - b) >= 2 for a, b in itertools.combinations(starts, 2))
    if spaced:
        return [[(a, a + 1) for a in sorted(cls)] for cls in src.classes]
    lo = min(starts)
    return [
        [(2 * (a - lo) + 2, 2 * (a - lo) + 4) for a in sorted(cls)]
        for cls in src.classes
    ]


def reduce_mis_uig(src: UnitIntervalInstance) -> Instance:
    """Capacity-one exogenous decaying path whose feasibility matches
    multicolored independent set on the interval graph."""
    classes = scaled_intervals(src)
    k = len(classes)
    tau = max(b for cls in classes for _a, b in cls)
    a_sets = [{a for a, _b in cls} for cls in classes]
    b_sets = [{b for _a, b in cls} for cls in classes]
    # left label sets grow with the color index, right label sets shrink
    lsets = [set() for _ in range(k + 1)]
    for i in range(1, k + 1):
        lsets[i] = lsets[i - 1] | a_sets[i - 1]
    rsets = [set() for _ in range(k + 2)]
    for i in range(k, 0, -1):
        rsets[i] = rsets[i + 1] | b_sets[i - 1]

    xs = [f"x{t}" for t in range(1, tau + 1)]
    ys = [f"y{t}" for t in range(1, tau + 1)]
    left = [f"v{i}a" for i in range(1, k + 1)]
    right = [f"v{i}b" for i in range(1, k + 1)]
    order = xs + left + ["vl", "vs", "vr"] + right + list(reversed(ys))
    pos = {v: i for i, v in enumerate(order)}

    specs = []
    for t in range(1, tau):  # chain deadlines force blockers outward in time
        specs.append((f"x{t}", f"x{t + 1}", 0, t))
        specs.append((f"y{t}", f"y{t + 1}", 0, t))
    for u, w in zip(order[tau - 1 : tau + k + 3], order[tau : tau + k + 4]):
        specs.append((u, w, 0, tau))  # x_tau .. v_1^2 spine
    for u, w in zip(right, right[1:]):
        specs.append((u, w, 0, tau))
    specs.append((right[-1], f"y{tau}", 0, tau))

    def span(src_v, dst_v):
        i, j = pos[src_v], pos[dst_v]
        step = 1 if j >= i else -1
        return [order[t] for t in range(i, j + step, step)]

    routes = []
    for i in range(1, k + 1):
        mi = len(classes[i - 1])
        for _ in range(mi - 1):
            routes.append(span(f"v{i}a", "vl"))
        for _ in range(mi - 1):
            routes.append(span(f"v{i}b", "vr"))
        routes.append(span(f"v{i}a", f"v{i}b"))
    for t in range(1, tau + 1):  # left blockers, one per time step
        if t in lsets[1]:
            routes.append(span(f"x{tau}", f"x{t}"))
        elif t not in lsets[k]:
            routes.append(span("vl", f"x{t}"))
        else:
            i = min(j for j in range(1, k + 1) if t in lsets[j]) - 1
            routes.append(span(f"v{i}a", f"x{t}"))
    for t in range(1, tau + 1):  # right blockers mirror the left ones
        if t in rsets[k]:
            if t != tau:
                routes.append(span(f"y{tau}", f"y{t}"))
        elif t not in rsets[1]:
            routes.append(span("vr", f"y{t}"))
        else:
            i = min(j for j in range(1, k + 1) if t not in rsets[j])
            routes.append(span(f"v{i}b", f"y{t}"))

    return _build(tau, order, {v: 1 for v in order}, specs, routes)


# ---------------------------------------------------------------------------
# Construction: cubic independent set -> capacitated star, lifetime 27


def _cubic_free_slots(i: int, n: int, m: int, k: int) -> int:
    """Center slots left free next to the blockers at time step i."""
    if i == 1:
        return n
    if i in (2, 3, 4):
        return k
    if i == 5:
        return 2 * k
    if i == 6:
        return 3 * k
    if i == 7:
        return 4 * k + m
    if i == 8:
        return m
    if 9 <= i <= 16:
        return 0
    if i == 17:
        return n - k
    if i == 18:
        return 2 * (n - k)
    if i == 19:
        return 3 * (n - k)
    if i == 20:
        return 3 * (n - k) + m
    return 3 * (n - k)  # 21..27


def _ename(e) -> str:
    u, w = sorted(str(v) for v in e)
    return f"{u}_{w}"


def reduce_cubic_is(src: CubicGraph, k: int) -> Instance:
    """Capacitated decaying star (tau = 27) whose feasibility matches
    'has an independent set of size k' on the cubic graph."""
    n, m = len(src.vertices), len(src.edges)
    if not 1 <= k <= n:
        raise FormatError(f"k must be in 1..{n}, got {k}")
    tau = 27
    cap_center = 2 * m + 3 * n + 4 * k
    edges = sorted(src.edges, key=_ename)

    names = ["vs"]
    specs = []
    caps = {}

    def leaf(name, theta, deadline):
        names.append(name)
        caps[name] = 2
        specs.append(("vs", name, theta, deadline))

    for v in src.vertices:
        leaf(f"v_{v}", 4, 19)
        leaf(f"vp_{v}", 0, 1)
    for e in edges:
        en = _ename(e)
        leaf(f"ve_{en}", 6, 27)
        leaf(f"vep_{en}", 0, 7)
        leaf(f"vepp_{en}", 0, 20)
        leaf(f"vedag_{en}", 7, 8)
    blockers = []
    for i in range(1, tau + 1):
        for j in range(1, cap_center - _cubic_free_slots(i, n, m, k) + 1):
            name = f"b{i}_{j}"
            leaf(name, i - 1, i)  # pinned to occupy the center exactly at i
            blockers.append(name)
    caps["vs"] = cap_center

    routes = []
    for v in src.vertices:
        routes.append([f"vp_{v}", "vs", f"v_{v}"])
    for e in edges:
        en = _ename(e)
        routes.append([f"ve_{en}", "vs", f"vep_{en}"])
        routes.append([f"ve_{en}", "vs", f"vepp_{en}"])
        routes.append([f"vedag_{en}", "vs", f"ve_{en}"])
    for e in edges:
        en = _ename(e)
        for v in sorted(e, key=str):
            routes.append([f"v_{v}", "vs", f"ve_{en}"])
    for b in blockers:
        routes.append([b, "vs"])

    return _build(tau, names, caps, specs, routes)


# ---------------------------------------------------------------------------
# Construction: vertex cover -> capacity-one star


def reduce_vertex_cover(src: VcInstance, k: int) -> Instance:
    """Capacity-one decaying star whose feasibility matches 'has a vertex
    cover of size at most k'."""
    n, m = len(src.vertices), len(src.edges)
    if not 1 <= k <= n:
        raise FormatError(f"k must be in 1..{n}, got {k}")
    n_blockers = 3 * m - n + k - 1
    if n_blockers < 0:
        raise FormatError(
            "construction domain requires 3m - n + k >= 1 "
            f"(got n={n}, m={m}, k={k})"
        )
    if m + k < 4:
        # Below this the timing windows leave no room for the covering
        # phase: the early verifier of edge i must reach its endpoint
        # strictly between the head-on and capacity clashes with that
        # endpoint's late vertex path, which needs a late slot >= i-2m+4.
        raise FormatError(
            f"construction domain requires m + k >= 4 (got m={m}, k={k})"
        )
    tau = 7 * m + k + 3
    edges = sorted(src.edges, key=_ename)

    names = ["vs"]
    specs = []

    def leaf(name, theta, deadline):
        names.append(name)
        specs.append(("vs", name, theta, deadline))

    for v in src.vertices:
        leaf(f"v_{v}", m + 1, tau)
        leaf(f"vp_{v}", 0, 4 * m + k)
    for i, e in enumerate(edges, start=1):
        leaf(f"ve_{i}", i, 5 * m + k + 2 + i)
        leaf(f"vep_{i}", 5 * m + k - i, 5 * m + k - i + 1)
    for j in range(1, n_blockers + 1):
        leaf(f"b_{j}", m + n - k + j, m + n - k + j + 1)

    routes = []
    for v in src.vertices:
        routes.append([f"v_{v}", "vs", f"vp_{v}"])
    for i, e in enumerate(edges, start=1):
        routes.append([f"vep_{i}", "vs", f"ve_{i}"])
        for v in sorted(e, key=str):
            routes.append([f"ve_{i}", "vs", f"v_{v}"])
    for j in range(1, n_blockers + 1):
        routes.append([f"b_{j}", "vs"])

    return _build(tau, names, {v: 1 for v in names}, specs, routes)


# ---------------------------------------------------------------------------
# Construction: (2,2)-3SAT -> uncapacitated exogenous tree, lifetime 4


def reduce_223sat(src: Formula223) -> Instance:
    """Uncapacitated exogenous decaying tree (tau = 4, all travel times 0)
    whose feasibility matches satisfiability of the formula."""
    tau = 4
    names = ["z"]
    specs = []

    def edge(u, w, deadline):
        specs.append((u, w, 0, deadline))

    for i in range(1, src.n_vars + 1):
        u, up, upp = f"u_{i}", f"up_{i}", f"upp_{i}"
        w, wp, wpp = f"w_{i}", f"wp_{i}", f"wpp_{i}"
        names.extend([u, up, upp, w, wp, wpp])
        edge("z", u, 4)
        edge("z", w, 4)
        edge(u, up, 3)
        edge(w, wp, 3)
        edge(up, upp, 1)
        edge(wp, wpp, 1)
        for j in (1, 2):
            v = f"v_{i}_{j}"
            t, tp, tpp = f"t_{i}_{j}", f"tp_{i}_{j}", f"tpp_{i}_{j}"
            f, fp, fpp = f"f_{i}_{j}", f"fp_{i}_{j}", f"fpp_{i}_{j}"
            names.extend([v, t, tp, tpp, f, fp, fpp])
            edge("z", v, 4)
            edge(v, t, 4)
            edge(v, f, 4)
            edge(t, tp, 2)
            edge(f, fp, 2)
            edge(tp, tpp, 1)
            edge(fp, fpp, 1)
    for j in range(1, len(src.clauses) + 1):
        names.append(f"c_{j}")
        edge("z", f"c_{j}", 4)

    routes = []
    for i in range(1, src.n_vars + 1):
        routes.append([f"u_{i}", f"up_{i}", f"upp_{i}"])
        routes.append([f"w_{i}", f"wp_{i}", f"wpp_{i}"])
        through = [f"up_{i}", f"u_{i}", "z", f"w_{i}", f"wp_{i}"]
        routes.append(list(through))
        routes.append(list(through))
        for j in (1, 2):
            routes.append([f"t_{i}_{j}", f"tp_{i}_{j}", f"tpp_{i}_{j}"])
            routes.append([f"f_{i}_{j}", f"fp_{i}_{j}", f"fpp_{i}_{j}"])
            routes.append(
                [f"tp_{i}_{j}", f"t_{i}_{j}", f"v_{i}_{j}", f"f_{i}_{j}", f"fp_{i}_{j}"]
            )
        routes.append([f"t_{i}_1", f"v_{i}_1", "z", f"u_{i}"])
        routes.append([f"t_{i}_2", f"v_{i}_2", "z", f"w_{i}"])
        routes.append([f"f_{i}_1", f"v_{i}_1", "z", f"w_{i}"])
        routes.append([f"f_{i}_2", f"v_{i}_2", "z", f"u_{i}"])
        pos_clauses = src.occurrences(i, negated=False)
        neg_clauses = src.occurrences(i, negated=True)
        routes.append([f"t_{i}_1", f"v_{i}_1", "z", f"c_{pos_clauses[0]}"])
        routes.append([f"t_{i}_2", f"v_{i}_2", "z", f"c_{pos_clauses[1]}"])
        routes.append([f"f_{i}_1", f"v_{i}_1", "z", f"c_{neg_clauses[0]}"])
        routes.append([f"f_{i}_2", f"v_{i}_2", "z", f"c_{neg_clauses[1]}"])

    return _build(tau, names, {v: None for v in names}, specs, routes)


# ---------------------------------------------------------------------------
# formula sampling and source-file parsing


def sample_formula223(n_vars: int, seed: int) -> Formula223:
    """Random (2,2)-3SAT formula: deal each variable's four occurrence
    tokens into clause slots, rejecting clauses with repeated variables."""
    if n_vars % 3 != 0:
        raise FormatError("(2,2)-3SAT needs 4N = 3M, so N must be divisible by 3")
    rng = random.Random(seed)
    n_clauses = 4 * n_vars // 3
    tokens = []
    for i in range(1, n_vars + 1):
        tokens.extend([i, i, -i, -i])
    for _ in range(10_000):
        rng.shuffle(tokens)
        clauses = [tuple(tokens[3 * j : 3 * j + 3]) for j in range(n_clauses)]
        if all(len({abs(l) for l in c}) == 3 for c in clauses):
            return Formula223(n_vars, tuple(clauses))
    raise ResourceLimitError("could not sample a valid formula")


def parse_interval_classes(text: str) -> UnitIntervalInstance:
    """One color class per line: whitespace-separated integer starts."""
    classes = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            classes.append(tuple(int(tok) for tok in line.split()))
        except ValueError as exc:
            raise FormatError(f"bad interval line {line!r}") from exc
    return UnitIntervalInstance(tuple(classes))


def parse_edge_list(text: str):
    """Lines of 'u w' edges; a lone token declares an isolated vertex."""
    vertices, edges = [], []
    seen = set()

    def add_vertex(v):
        if v not in seen:
            seen.add(v)
            vertices.append(v)

    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) == 1:
            add_vertex(toks[0])
        elif len(toks) == 2:
            add_vertex(toks[0])
            add_vertex(toks[1])
            edges.append(frozenset(toks))
        else:
            raise FormatError(f"bad edge line {line!r}")
    return tuple(vertices), tuple(edges)


def parse_cnf223(text: str) -> Formula223:
    """DIMACS-like: optional 'p cnf N M' header, clause lines ending in 0."""
    n_vars = 0
    clauses = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"bad problem line {line!r}")
            n_vars = int(parts[2])
            continue
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise FormatError(f"bad clause line {line!r}") from exc
        if not lits or lits[-1] != 0:
            raise FormatError(f"clause line must end with 0: {line!r}")
        clause = tuple(lits[:-1])
        clauses.append(clause)
        n_vars = max([n_vars] + [abs(l) for l in clause])
    return Formula223(n_vars, tuple(clauses))

"""Domain model for routing fixed paths over graphs with expiring connections.

A decaying graph carries undirected edges and directed arcs; every connection
has a traversal time theta and a deadline after which it can no longer be
entered.  A temporalization assigns one departure time per hop of every
routed path.  This module defines the data types, JSON round-trips, the
structural classifiers (shape, exogenous), and the validity checker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import FormatError, ShapeError

EDGE = "edge"
ARC = "arc"


@dataclass(frozen=True)
class Connection:
    """One edge or arc. Edges are traversable both ways, arcs tail->head only."""

    tail: str
    head: str
    kind: str  # EDGE or ARC
    theta: int
    deadline: int

    def pair(self) -> frozenset:
        return frozenset((self.tail, self.head))


@dataclass(frozen=True)
class RoutePath:
    """A fixed route: mutually distinct vertices, every hop traversable."""

    vertices: tuple

    def hops(self) -> list:
        v = self.vertices
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]

    @property
    def source(self) -> str:
        return self.vertices[0]

    @property
    def sink(self) -> str:
        return self.vertices[-1]

    def __len__(self) -> int:
        return len(self.vertices) - 1


class DecayingGraph:
    """Vertices with capacities plus timed connections, horizon tau."""

    def __init__(self, tau, vertices, capacities, connections):
        if tau < 1:
            raise FormatError("tau must be >= 1")
        self.tau = int(tau)
        self.vertices = list(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise FormatError("duplicate vertex id")
        self.capacities = dict(capacities)
        self.connections = list(connections)
        self._vertex_pos = {v: i for i, v in enumerate(self.vertices)}
        for v, c in self.capacities.items():
            if v not in self._vertex_pos:
                raise FormatError(f"capacity for unknown vertex {v!r}")
            if c is not None and c < 1:
                raise FormatError(f"capacity of {v!r} must be >= 1 or unbounded")
        # hop lookup: ordered (u, v) -> (connection index, reversed flag)
        self._hop = {}
        by_pair = {}
        for idx, c in enumerate(self.connections):
            if c.tail == c.head:
                raise FormatError(f"self-loop at {c.tail!r}")
            for v in (c.tail, c.head):
                if v not in self._vertex_pos:
                    raise FormatError(f"connection uses unknown vertex {v!r}")
            if c.kind not in (EDGE, ARC):
                raise FormatError(f"unknown connection kind {c.kind!r}")
            if not (0 <= c.theta <= self.tau - 1):
                raise FormatError(
                    f"traversal time out of range for {c.tail!r}->{c.head!r}: "
                    f"{c.theta} not in 0..{self.tau - 1}"
                )
            if not (1 <= c.deadline <= self.tau):
                raise FormatError(
                    f"deadline out of range for {c.tail!r}->{c.head!r}: "
                    f"{c.deadline} not in 1..{self.tau}"
                )
            by_pair.setdefault(c.pair(), []).append(c)
            if c.kind == EDGE:
                self._register_hop(c.tail, c.head, idx, False)
                self._register_hop(c.head, c.tail, idx, True)
            else:
                self._register_hop(c.tail, c.head, idx, False)
        # per unordered pair: one edge, one arc, or two antiparallel arcs
        for pair, group in by_pair.items():
            kinds = sorted(c.kind for c in group)
            ok = kinds == [EDGE] or kinds == [ARC] or (
                kinds == [ARC, ARC] and group[0].tail != group[1].tail
            )
            if not ok:
                u, w = sorted(pair)
                raise FormatError(f"conflicting connection kinds for pair ({u!r}, {w!r})")

    def _register_hop(self, u, v, idx, reverse):
        if (u, v) in self._hop:
            raise FormatError(f"conflicting connection kinds for pair ({u!r}, {v!r})")
        self._hop[(u, v)] = (idx, reverse)

    def capacity(self, v) -> Optional[int]:
        return self.capacities.get(v)

    def vertex_index(self, v) -> int:
        return self._vertex_pos[v]

    def traversable(self, u, v) -> bool:
        return (u, v) in self._hop

    def hop_connection(self, u, v):
        """Connection used by hop u->v plus whether the edge is taken reversed."""
        try:
            idx, rev = self._hop[(u, v)]
        except KeyError:
            raise FormatError(f"path hop not traversable: {u!r}->{v!r}") from None
        return self.connections[idx], idx, rev

    def underlying_edges(self) -> set:
        """Edge set of U(G): arcs replaced by edges, duplicates merged."""
        return {c.pair() for c in self.connections}


class Instance:
    """A decaying graph together with the routed path collection."""

    def __init__(self, graph: DecayingGraph, paths: Sequence[RoutePath]):
        self.graph = graph
        self.paths = list(paths)
        self._through = {v: [] for v in graph.vertices}
        for pidx, p in enumerate(self.paths):
            if len(p.vertices) < 2:
                raise FormatError("path needs at least two vertices")
            if len(set(p.vertices)) != len(p.vertices):
                raise FormatError("path vertices must be distinct")
            for v in p.vertices:
                if v not in graph._vertex_pos:
                    raise FormatError(f"path uses unknown vertex {v!r}")
                self._through[v].append(pidx)
            for u, v in p.hops():
                graph.hop_connection(u, v)  # raises if not traversable

    def paths_through(self, v) -> list:
        """Indices of paths containing vertex v."""
        return self._through[v]

    def hop_theta(self, u, v) -> int:
        return self.graph.hop_connection(u, v)[0].theta

    def hop_deadline(self, u, v) -> int:
        return self.graph.hop_connection(u, v)[0].deadline


@dataclass(frozen=True)
class Temporalization:
    """Departure times per hop per path; horizon = tau plus any slack."""

    horizon: int
    departures: tuple

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for times in self.departures:
            for t in times:
                if not (1 <= t <= self.horizon):
                    raise ValueError(f"departure {t} outside 1..{self.horizon}")

    @staticmethod
    def of(horizon: int, departures: Iterable) -> "Temporalization":
        return Temporalization(horizon, tuple(tuple(ts) for ts in departures))


@dataclass(frozen=True)
class Violation:
    kind: str  # monotonicity | deadline | same_connection | head_on | capacity
    paths: tuple
    message: str
    vertex: Optional[str] = None
    connection: Optional[tuple] = None
    times: tuple = ()


@dataclass
class Diagnosis:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


# ---------------------------------------------------------------------------
# JSON round-trips


def parse_instance(source: Union[str, dict]) -> Instance:
    """Build an Instance from JSON text or an already-decoded dict."""
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    else:
        data = source
    try:
        tau = data["tau"]
        raw_vertices = data["vertices"]
        raw_connections = data["connections"]
        raw_paths = data.get("paths", [])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"missing instance field: {exc}") from exc
    vertices = []
    capacities = {}
    for item in raw_vertices:
        vid = str(item["id"])
        vertices.append(vid)
        cap = item.get("capacity", None)
        capacities[vid] = None if cap is None else int(cap)
    connections = []
    for item in raw_connections:
        connections.append(
            Connection(
                tail=str(item["tail"]),
                head=str(item["head"]),
                kind=str(item["kind"]),
                theta=int(item["theta"]),
                deadline=int(item["deadline"]),
            )
        )
    graph = DecayingGraph(int(tau), vertices, capacities, connections)
    paths = [RoutePath(tuple(str(v) for v in p)) for p in raw_paths]
    return Instance(graph, paths)


def instance_to_dict(instance: Instance) -> dict:
    g = instance.graph
    return {
        "tau": g.tau,
        "vertices": [{"id": v, "capacity": g.capacities.get(v)} for v in g.vertices],
        "connections": [
            {
                "tail": c.tail,
                "head": c.head,
                "kind": c.kind,
                "theta": c.theta,
                "deadline": c.deadline,
            }
            for c in g.connections
        ],
        "paths": [list(p.vertices) for p in instance.paths],
    }


def parse_schedule(source: Union[str, dict]) -> Temporalization:
    data = json.loads(source) if isinstance(source, str) else source
    try:
        horizon = int(data["horizon"])
        departures = data["departures"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"missing schedule field: {exc}") from exc
    try:
        return Temporalization.of(horizon, [[int(t) for t in ts] for ts in departures])
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def schedule_to_dict(pi: Temporalization) -> dict:
    return {"horizon": pi.horizon, "departures": [list(ts) for ts in pi.departures]}


# ---------------------------------------------------------------------------
# Structure


def shape(graph: DecayingGraph) -> str:
    """Classify U(G) as path, star, tree, or other.

    A lone vertex or a single edge counts as a path; a 3-vertex path wins
    over the star reading (path is checked first).
    """
    n = len(graph.vertices)
    edges = graph.underlying_edges()
    adj = {v: set() for v in graph.vertices}
    for pair in edges:
        u, w = tuple(pair)
        adj[u].add(w)
        adj[w].add(u)
    if n == 0:
        return "other"
    # connectivity
    seen = set()
    stack = [graph.vertices[0]]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(adj[v] - seen)
    if len(seen) != n or len(edges) != n - 1:
        return "other"  # disconnected or cyclic
    degrees = [len(adj[v]) for v in graph.vertices]
    if max(degrees, default=0) <= 2:
        return "path"
    if sum(1 for d in degrees if d >= 2) == 1:
        return "star"
    return "tree"


def is_exogenous(graph: DecayingGraph) -> bool:
    """True iff every G_t (connections with deadline >= t) induces one tree
    plus isolated vertices."""
    if shape(graph) == "other":
        raise ShapeError("exogeny is defined on tree-shaped graphs only")
    for t in range(1, graph.tau + 1):
        adj = {}
        for c in graph.connections:
            if c.deadline >= t:
                adj.setdefault(c.tail, set()).add(c.head)
                adj.setdefault(c.head, set()).add(c.tail)
        if not adj:
            continue
        start = next(iter(adj))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(adj):
            return False  # more than one nontrivial component
    return True


def vertex_load(instance: Instance) -> int:
    """max over vertices of the number of paths through them."""
    if not instance.paths:
        return 0
    return max(len(instance.paths_through(v)) for v in instance.graph.vertices)


def center_of_star(graph: DecayingGraph) -> str:
    """Vertex incident to every connection; ties broken by smallest id."""
    candidates = []
    edges = graph.underlying_edges()
    for v in graph.vertices:
        if all(v in pair for pair in edges):
            candidates.append(v)
    if not candidates or not edges:
        raise ShapeError("graph is not a star: no vertex covers all connections")
    return min(candidates)


# ---------------------------------------------------------------------------
# Occupancy and validity


def occupancy(instance: Instance, pi: Temporalization, path_index: int) -> dict:
    """Closed integer interval [lo, hi] per vertex of one path under pi.

    Sources are occupied only at departure, sinks only at arrival, inner
    vertices from arrival until the next departure.
    """
    path = instance.paths[path_index]
    times = pi.departures[path_index]
    hops = path.hops()
    if len(times) != len(hops):
        raise ValueError(
            f"schedule for path {path_index} has {len(times)} departures, "
            f"path has {len(hops)} hops"
        )
    out = {path.vertices[0]: (times[0], times[0])}
    for i in range(1, len(hops)):
        arr = times[i - 1] + instance.hop_theta(*hops[i - 1])
        out[path.vertices[i]] = (arr, times[i])
    final_arr = times[-1] + instance.hop_theta(*hops[-1])
    out[path.vertices[-1]] = (final_arr, final_arr)
    return out


def validate(instance: Instance, pi: Temporalization) -> Diagnosis:
    """Check adequacy, temporal edge-disjointness, and capacities.

    Deadlines are checked against d(e) + slack with slack = horizon - tau,
    so the same checker serves plain feasibility (horizon = tau) and
    slack-extended schedules.
    """
    if len(pi.departures) != len(instance.paths):
        raise ValueError(
            f"schedule covers {len(pi.departures)} paths, instance has {len(instance.paths)}"
        )
    g = instance.graph
    slack = max(0, pi.horizon - g.tau)
    diag = Diagnosis()

    # adequacy: per-path monotonicity and deadline compliance
    for pidx, path in enumerate(instance.paths):
        times = pi.departures[pidx]
        hops = path.hops()
        if len(times) != len(hops):
            raise ValueError(
                f"schedule for path {pidx} has {len(times)} departures, "
                f"path has {len(hops)} hops"
            )
        for i, (u, v) in enumerate(hops):
            conn, _, _ = g.hop_connection(u, v)
            if i + 1 < len(hops) and times[i] + conn.theta > times[i + 1]:
                diag.violations.append(
                    Violation(
                        kind="monotonicity",
                        paths=(pidx,),
                        connection=(u, v),
                        times=(times[i], times[i + 1]),
                        message=(
                            f"path {pidx} departs {v!r} at {times[i + 1]} before "
                            f"arriving at {times[i] + conn.theta}"
                        ),
                    )
                )
            if times[i] + conn.theta > conn.deadline + slack:
                diag.violations.append(
                    Violation(
                        kind="deadline",
                        paths=(pidx,),
                        connection=(u, v),
                        times=(times[i],),
                        message=(
                            f"path {pidx} finishes hop {u!r}->{v!r} at "
                            f"{times[i] + conn.theta} after deadline "
                            f"{conn.deadline} + slack {slack}"
                        ),
                    )
                )

    # temporal edge-disjointness
    same_dir = {}  # (connection idx, reversed) -> [(pidx, time)]
    for pidx, path in enumerate(instance.paths):
        times = pi.departures[pidx]
        for i, (u, v) in enumerate(path.hops()):
            _, cidx, rev = g.hop_connection(u, v)
            same_dir.setdefault((cidx, rev), []).append((pidx, times[i]))
    for (cidx, rev), users in same_dir.items():
        conn = g.connections[cidx]
        by_time = {}
        for pidx, t in users:
            by_time.setdefault(t, []).append(pidx)
        for t, group in sorted(by_time.items()):
            if len(group) > 1:
                u, v = (conn.head, conn.tail) if rev else (conn.tail, conn.head)
                diag.violations.append(
                    Violation(
                        kind="same_connection",
                        paths=tuple(group),
                        connection=(u, v),
                        times=(t,),
                        message=(
                            f"paths {group} all depart {u!r}->{v!r} at {t}"
                        ),
                    )
                )
        if conn.kind == EDGE:
            opposite = same_dir.get((cidx, not rev), [])
            if rev:  # handle each edge once, from its forward direction
                continue
            gap = max(1, conn.theta)
            for p, tp in users:
                for q, tq in opposite:
                    if abs(tp - tq) < gap:
                        diag.violations.append(
                            Violation(
                                kind="head_on",
                                paths=(p, q),
                                connection=(conn.tail, conn.head),
                                times=(tp, tq),
                                message=(
                                    f"paths {p} and {q} cross edge "
                                    f"({conn.tail!r}, {conn.head!r}) in opposite "
                                    f"directions {abs(tp - tq)} apart, need >= {gap}"
                                ),
                            )
                        )

    # vertex capacities by interval sweep
    per_vertex = {}
    for pidx in range(len(instance.paths)):
        for v, (lo, hi) in occupancy(instance, pi, pidx).items():
            if lo <= hi:
                per_vertex.setdefault(v, []).append((lo, hi, pidx))
    for v, intervals in sorted(per_vertex.items()):
        cap = g.capacity(v)
        if cap is None or len(intervals) <= cap:
            continue
        events = []
        for lo, hi, pidx in intervals:
            events.append((lo, 1))
            events.append((hi + 1, -1))
        events.sort()
        count = 0
        worst_t = None
        for t, delta in events:
            count += delta
            if count > cap:
                worst_t = t
                break
        if worst_t is not None:
            located = tuple(p for lo, hi, p in intervals if lo <= worst_t <= hi)
            diag.violations.append(
                Violation(
                    kind="capacity",
                    paths=located,
                    vertex=v,
                    times=(worst_t,),
                    message=(
                        f"{len(located)} paths located at {v!r} at time {worst_t}, "
                        f"capacity {cap}"
                    ),
                )
            )
    return diag


def max_simultaneous(intervals: Sequence) -> int:
    """Maximum number of closed integer intervals sharing a point.

    Sort-and-sweep over endpoints, O(N log N).
    """
    events = []
    for lo, hi in intervals:
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        events.append((lo, 1))
        events.append((hi + 1, -1))
    events.sort()
    best = 0
    count = 0
    for _, delta in events:
        count += delta
        if count > best:
            best = count
    return best

"""Instance generators: factorial path/star families and geo-based instances.

The artificial families draw connection kinds uniformly from single arc,
antiparallel arc pair, and undirected edge, with traversal times uniform
on {5..20}.  Deadlines scale a per-connection lower bound derived from
usage counts and no-wait arrival times.  The geo family derives traversal
times from street lengths, deadlines from river distances, and samples
evacuation paths from inner flood zones outward.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass

from .errors import FormatError
from .model import ARC, EDGE, Connection, DecayingGraph, Instance, RoutePath

THETA_LO, THETA_HI = 5, 20
FLOOD_SPEED = 1.0  # m/s
MAX_SPEED = 50.0 / 3.6  # 50 km/h in m/s
ZONES = ("0", "A", "B", "C")


def _round_half_up(x: float) -> int:
    # round() is round-half-even; snap float noise first, then floor(x + 0.5)
    return math.floor(round(x, 9) + 0.5)


def _ceil_safe(x: float) -> int:
    return math.ceil(round(x, 9))


def d_lb(theta: int, no_wait_arrivals: list) -> int:
    """Deadline lower bound: theta plus the larger of user count and
    latest independent no-wait arrival; unused connections clamp upward."""
    if not no_wait_arrivals:
        return max(1, theta + 1)
    return theta + max(len(no_wait_arrivals), max(no_wait_arrivals))


@dataclass(frozen=True)
class PathGenParams:
    n: int
    p_star: float
    l_star: float
    c_star: float
    d_scale: float
    seed: int


def _draw_pair(rng, u, w):
    """Connection specs [(tail, head, kind, theta)] for one vertex pair."""
    choice = rng.randrange(3)
    if choice == 0:  # single arc, direction uniform
        if rng.random() < 0.5:
            return [(u, w, ARC, rng.randint(THETA_LO, THETA_HI))]
        return [(w, u, ARC, rng.randint(THETA_LO, THETA_HI))]
    if choice == 1:  # two antiparallel arcs
        return [
            (u, w, ARC, rng.randint(THETA_LO, THETA_HI)),
            (w, u, ARC, rng.randint(THETA_LO, THETA_HI)),
        ]
    return [(u, w, EDGE, rng.randint(THETA_LO, THETA_HI))]


def _finish_instance(specs, vertices, routes, c_star, d_scale):
    """Capacities from usage, deadlines from scaled d_lb, tau from both."""
    hop_map = {}
    for cidx, (tail, head, kind, _theta) in enumerate(specs):
        hop_map[(tail, head)] = cidx
        if kind == EDGE:
            hop_map[(head, tail)] = cidx

    usage = {cidx: [] for cidx in range(len(specs))}  # no-wait arrivals
    through = {v: set() for v in vertices}
    for pidx, route in enumerate(routes):
        t = 1
        for u, w in zip(route, route[1:]):
            cidx = hop_map[(u, w)]
            t += specs[cidx][3]
            usage[cidx].append(t)
        for v in route:
            through[v].add(pidx)

    capacities = {
        v: max(1, _ceil_safe(c_star * len(through[v]))) if through[v] else 1
        for v in vertices
    }
    deadlines = [
        max(1, _round_half_up(d_scale * d_lb(theta, usage[cidx])))
        for cidx, (_t, _h, _k, theta) in enumerate(specs)
    ]
    tau = max(max(deadlines), max(theta for _t, _h, _k, theta in specs) + 1)
    conns = [
        Connection(tail, head, kind, theta, deadlines[cidx])
        for cidx, (tail, head, kind, theta) in enumerate(specs)
    ]
    graph = DecayingGraph(tau, list(vertices), capacities, conns)
    return Instance(graph, [RoutePath(tuple(r)) for r in routes])


def gen_path_instance(params: PathGenParams) -> Instance:
    """Decaying path instance of the factorial design."""
    if params.n < 2:
        raise FormatError("path generator needs n >= 2")
    rng = random.Random(params.seed)
    n = params.n
    names = [f"v{i + 1}" for i in range(n)]
    specs = []
    for i in range(n - 1):
        specs.extend(_draw_pair(rng, names[i], names[i + 1]))

    can = {(u, w) for u, w, _k, _t in specs}
    can |= {(w, u) for u, w, k, _t in specs if k == EDGE}
    cap_len = _round_half_up(params.l_star * n)
    p = _round_half_up(params.p_star * n)

    routes = []
    tries = 0
    while len(routes) < p:
        tries += 1
        if tries > 400 * max(1, p):
            raise FormatError("path sampling stalled: no traversable walks")
        s = rng.randrange(n)
        left = 0
        while s - left > 0 and left < cap_len and (names[s - left], names[s - left - 1]) in can:
            left += 1
        right = 0
        while s + right < n - 1 and right < cap_len and (names[s + right], names[s + right + 1]) in can:
            right += 1
        if left == 0 and right == 0:
            continue
        if right > left:
            go_right = True
        elif left > right:
            go_right = False
        else:
            go_right = rng.random() < 0.5
        if go_right:
            routes.append([names[i] for i in range(s, s + right + 1)])
        else:
            routes.append([names[i] for i in range(s, s - left - 1, -1)])
    return _finish_instance(specs, names, routes, params.c_star, params.d_scale)


def gen_star_instance(n: int, p_star: float, c_star: float, d_scale: float, seed: int) -> Instance:
    """Decaying star instance; paths run leaf-to-center, center-to-leaf,
    or leaf-to-reachable-leaf by a fair coin."""
    if n < 2:
        raise FormatError("star generator needs n >= 2")
    rng = random.Random(seed)
    center = "c"
    leaves = [f"l{i + 1}" for i in range(n - 1)]
    names = [center] + leaves
    specs = []
    for leaf in leaves:
        specs.extend(_draw_pair(rng, center, leaf))
    can = {(u, w) for u, w, _k, _t in specs}
    can |= {(w, u) for u, w, k, _t in specs if k == EDGE}

    p = _round_half_up(p_star * n)
    routes = []
    tries = 0
    while len(routes) < p:
        tries += 1
        if tries > 400 * max(1, p):
            raise FormatError("star sampling stalled: no traversable paths")
        src = names[rng.randrange(n)]
        if src == center:
            outs = [l for l in leaves if (center, l) in can]
            if not outs:
                continue
            routes.append([center, outs[rng.randrange(len(outs))]])
            continue
        if (src, center) not in can:
            continue
        if rng.random() < 0.5:
            routes.append([src, center])
        else:
            outs = [l for l in leaves if l != src and (center, l) in can]
            if not outs:
                continue
            routes.append([src, center, outs[rng.randrange(len(outs))]])
    return _finish_instance(specs, names, routes, c_star, d_scale)


# ---------------------------------------------------------------------------
# Geo-based family


@dataclass(frozen=True)
class GeoGraph:
    vertices: tuple  # (id, x, y)
    connections: tuple  # (tail, head, length_m, oneway)
    rivers: tuple  # polylines, each a tuple of (x, y)

    @staticmethod
    def from_dict(data: dict) -> "GeoGraph":
        try:
            vertices = tuple((v["id"], float(v["x"]), float(v["y"])) for v in data["vertices"])
            connections = tuple(
                (c["tail"], c["head"], float(c["length_m"]), bool(c["oneway"]))
                for c in data["connections"]
            )
            rivers = tuple(
                tuple((float(pt["x"]), float(pt["y"])) for pt in line)
                for line in data["rivers"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed geo graph: {exc}") from exc
        if not rivers or any(len(line) == 0 for line in rivers):
            raise FormatError("geo graph needs at least one nonempty river polyline")
        for _id, x, y in vertices:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise FormatError("vertex coordinates must be finite")
        return GeoGraph(vertices, connections, rivers)

    @staticmethod
    def from_json(text: str) -> "GeoGraph":
        return GeoGraph.from_dict(json.loads(text))


def river_distance(geo: GeoGraph, x: float, y: float) -> float:
    """Euclidean distance from a point to the nearest river polyline."""
    from shapely.geometry import LineString, Point

    pt = Point(x, y)
    best = math.inf
    for line in geo.rivers:
        geom = LineString(line) if len(line) > 1 else Point(line[0])
        best = min(best, pt.distance(geom))
    return best


def assign_zones(geo: GeoGraph) -> dict:
    """Zone 0 within 250 m of a river, A to 500 m, B to 1000 m, C beyond."""
    zones = {}
    for vid, x, y in geo.vertices:
        dist = river_distance(geo, x, y)
        if dist <= 250:
            zones[vid] = "0"
        elif dist <= 500:
            zones[vid] = "A"
        elif dist <= 1000:
            zones[vid] = "B"
        else:
            zones[vid] = "C"
    return zones


def _geo_specs(geo: GeoGraph):
    """(tail, head, kind, theta) per connection, theta from length and speed."""
    return [
        (tail, head, ARC if oneway else EDGE, _ceil_safe(length / MAX_SPEED))
        for tail, head, length, oneway in geo.connections
    ]


def _travel_dijkstra(adj, src):
    """Travel-time distances and predecessors, ties broken by vertex id."""
    dist = {src: 0}
    pred = {}
    heap = [(0, src)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, math.inf):
            continue
        for w, theta in adj.get(v, ()):
            nd = d + theta
            if nd < dist.get(w, math.inf) or (
                nd == dist.get(w, math.inf) and v < pred.get(w, v)
            ):
                if nd < dist.get(w, math.inf):
                    heapq.heappush(heap, (nd, w))
                dist[w] = nd
                pred[w] = v
    return dist, pred


def gen_geo_instance(geo: GeoGraph, p_star: float, target_zone: str, seed: int) -> Instance:
    """Evacuation instance: sources in zones inside the target, sinks among
    the 20% nearest vertices at or beyond it, routed on shortest paths."""
    if target_zone not in ("A", "B", "C"):
        raise FormatError(f"target zone must be A, B, or C, not {target_zone!r}")
    rng = random.Random(seed)
    zones = assign_zones(geo)
    specs = _geo_specs(geo)
    vertex_ids = [vid for vid, _x, _y in geo.vertices]
    coords = {vid: (x, y) for vid, x, y in geo.vertices}

    adj = {}
    for tail, head, kind, theta in specs:
        adj.setdefault(tail, []).append((head, theta))
        if kind == EDGE:
            adj.setdefault(head, []).append((tail, theta))
    for v in adj:
        adj[v].sort()

    zi = ZONES.index(target_zone)
    inner = [v for v in vertex_ids if ZONES.index(zones[v]) < zi]
    outer = {v for v in vertex_ids if ZONES.index(zones[v]) >= zi}
    p = _round_half_up(p_star * len(inner))

    routes = []
    tries = 0
    while len(routes) < p:
        tries += 1
        if tries > 400 * max(1, p):
            raise FormatError("geo sampling stalled: sources cannot reach the outer zones")
        src = inner[rng.randrange(len(inner))]
        dist, pred = _travel_dijkstra(adj, src)
        eligible = sorted(
            (dist[v], v) for v in outer if v != src and v in dist
        )
        if not eligible:
            continue
        k = max(1, _ceil_safe(0.2 * len(eligible)))
        _d, sink = eligible[rng.randrange(k)]
        route = [sink]
        while route[-1] != src:
            route.append(pred[route[-1]])
        routes.append(list(reversed(route)))

    # deadlines: nearer endpoint's river distance over the flood speed
    rdist = {vid: river_distance(geo, *coords[vid]) for vid in vertex_ids}
    deadlines = []
    for tail, head, kind, theta in specs:
        d = _ceil_safe(min(rdist[tail], rdist[head]) / FLOOD_SPEED)
        deadlines.append(max(theta + 1, d))
    tau = max(max(deadlines), max(th for _t, _h, _k, th in specs) + 1)
    incident = {v: 0 for v in vertex_ids}
    for tail, head, _k, _t in specs:
        incident[tail] += 1
        incident[head] += 1
    conns = [
        Connection(tail, head, kind, theta, deadlines[i])
        for i, (tail, head, kind, theta) in enumerate(specs)
    ]
    graph = DecayingGraph(tau, vertex_ids, {v: max(1, incident[v]) for v in vertex_ids}, conns)
    return Instance(graph, [RoutePath(tuple(r)) for r in routes])

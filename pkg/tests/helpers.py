"""Shared fixtures: hand-rolled instance builders, seeded corpora, and an
independent naive validity checker used as the oracle for the fast one."""

from __future__ import annotations

import random

from srdg.model import (
    ARC,
    EDGE,
    Connection,
    DecayingGraph,
    Instance,
    RoutePath,
    Temporalization,
)


def mk_instance(tau, vertices, connections, paths=()):
    """vertices: [(id, capacity)], connections: [(tail, head, kind, theta, d)]."""
    graph = DecayingGraph(
        tau,
        [v for v, _ in vertices],
        {v: c for v, c in vertices},
        [Connection(t, h, k, th, d) for t, h, k, th, d in connections],
    )
    return Instance(graph, [RoutePath(tuple(p)) for p in paths])


def path_graph(tau, caps, connections):
    """Line v1-...-vn; connections: list of per-gap specs, each a list of
    (direction, theta, deadline) with direction in {'edge','fwd','bwd'}."""
    n = len(caps)
    vertices = [(f"v{i + 1}", caps[i]) for i in range(n)]
    conns = []
    for i, specs in enumerate(connections):
        u, w = f"v{i + 1}", f"v{i + 2}"
        for direction, theta, d in specs:
            if direction == "edge":
                conns.append((u, w, EDGE, theta, d))
            elif direction == "fwd":
                conns.append((u, w, ARC, theta, d))
            else:
                conns.append((w, u, ARC, theta, d))
    return vertices, conns


KIND_CHOICES = ("edge", "fwd", "bwd", "anti")


def _gap_specs(rng, kind, theta_pool, tau):
    theta = lambda: rng.choice(theta_pool)
    dl = lambda: rng.randint(1, tau)
    biased = lambda th: min(tau, max(th + 1, dl())) if rng.random() < 0.8 else dl()
    if kind == "edge":
        th = theta()
        return [("edge", th, biased(th))]
    if kind == "fwd":
        th = theta()
        return [("fwd", th, biased(th))]
    if kind == "bwd":
        th = theta()
        return [("bwd", th, biased(th))]
    th1, th2 = theta(), theta()
    return [("fwd", th1, biased(th1)), ("bwd", th2, biased(th2))]


def random_path_instance(seed, n_max=6, tau_max=8, max_paths=4, theta_pool=(0, 1, 2)):
    """Seeded path-graph instance: mixed kinds, caps in {1, 2, unbounded}."""
    rng = random.Random(seed)
    n = rng.randint(2, n_max)
    tau = rng.randint(2, tau_max)
    pool = tuple(t for t in theta_pool if t <= tau - 1)
    caps = [rng.choice([1, 2, None]) for _ in range(n)]
    gaps = [_gap_specs(rng, rng.choice(KIND_CHOICES), pool, tau) for _ in range(n - 1)]
    vertices, conns = path_graph(tau, caps, gaps)
    graph = DecayingGraph(
        tau,
        [v for v, _ in vertices],
        {v: c for v, c in vertices},
        [Connection(t, h, k, th, d) for t, h, k, th, d in conns],
    )
    paths = []
    want = rng.randint(1, max_paths)
    tries = 0
    while len(paths) < want and tries < 50:
        tries += 1
        start = rng.randint(0, n - 1)
        step = rng.choice([1, -1])
        route = [f"v{start + 1}"]
        idx = start
        while 0 <= idx + step < n and graph.traversable(f"v{idx + 1}", f"v{idx + 1 + step}"):
            route.append(f"v{idx + 1 + step}")
            idx += step
            if rng.random() < 0.35:
                break
        if len(route) >= 2:
            paths.append(RoutePath(tuple(route)))
    return Instance(graph, paths)


def random_star_instance(seed, leaves_max=6, tau_max=8, max_paths=4, theta_pool=(0, 1, 2)):
    """Seeded star instance with >= 3 leaves so the shape reads as a star."""
    rng = random.Random(seed)
    leaves = rng.randint(3, leaves_max)
    tau = rng.randint(2, tau_max)
    pool = tuple(t for t in theta_pool if t <= tau - 1)
    names = ["c"] + [f"l{i + 1}" for i in range(leaves)]
    caps = {v: rng.choice([1, 2, None]) for v in names}
    conns = []
    for leaf in names[1:]:
        kind = rng.choice(KIND_CHOICES)
        for direction, theta, d in _gap_specs(rng, kind, pool, tau):
            if direction == "edge":
                conns.append(Connection("c", leaf, EDGE, theta, d))
            elif direction == "fwd":
                conns.append(Connection("c", leaf, ARC, theta, d))
            else:
                conns.append(Connection(leaf, "c", ARC, theta, d))
    graph = DecayingGraph(tau, names, caps, conns)
    paths = []
    want = rng.randint(1, max_paths)
    tries = 0
    while len(paths) < want and tries < 60:
        tries += 1
        src = rng.choice(names)
        if src == "c":
            outs = [l for l in names[1:] if graph.traversable("c", l)]
            if outs:
                paths.append(RoutePath(("c", rng.choice(outs))))
            continue
        if not graph.traversable(src, "c"):
            continue
        if rng.random() < 0.5:
            paths.append(RoutePath((src, "c")))
        else:
            outs = [l for l in names[1:] if l != src and graph.traversable("c", l)]
            if outs:
                paths.append(RoutePath((src, "c", rng.choice(outs))))
            else:
                paths.append(RoutePath((src, "c")))
    return Instance(graph, paths)


def random_schedule(seed, instance, horizon=None, adequate=False):
    """Random departures; with adequate=True they respect the travel chain."""
    rng = random.Random(seed)
    horizon = horizon or instance.graph.tau
    departures = []
    for path in instance.paths:
        hops = path.hops()
        times = []
        t = 0
        for u, v in hops:
            theta = instance.hop_theta(u, v)
            if adequate:
                lo = min(max(1, t), horizon)
                t = rng.randint(lo, horizon)
            else:
                t = rng.randint(1, horizon)
            times.append(t)
            t += theta
        departures.append(times)
    return Temporalization.of(horizon, departures)


# ---------------------------------------------------------------------------
# Independent naive checker: materializes located/departing sets per time step.


def naive_validate(instance, pi) -> bool:
    g = instance.graph
    slack = max(0, pi.horizon - g.tau)
    # adequacy
    for pidx, path in enumerate(instance.paths):
        times = pi.departures[pidx]
        hops = path.hops()
        for i, (u, v) in enumerate(hops):
            conn, _, _ = g.hop_connection(u, v)
            if times[i] + conn.theta > conn.deadline + slack:
                return False
            if i + 1 < len(hops) and times[i] + conn.theta > times[i + 1]:
                return False

    # located paths per (vertex, t), rebuilt from scratch
    located = {}
    for pidx, path in enumerate(instance.paths):
        times = pi.departures[pidx]
        hops = path.hops()
        for t in range(1, pi.horizon + 1):
            for j, v in enumerate(path.vertices):
                if j == 0:
                    here = t == times[0]
                elif j == len(path.vertices) - 1:
                    arr = times[-1] + instance.hop_theta(*hops[-1])
                    here = t == arr
                else:
                    arr = times[j - 1] + instance.hop_theta(*hops[j - 1])
                    here = arr <= t <= times[j]
                if here:
                    located.setdefault((v, t), set()).add(pidx)
    for (v, _t), group in located.items():
        cap = g.capacity(v)
        if cap is not None and len(group) > cap:
            return False

    # departing sets per (connection, direction, t) must be singletons
    departing = {}
    for pidx, path in enumerate(instance.paths):
        times = pi.departures[pidx]
        for i, (u, v) in enumerate(path.hops()):
            _, cidx, rev = g.hop_connection(u, v)
            departing.setdefault((cidx, rev, times[i]), set()).add(pidx)
    for group in departing.values():
        if len(group) > 1:
            return False

    # opposite directions over one undirected edge
    for pidx, path in enumerate(instance.paths):
        times = pi.departures[pidx]
        for i, (u, v) in enumerate(path.hops()):
            conn, cidx, rev = g.hop_connection(u, v)
            if conn.kind != EDGE:
                continue
            for qidx, other in enumerate(instance.paths):
                for j, (a, b) in enumerate(other.hops()):
                    _, cidx2, rev2 = g.hop_connection(a, b)
                    if cidx2 == cidx and rev2 != rev:
                        if abs(times[i] - pi.departures[qidx][j]) < max(1, conn.theta):
                            return False
    return True


def random_tree_instance(seed, n_max=7, tau_max=8, max_paths=4, theta_pool=(0, 1, 2)):
    """Seeded tree instance (not necessarily a path or star), mixed kinds."""
    rng = random.Random(seed)
    n = rng.randint(4, n_max)
    tau = rng.randint(2, tau_max)
    pool = tuple(t for t in theta_pool if t <= tau - 1)
    names = [f"t{i + 1}" for i in range(n)]
    caps = {v: rng.choice([1, 2, None]) for v in names}
    adj = {v: [] for v in names}
    conns = []
    for i in range(1, n):
        parent = names[rng.randint(0, i - 1)]
        child = names[i]
        adj[parent].append(child)
        adj[child].append(parent)
        kind = rng.choice(KIND_CHOICES)
        for direction, theta, d in _gap_specs(rng, kind, pool, tau):
            if direction == "edge":
                conns.append(Connection(parent, child, EDGE, theta, d))
            elif direction == "fwd":
                conns.append(Connection(parent, child, ARC, theta, d))
            else:
                conns.append(Connection(child, parent, ARC, theta, d))
    graph = DecayingGraph(tau, names, caps, conns)

    def tree_route(src, dst):
        # unique path in the tree via DFS
        stack = [(src, [src])]
        while stack:
            v, trail = stack.pop()
            if v == dst:
                return trail
            for w in adj[v]:
                if w not in trail:
                    stack.append((w, trail + [w]))
        return None

    paths = []
    want = rng.randint(1, max_paths)
    tries = 0
    while len(paths) < want and tries < 60:
        tries += 1
        src, dst = rng.sample(names, 2)
        route = tree_route(src, dst)
        if route is None or len(route) < 2:
            continue
        if all(graph.traversable(u, v) for u, v in zip(route, route[1:])):
            paths.append(RoutePath(tuple(route)))
    return Instance(graph, paths)

"""Enumeration solver for star-shaped decaying graphs.

Every path in a star visits the center, so a path is pinned down by at
most two times: its arrival at the center and its departure from it.
The solver backtracks over those tuples with incremental checks for
departure distinctness, head-on separation, and vertex capacities.
"""

from __future__ import annotations

from .errors import BudgetExceededError
from .exact import DEFAULT_NODE_BUDGET, SolveOutcome
from .model import EDGE, Instance, Temporalization, center_of_star, validate


class _PathVars:
    """Variable layout for one path: which times are free, where they occupy."""

    def __init__(self, instance: Instance, pidx: int, center):
        g = instance.graph
        path = instance.paths[pidx]
        self.pidx = pidx
        hops = []
        for u, v in path.hops():
            conn, cidx, rev = g.hop_connection(u, v)
            hops.append((u, v, conn, cidx, rev))
        self.hops = hops
        tau = g.tau
        if len(hops) == 2:
            (_, _, c1, _, _), (_, _, c2, _, _) = hops
            self.kind = "through"
            self.a_dom = (1 + c1.theta, min(c1.deadline, tau))
            self.b_cap = min(c2.deadline - c2.theta, tau)
        elif hops[0][1] == center:
            self.kind = "into"
            c1 = hops[0][2]
            self.a_dom = (1 + c1.theta, min(c1.deadline, tau))
        else:
            self.kind = "out"
            c1 = hops[0][2]
            self.b_dom = (1, min(c1.deadline - c1.theta, tau))

    def assignments(self, a=None, b=None):
        """(departures, occupancy) for the chosen center times."""
        if self.kind == "through":
            (s, _, c1, _, _), (_, t, c2, _, _) = self.hops
            deps = (a - c1.theta, b)
            occ = ((s, a - c1.theta, a - c1.theta), (self.hops[0][1], a, b),
                   (t, b + c2.theta, b + c2.theta))
        elif self.kind == "into":
            s, v, c1, _, _ = self.hops[0]
            deps = (a - c1.theta,)
            occ = ((s, a - c1.theta, a - c1.theta), (v, a, a))
        else:
            v, t, c1, _, _ = self.hops[0]
            deps = (b,)
            occ = ((v, b, b), (t, b + c1.theta, b + c1.theta))
        return deps, occ


def solve_star(instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET) -> SolveOutcome:
    """Feasibility of a star-shaped instance at horizon tau."""
    g = instance.graph
    tau = g.tau
    center = center_of_star(g)
    if not instance.paths:
        return SolveOutcome("feasible", Temporalization.of(tau, []), 0)

    cap_center = g.capacity(center)
    if cap_center is not None:
        max_d = max(c.deadline for c in g.connections)
        if len(instance.paths) > cap_center * max_d:
            # each path occupies the center for at least one step before max_d
            return SolveOutcome("infeasible", None, 0)

    pvars = [_PathVars(instance, pidx, center) for pidx in range(len(instance.paths))]
    dep_taken = set()  # (cidx, rev, t)
    edge_times = {}  # cidx -> list of (rev, t) over undirected edges
    counts = {}  # (vertex, t) -> paths present
    chosen = [None] * len(pvars)
    nodes = 0

    def place(pv, a, b):
        deps, occ = pv.assignments(a, b)
        placed_deps = []
        placed_edges = []
        placed_counts = []
        ok = True
        for (u, v, conn, cidx, rev), t in zip(pv.hops, deps):
            key = (cidx, rev, t)
            if key in dep_taken:
                ok = False
                break
            dep_taken.add(key)
            placed_deps.append(key)
            if conn.kind == EDGE:
                gap = max(1, conn.theta)
                prior = edge_times.setdefault(cidx, [])
                if any(r != rev and abs(t - t2) < gap for r, t2 in prior):
                    ok = False
                    break
                prior.append((rev, t))
                placed_edges.append(cidx)
        if ok:
            for v, lo, hi in occ:
                cap = g.capacity(v)
                for t in range(lo, hi + 1):
                    k = (v, t)
                    counts[k] = counts.get(k, 0) + 1
                    placed_counts.append(k)
                    if cap is not None and counts[k] > cap:
                        ok = False
                        break
                if not ok:
                    break
        if ok:
            return placed_deps, placed_edges, placed_counts
        # roll back the partial placement
        for k in placed_counts:
            counts[k] -= 1
        for key in placed_deps:
            dep_taken.remove(key)
        for cidx in placed_edges:
            edge_times[cidx].pop()
        return None

    def unplace(undo):
        placed_deps, placed_edges, placed_counts = undo
        for k in placed_counts:
            counts[k] -= 1
        for key in placed_deps:
            dep_taken.remove(key)
        for cidx in placed_edges:
            edge_times[cidx].pop()

    def search(idx):
        nonlocal nodes
        if idx == len(pvars):
            return True
        pv = pvars[idx]
        if pv.kind == "through":
            lo_a, hi_a = pv.a_dom
            for a in range(lo_a, hi_a + 1):
                for b in range(a, pv.b_cap + 1):
                    nodes += 1
                    if nodes > node_budget:
                        raise BudgetExceededError(f"star search exceeded {node_budget} nodes")
                    undo = place(pv, a, b)
                    if undo is None:
                        continue
                    chosen[idx] = (a, b)
                    if search(idx + 1):
                        return True
                    unplace(undo)
        elif pv.kind == "into":
            lo_a, hi_a = pv.a_dom
            for a in range(lo_a, hi_a + 1):
                nodes += 1
                if nodes > node_budget:
                    raise BudgetExceededError(f"star search exceeded {node_budget} nodes")
                undo = place(pv, a, None)
                if undo is None:
                    continue
                chosen[idx] = (a, None)
                if search(idx + 1):
                    return True
                unplace(undo)
        else:
            lo_b, hi_b = pv.b_dom
            for b in range(lo_b, hi_b + 1):
                nodes += 1
                if nodes > node_budget:
                    raise BudgetExceededError(f"star search exceeded {node_budget} nodes")
                undo = place(pv, None, b)
                if undo is None:
                    continue
                chosen[idx] = (None, b)
                if search(idx + 1):
                    return True
                unplace(undo)
        return False

    if not search(0):
        return SolveOutcome("infeasible", None, nodes)

    departures = []
    for pv, ab in zip(pvars, chosen):
        deps, _ = pv.assignments(*ab)
        departures.append(deps)
    pi = Temporalization.of(tau, departures)
    diag = validate(instance, pi)
    assert diag.ok, f"star solver produced an invalid witness: {diag.violations[:3]}"
    return SolveOutcome("feasible", pi, nodes)

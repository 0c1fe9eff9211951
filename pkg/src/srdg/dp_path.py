"""Dynamic program for path-shaped decaying graphs.

Sweeps the graph left to right; a frontier state at index i fixes the
arrival times rho at vertex i for paths heading right and the departure
times lambda for paths heading left.  States extend index by index under
the nine transition conditions (arrival chaining, deadlines, departure
distinctness, head-on separation, single-capacity meets, and an interval
capacity check at the vertex being left behind).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ResourceLimitError, ShapeError
from .exact import SolveOutcome
from .model import (
    EDGE,
    DecayingGraph,
    Instance,
    Temporalization,
    max_simultaneous,
    shape,
    validate,
    vertex_load,
)

DEFAULT_MAX_STATES = 400_000


def path_order(graph: DecayingGraph) -> list:
    """Vertices of a path-shaped graph left to right, smaller endpoint first."""
    if shape(graph) != "path":
        raise ShapeError("graph is not path-shaped")
    adj = {v: set() for v in graph.vertices}
    for pair in graph.underlying_edges():
        u, w = tuple(pair)
        adj[u].add(w)
        adj[w].add(u)
    if len(graph.vertices) == 1:
        return list(graph.vertices)
    ends = sorted(v for v in graph.vertices if len(adj[v]) == 1)
    order = [ends[0]]
    prev = None
    while len(order) < len(graph.vertices):
        nxt = [w for w in adj[order[-1]] if w != prev]
        prev = order[-1]
        order.append(nxt[0])
    return order


class _Layout:
    """Positions, per-path endpoints, and per-gap connections."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.order = path_order(instance.graph)
        self.pos = {v: i + 1 for i, v in enumerate(self.order)}  # 1-based
        self.n = len(self.order)
        self.span = {}  # pidx -> (j, k) positions of source and sink
        for pidx, p in enumerate(instance.paths):
            self.span[pidx] = (self.pos[p.source], self.pos[p.sink])

    def rightward(self, pidx) -> bool:
        j, k = self.span[pidx]
        return j < k

    def arriving(self, i) -> list:
        """R_i: paths that arrive at vertex i (sorted)."""
        out = []
        for pidx, (j, k) in self.span.items():
            if j < k and j < i <= k:
                out.append(pidx)
        return sorted(out)

    def departing(self, i) -> list:
        """L_i: paths that depart from vertex i heading left (sorted)."""
        out = []
        for pidx, (j, k) in self.span.items():
            if j > k and k < i <= j:
                out.append(pidx)
        return sorted(out)

    def right_conn(self, i):
        """Connection used left-to-right between vertices i and i+1."""
        u, w = self.order[i - 1], self.order[i]
        if self.instance.graph.traversable(u, w):
            return self.instance.graph.hop_connection(u, w)[0]
        return None

    def left_conn(self, i):
        u, w = self.order[i - 1], self.order[i]
        if self.instance.graph.traversable(w, u):
            return self.instance.graph.hop_connection(w, u)[0]
        return None

    def same_edge_gap(self, i) -> bool:
        rc, lc = self.right_conn(i), self.left_conn(i)
        return rc is not None and rc is lc and rc.kind == EDGE


@dataclass(frozen=True)
class FrontierState:
    """rho: arrival times of R_i, lam: departure times of L_i, at index i."""

    index: int
    rho: tuple  # sorted ((pidx, time), ...)
    lam: tuple

    @staticmethod
    def of(index, rho_map, lam_map) -> "FrontierState":
        return FrontierState(
            index, tuple(sorted(rho_map.items())), tuple(sorted(lam_map.items()))
        )

    def rho_map(self) -> dict:
        return dict(self.rho)

    def lam_map(self) -> dict:
        return dict(self.lam)


@dataclass
class Restriction:
    """Instance truncated to the first i path-graph vertices."""

    index: int
    vertices: list
    paths: dict  # pidx -> truncated vertex tuple
    arriving: frozenset
    departing: frozenset


def restrict(instance: Instance, i: int) -> Restriction:
    """Paths with at least two vertices among the first i, truncated there."""
    layout = _Layout(instance)
    if not 1 <= i <= layout.n:
        raise ValueError(f"index {i} outside 1..{layout.n}")
    paths = {}
    for pidx, path in enumerate(instance.paths):
        j, k = layout.span[pidx]
        if j < k and j < i:  # rightward, source strictly inside
            hi = min(k, i)
            paths[pidx] = tuple(layout.order[j - 1 : hi])
        elif j > k and k < i:  # leftward
            lo = min(i, j)
            paths[pidx] = tuple(reversed(layout.order[k - 1 : lo]))
    return Restriction(
        index=i,
        vertices=layout.order[:i],
        paths=paths,
        arriving=frozenset(layout.arriving(i)),
        departing=frozenset(layout.departing(i)),
    )


def _occupancy_cases(layout, i, r_here, r_next, l_here, l_next, rho, lam, rho_n, lam_n):
    """S_i intervals at vertex i for every path through it (six cases)."""
    rc, lc = layout.right_conn(i), layout.left_conn(i)
    out = []
    for pidx in layout.instance.paths_through(layout.order[i - 1]):
        if pidx in r_here and pidx in r_next:
            out.append((rho[pidx], rho_n[pidx] - rc.theta))
        elif pidx in l_here and pidx in l_next:
            out.append((lam_n[pidx] + lc.theta, lam[pidx]))
        elif pidx in r_here:
            out.append((rho[pidx], rho[pidx]))
        elif pidx in r_next:
            t = rho_n[pidx] - rc.theta
            out.append((t, t))
        elif pidx in l_here:
            out.append((lam[pidx], lam[pidx]))
        elif pidx in l_next:
            t = lam_n[pidx] + lc.theta
            out.append((t, t))
    return out


def transition_ok(instance: Instance, state: FrontierState, nxt: FrontierState) -> bool:
    """Check the nine conditions between consecutive frontier states."""
    layout = _Layout(instance)
    i = state.index
    if nxt.index != i + 1 or not 1 <= i < layout.n:
        raise ValueError("states must sit at consecutive indices")
    r_here, l_here = set(layout.arriving(i)), set(layout.departing(i))
    r_next, l_next = set(layout.arriving(i + 1)), set(layout.departing(i + 1))
    rho, lam = state.rho_map(), state.lam_map()
    rho_n, lam_n = nxt.rho_map(), nxt.lam_map()
    if set(rho) != r_here or set(lam) != l_here:
        raise ValueError(f"state at {i} does not cover R_{i}/L_{i}")
    if set(rho_n) != r_next or set(lam_n) != l_next:
        raise ValueError(f"state at {i + 1} does not cover R_{i + 1}/L_{i + 1}")
    g = instance.graph
    tau = g.tau
    rc, lc = layout.right_conn(i), layout.left_conn(i)

    for ts in (rho, lam, rho_n, lam_n):
        if any(not 1 <= t <= tau for t in ts.values()):
            return False
    # (1) arrivals chain rightward; (3) deadline of the rightward connection
    for p in r_next:
        if rho_n[p] - rc.theta < 1 or rho_n[p] > rc.deadline:
            return False
        if p in r_here and rho[p] > rho_n[p] - rc.theta:
            return False
    # (2) departures chain leftward; (4) deadline of the leftward connection
    for p in l_next:
        if lam_n[p] + lc.theta > lc.deadline:
            return False
        if p in l_here and lam[p] < lam_n[p] + lc.theta:
            return False
    # (5)/(6) distinct arrivals and departures
    if len(set(rho_n.values())) != len(rho_n) or len(set(lam_n.values())) != len(lam_n):
        return False
    # (7) head-on separation over one undirected edge
    if layout.same_edge_gap(i):
        gap = max(1, rc.theta)
        for p in r_next:
            for q in l_next:
                if abs(rho_n[p] - rc.theta - lam_n[q]) < gap:
                    return False
    # (8) a capacity-one right endpoint cannot host a meet
    if g.capacity(layout.order[i]) == 1:
        meet = set(rho_n.values()) & set(lam_n.values())
        if meet:
            return False
    # (9) interval capacity at the vertex being left behind
    cap = g.capacity(layout.order[i - 1])
    if cap is not None:
        intervals = _occupancy_cases(
            layout, i, r_here, r_next, l_here, l_next, rho, lam, rho_n, lam_n
        )
        if any(lo > hi for lo, hi in intervals):
            return False
        if intervals and max_simultaneous(intervals) > cap:
            return False
    return True


@dataclass
class DpTable:
    """Reached frontier states per index, with back-pointers."""

    layers: list = field(default_factory=list)  # index -> {state key: predecessor key}

    def layer_sizes(self) -> list:
        return [len(layer) for layer in self.layers]


def solve_path_dp(
    instance: Instance, max_states: int = DEFAULT_MAX_STATES, collect_table: bool = False
):
    """Feasibility of a path-shaped instance via the frontier DP.

    Returns a SolveOutcome whose witness schedule has been re-validated.
    Raises ResourceLimitError when a layer outgrows max_states.
    """
    g = instance.graph
    layout = _Layout(instance)
    tau = g.tau
    table = DpTable() if collect_table else None

    def ret(outcome):
        return (outcome, table) if collect_table else outcome

    if not instance.paths:
        return ret(SolveOutcome("feasible", Temporalization.of(tau, []), 0))
    if vertex_load(instance) > 4 * tau:
        # at most four paths can arrive or depart per time step at a vertex
        return ret(SolveOutcome("infeasible", None, 0))

    # layer 1: empty frontier
    current = {((), ()): None}
    chain = [current]
    nodes = 0

    for i in range(1, layout.n):
        r_here, l_here = layout.arriving(i), layout.departing(i)
        r_next, l_next = layout.arriving(i + 1), layout.departing(i + 1)
        rc, lc = layout.right_conn(i), layout.left_conn(i)
        v_here = layout.order[i - 1]
        v_next = layout.order[i]
        cap_here = g.capacity(v_here)
        cap_next_one = g.capacity(v_next) == 1
        edge_gap = layout.same_edge_gap(i)
        through_here = instance.paths_through(v_here)
        nxt_layer = {}

        for key, _pred in current.items():
            rho = dict(key[0])
            lam = dict(key[1])

            counts = [0] * (tau + 2)

            def add_interval(lo, hi, undo):
                if lo > hi:
                    return False
                for t in range(lo, hi + 1):
                    counts[t] += 1
                    undo.append(t)
                    if cap_here is not None and counts[t] > cap_here:
                        return False
                return True

            base_undo = []
            base_ok = True
            fixed = []  # paths at v_i fully decided by the predecessor
            for pidx in through_here:
                if pidx in rho and pidx not in r_next:
                    fixed.append((rho[pidx], rho[pidx]))
                elif pidx in lam and pidx not in l_next:
                    fixed.append((lam[pidx], lam[pidx]))
            for lo, hi in fixed:
                if not add_interval(lo, hi, base_undo):
                    base_ok = False
                    break
            if not base_ok:
                for t in base_undo:
                    counts[t] -= 1
                continue

            # domains under (1)-(4)
            r_domains = []
            for pidx in r_next:
                lo = 1 + rc.theta
                if pidx in rho:
                    lo = max(lo, rho[pidx] + rc.theta)
                hi = min(tau, rc.deadline)
                r_domains.append((pidx, lo, hi))
            l_domains = []
            for pidx in l_next:
                hi = min(tau, lc.deadline - lc.theta)
                if pidx in lam:
                    hi = min(hi, lam[pidx] - lc.theta)
                l_domains.append((pidx, 1, hi))

            rho_n = {}
            lam_n = {}

            def emit():
                skey = (tuple(sorted(rho_n.items())), tuple(sorted(lam_n.items())))
                if skey not in nxt_layer:
                    nxt_layer[skey] = key
                    if len(nxt_layer) > max_states:
                        raise ResourceLimitError(
                            f"frontier layer at index {i + 1} exceeded {max_states} states"
                        )

            def choose_l(idx):
                nonlocal nodes
                if idx == len(l_domains):
                    emit()
                    return
                pidx, lo, hi = l_domains[idx]
                in_l_here = pidx in lam
                for t in range(lo, hi + 1):
                    nodes += 1
                    if t in lam_n.values():
                        continue  # (6)
                    if edge_gap:
                        gap = max(1, rc.theta)
                        if any(abs(rv - rc.theta - t) < gap for rv in rho_n.values()):
                            continue  # (7)
                    if cap_next_one and t in rho_n.values():
                        continue  # (8)
                    # close this path's interval at v_i
                    if in_l_here:
                        lo_i, hi_i = t + lc.theta, lam[pidx]
                    else:
                        lo_i = hi_i = t + lc.theta
                    undo = []
                    if add_interval(lo_i, hi_i, undo):
                        lam_n[pidx] = t
                        choose_l(idx + 1)
                        del lam_n[pidx]
                    for s in undo:
                        counts[s] -= 1

            def choose_r(idx):
                nonlocal nodes
                if idx == len(r_domains):
                    choose_l(0)
                    return
                pidx, lo, hi = r_domains[idx]
                in_r_here = pidx in rho
                for t in range(lo, hi + 1):
                    nodes += 1
                    if t in rho_n.values():
                        continue  # (5)
                    if in_r_here:
                        lo_i, hi_i = rho[pidx], t - rc.theta
                    else:
                        lo_i = hi_i = t - rc.theta
                    undo = []
                    if add_interval(lo_i, hi_i, undo):
                        rho_n[pidx] = t
                        choose_r(idx + 1)
                        del rho_n[pidx]
                    for s in undo:
                        counts[s] -= 1

            choose_r(0)
            for t in base_undo:
                counts[t] -= 1

        if table is not None:
            table.layers.append(dict(nxt_layer))
        if not nxt_layer:
            return ret(SolveOutcome("infeasible", None, nodes))
        chain.append(nxt_layer)
        current = nxt_layer

    # accepting states: re-check occupancy at the last vertex
    v_last = layout.order[-1]
    cap_last = g.capacity(v_last)
    winner = None
    for key in current:
        times = [t for _, t in key[0]] + [t for _, t in key[1]]
        if cap_last is not None and times:
            per = {}
            for t in times:
                per[t] = per.get(t, 0) + 1
            if max(per.values()) > cap_last:
                continue
        winner = key
        break

    if winner is None:
        return ret(SolveOutcome("infeasible", None, nodes))

    # back-pointer walk, then read the schedule off the state chain
    states = [None] * (layout.n + 1)
    key = winner
    for i in range(layout.n, 0, -1):
        states[i] = key
        key = chain[i - 1][key]
    departures = []
    for pidx, path in enumerate(instance.paths):
        j, k = layout.span[pidx]
        times = []
        if j < k:
            for m in range(j, k):
                rho_m = dict(states[m + 1][0])
                times.append(rho_m[pidx] - layout.right_conn(m).theta)
        else:
            for m in range(j, k, -1):
                lam_m = dict(states[m][1])
                times.append(lam_m[pidx])
        departures.append(times)
    pi = Temporalization.of(tau, departures)
    diag = validate(instance, pi)
    assert diag.ok, f"dp produced an invalid witness: {diag.violations[:3]}"
    return ret(SolveOutcome("feasible", pi, nodes))

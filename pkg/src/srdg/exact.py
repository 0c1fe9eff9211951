"""Exhaustive solvers: the reference oracle for everything else.

brute_force_feasible runs a pruned depth-first search over hop departure
times; min_slack_oracle scans slack values 0, 1, 2, ... until the search
succeeds.  Both are meant for desk-scale instances and double as the ground
truth in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import BudgetExceededError
from .model import EDGE, Instance, Temporalization

DEFAULT_NODE_BUDGET = 10_000_000


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # "feasible" | "infeasible"
    schedule: Optional[Temporalization]
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass(frozen=True)
class OptimizeOutcome:
    d_star: int
    schedule: Temporalization
    relaxation: Optional[float] = None


def slack_upper_bound(instance: Instance) -> int:
    """Slack that always suffices: schedule paths one after another.

    Bounded by the number of paths times the largest independent travel
    time 1 + sum(theta) of any single path.
    """
    if not instance.paths:
        return 0
    longest = max(
        1 + sum(instance.hop_theta(u, v) for u, v in p.hops()) for p in instance.paths
    )
    return len(instance.paths) * longest


def brute_force_feasible(
    instance: Instance, slack: int = 0, node_budget: int = DEFAULT_NODE_BUDGET
) -> SolveOutcome:
    """Exhaustive feasibility check with incremental pruning.

    Searches hop departures path-major (paths ordered by source id, then
    length), pruning on adequacy, departure clashes, head-on separation,
    and capacity of completed occupancy intervals.  Raises
    BudgetExceededError when the node budget runs out: that is an explicit
    failure, never a verdict.
    """
    g = instance.graph
    horizon = g.tau + slack
    if not instance.paths:
        return SolveOutcome("feasible", Temporalization.of(horizon, []), 0)

    order = sorted(
        range(len(instance.paths)),
        key=lambda i: (instance.paths[i].source, len(instance.paths[i]), i),
    )
    # flat variable list: (path, hop position, u, v, conn idx, reversed, theta,
    #                      deadline, gap for head-on, completes: [(vertex, kind)])
    variables = []
    for pidx in order:
        path = instance.paths[pidx]
        hops = path.hops()
        for i, (u, v) in enumerate(hops):
            conn, cidx, rev = g.hop_connection(u, v)
            completes = []
            if i == 0:
                completes.append(("source", path.vertices[0]))
            if i >= 1:
                completes.append(("inner", path.vertices[i]))
            if i == len(hops) - 1:
                completes.append(("sink", path.vertices[-1]))
            variables.append(
                {
                    "pidx": pidx,
                    "hop": i,
                    "conn": conn,
                    "cidx": cidx,
                    "rev": rev,
                    "gap": max(1, conn.theta) if conn.kind == EDGE else None,
                    "completes": completes,
                }
            )

    assignment = {}  # (pidx, hop) -> departure
    dep_taken = set()  # (cidx, rev, t)
    edge_times = {}  # (cidx, rev) -> list of times, for head-on checks
    cap_count = {}  # (vertex, t) -> located paths
    nodes = 0

    def occupancy_interval(var, t):
        pidx, i = var["pidx"], var["hop"]
        out = []
        for kind, v in var["completes"]:
            if kind == "source":
                out.append((v, t, t))
            elif kind == "inner":
                prev = assignment[(pidx, i - 1)]
                arr = prev + instance.hop_theta(*instance.paths[pidx].hops()[i - 1])
                out.append((v, arr, t))
            else:  # sink
                arr = t + var["conn"].theta
                out.append((v, arr, arr))
        return out

    def try_place(var, t):
        """Apply assignment var=t; return undo list or None if pruned."""
        conn = var["conn"]
        key = (var["cidx"], var["rev"], t)
        if key in dep_taken:
            return None
        if var["gap"] is not None:
            for t2 in edge_times.get((var["cidx"], not var["rev"]), ()):
                if abs(t - t2) < var["gap"]:
                    return None
        increments = []
        ok = True
        for v, lo, hi in occupancy_interval(var, t):
            cap = g.capacity(v)
            for step in range(lo, hi + 1):
                cap_count[(v, step)] = cap_count.get((v, step), 0) + 1
                increments.append((v, step))
                if cap is not None and cap_count[(v, step)] > cap:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            for v, step in increments:
                cap_count[(v, step)] -= 1
            return None
        dep_taken.add(key)
        edge_times.setdefault((var["cidx"], var["rev"]), []).append(t)
        return increments

    def undo(var, t, increments):
        dep_taken.discard((var["cidx"], var["rev"], t))
        edge_times[(var["cidx"], var["rev"])].pop()
        for v, step in increments:
            cap_count[(v, step)] -= 1

    def search(k):
        nonlocal nodes
        if k == len(variables):
            return True
        var = variables[k]
        pidx, i = var["pidx"], var["hop"]
        conn = var["conn"]
        if i == 0:
            lo = 1
        else:
            prev = assignment[(pidx, i - 1)]
            lo = prev + instance.hop_theta(*instance.paths[pidx].hops()[i - 1])
        hi = min(horizon, conn.deadline + slack - conn.theta)
        for t in range(max(1, lo), hi + 1):
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"brute force exceeded {node_budget} nodes"
                )
            increments = try_place(var, t)
            if increments is None:
                continue
            assignment[(pidx, i)] = t
            if search(k + 1):
                return True
            del assignment[(pidx, i)]
            undo(var, t, increments)
        return False

    if search(0):
        departures = [
            [assignment[(pidx, i)] for i in range(len(instance.paths[pidx]))]
            for pidx in range(len(instance.paths))
        ]
        return SolveOutcome("feasible", Temporalization.of(horizon, departures), nodes)
    return SolveOutcome("infeasible", None, nodes)


def min_slack_oracle(
    instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET
) -> OptimizeOutcome:
    """Smallest slack d* admitting a valid temporalization, by linear scan.

    Scans d* = 0, 1, 2, ... and stops at the first feasible value; asserts
    the sequential-schedule upper bound before giving up.
    """
    bound = slack_upper_bound(instance)
    for s in range(bound + 1):
        outcome = brute_force_feasible(instance, slack=s, node_budget=node_budget)
        if outcome.feasible:
            return OptimizeOutcome(d_star=s, schedule=outcome.schedule)
    raise AssertionError(
        f"no feasible slack up to the sequential bound {bound}; "
        "the bound argument is violated"
    )

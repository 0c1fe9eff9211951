"""Big-M integer program for routing feasibility and minimum deadline slack.

One integer variable per path hop holds its departure time.  Order
binaries linearize the pairwise departure-separation disjunctions, and
per-vertex indicator triples count how many paths occupy a vertex when
another one arrives, which bounds the peak load by the capacity.
Models are exported as LP text and solved through an external command.
"""

from __future__ import annotations

import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BackendError, BackendInfeasibleError
from .exact import OptimizeOutcome, SolveOutcome, slack_upper_bound
from .model import EDGE, Instance, Temporalization, validate


def greedy_coloring(instance: Instance) -> list:
    """First-fit partition of paths into classes with disjoint vertex sets."""
    colors = []  # (vertex set, member path indices)
    for pidx, path in enumerate(instance.paths):
        vs = set(path.vertices)
        for cset, members in colors:
            if not (cset & vs):
                members.append(pidx)
                cset |= vs
                break
        else:
            colors.append((set(vs), [pidx]))
    return [members for _, members in colors]


def _travel_span(instance: Instance, pidx: int) -> int:
    """1 + total traversal time of the path: steps of a no-wait run."""
    return 1 + sum(instance.hop_theta(u, v) for u, v in instance.paths[pidx].hops())


def compute_big_m(instance: Instance) -> int:
    """Sum over color classes of the slowest member's no-wait span."""
    return sum(
        max(_travel_span(instance, p) for p in members)
        for members in greedy_coloring(instance)
    )


def warm_start_no_wait(instance: Instance):
    """No-wait schedule from step 1 plus its largest deadline violation."""
    departures = []
    worst = 0
    for path in instance.paths:
        t = 1
        times = []
        for u, v in path.hops():
            times.append(t)
            worst = max(worst, t + instance.hop_theta(u, v) - instance.hop_deadline(u, v))
            t += instance.hop_theta(u, v)
        departures.append(times)
    violation = max(0, worst)
    pi = Temporalization.of(instance.graph.tau + violation, departures)
    return pi, violation


@dataclass
class MilpModel:
    instance: Instance
    mode: str  # "feasibility" | "min_slack"
    big_M: int
    horizon: int
    slack_ub: int
    variables: dict = field(default_factory=dict)  # name -> (lo, hi, "int"|"bin")
    var_order: list = field(default_factory=list)
    constraints: list = field(default_factory=list)  # (name, [(coef, var)], sense, rhs)
    objective: str | None = None  # None | "dstar"
    x_name: dict = field(default_factory=dict)  # (pidx, hop) -> variable name
    fixed: dict = field(default_factory=dict)  # pidx -> tuple of departure times

    def add_var(self, name, lo, hi, kind):
        if name in self.variables:
            raise ValueError(f"duplicate variable {name}")
        self.variables[name] = (lo, hi, kind)
        self.var_order.append(name)
        return name

    def add_con(self, name, terms, sense, rhs):
        merged = {}
        for coef, var in terms:
            merged[var] = merged.get(var, 0) + coef
        clean = tuple((c, v) for v, c in merged.items() if c != 0)
        if not clean:
            raise ValueError(f"constraint {name} reduced to a constant row")
        self.constraints.append((name, clean, sense, rhs))

    def declared(self, name):
        return name in self.variables


def _expr_sub(a, b):
    """Difference of two affine expressions (terms, const)."""
    terms = list(a[0]) + [(-c, v) for c, v in b[0]]
    return terms, a[1] - b[1]


def _path_hops(instance, pidx):
    g = instance.graph
    out = []
    for u, v in instance.paths[pidx].hops():
        conn, cidx, rev = g.hop_connection(u, v)
        out.append((u, v, conn, cidx, rev))
    return out


def _fixed_window(instance, pidx):
    """(earliest, latest) departures per hop under chaining and deadlines."""
    hops = instance.paths[pidx].hops()
    n = len(hops)
    thetas = [instance.hop_theta(u, v) for u, v in hops]
    dls = [instance.hop_deadline(u, v) for u, v in hops]
    earliest = [0] * n
    latest = [0] * n
    earliest[0] = 1
    for h in range(1, n):
        earliest[h] = earliest[h - 1] + thetas[h - 1]
    latest[n - 1] = dls[n - 1] - thetas[n - 1]
    for h in range(n - 2, -1, -1):
        latest[h] = min(dls[h] - thetas[h], latest[h + 1] - thetas[h])
    return earliest, latest


def _occupancy_expr(instance, pidx, v, x_of):
    """(arrival expr, departure expr) of a path at one of its vertices."""
    path = instance.paths[pidx]
    hops = list(path.hops())
    i = path.vertices.index(v)
    g = instance.graph
    if i == 0:
        x = x_of(pidx, 0)
        return ([(1, x)], 0), ([(1, x)], 0)
    theta_in = g.hop_connection(*hops[i - 1])[0].theta
    arr = ([(1, x_of(pidx, i - 1))], theta_in)
    if i == len(path.vertices) - 1:
        return arr, arr
    return arr, ([(1, x_of(pidx, i))], 0)


def _const_occupancy(instance, pidx, v, times):
    """Concrete occupancy interval of a fixed path at one of its vertices."""
    path = instance.paths[pidx]
    i = path.vertices.index(v)
    g = instance.graph
    if i == 0:
        return times[0], times[0]
    theta_in = g.hop_connection(*list(path.hops())[i - 1])[0].theta
    arr = times[i - 1] + theta_in
    if i == len(path.vertices) - 1:
        return arr, arr
    return arr, times[i]


def build_milp(instance: Instance, mode: str = "feasibility", fold_fixed: bool = False) -> MilpModel:
    """Assemble the model; fold_fixed pre-solves bound-forced paths as constants."""
    if mode not in ("feasibility", "min_slack"):
        raise ValueError(f"unknown mode {mode!r}")
    if fold_fixed and mode != "feasibility":
        raise ValueError("constant folding applies to feasibility mode only")
    g = instance.graph
    tau = g.tau
    slack_ub = slack_upper_bound(instance) if mode == "min_slack" else 0
    horizon = tau + slack_ub
    theta_max = max((c.theta for c in g.connections), default=0)
    big_m = max(compute_big_m(instance) + slack_ub, horizon + max(1, theta_max))
    model = MilpModel(instance, mode, big_m, horizon, slack_ub)
    conflict = []  # becomes non-empty when constants alone are contradictory

    def mark_conflict():
        if not conflict:
            conflict.append(True)
            model.add_var("conflict", 0, 1, "int")
            model.add_con("conflict_lo", [(1, "conflict")], ">=", 1)
            model.add_con("conflict_hi", [(1, "conflict")], "<=", 0)

    # split paths into variable and constant-folded ones
    for pidx in range(len(instance.paths)):
        if fold_fixed:
            earliest, latest = _fixed_window(instance, pidx)
            if any(e > l for e, l in zip(earliest, latest)):
                mark_conflict()
                model.fixed[pidx] = tuple(earliest)
                continue
            if earliest == latest:
                model.fixed[pidx] = tuple(earliest)
                continue
        for h in range(len(instance.paths[pidx])):
            name = model.add_var(f"x_P{pidx}_h{h}", 1, horizon, "int")
            model.x_name[(pidx, h)] = name

    if mode == "min_slack":
        model.add_var("dstar", 0, slack_ub, "int")
        model.objective = "dstar"

    M = model.big_M

    def x_expr(pidx, h):
        if pidx in model.fixed:
            return [], model.fixed[pidx][h]
        return [(1, model.x_name[(pidx, h)])], 0

    # chaining and deadlines for variable paths
    for pidx in range(len(instance.paths)):
        if pidx in model.fixed:
            continue
        hops = _path_hops(instance, pidx)
        for h, (u, v, conn, cidx, rev) in enumerate(hops):
            if h + 1 < len(hops):
                model.add_con(
                    f"chain_p{pidx}_h{h}",
                    [(1, model.x_name[(pidx, h)]), (-1, model.x_name[(pidx, h + 1)])],
                    "<=",
                    -conn.theta,
                )
            if mode == "min_slack":
                model.add_con(
                    f"dl_p{pidx}_h{h}",
                    [(1, model.x_name[(pidx, h)]), (-1, "dstar")],
                    "<=",
                    conn.deadline - conn.theta,
                )
            else:
                model.add_con(
                    f"dl_p{pidx}_h{h}",
                    [(1, model.x_name[(pidx, h)])],
                    "<=",
                    conn.deadline - conn.theta,
                )

    def add_separation(bin_name, expr_a, expr_b, k):
        """|a - b| >= k via one order binary; constants folded into the rhs."""
        terms_ab, const_ab = _expr_sub(expr_a, expr_b)
        if not terms_ab:
            if abs(const_ab) < k:
                mark_conflict()
            return
        model.add_var(bin_name, 0, 1, "bin")
        model.add_con(f"{bin_name}_1", terms_ab + [(M, bin_name)], ">=", k - const_ab)
        terms_ba, const_ba = _expr_sub(expr_b, expr_a)
        model.add_con(f"{bin_name}_2", terms_ba + [(-M, bin_name)], ">=", k - M - const_ba)

    # departure separation: same connection and direction, and head-on
    users = {}  # (cidx, rev) -> [(pidx, hop)]
    for pidx in range(len(instance.paths)):
        for h, (u, v, conn, cidx, rev) in enumerate(_path_hops(instance, pidx)):
            users.setdefault((cidx, rev), []).append((pidx, h))
    for cidx in range(len(g.connections)):
        for rev in (False, True):
            same = sorted(users.get((cidx, rev), []))
            tag = "r" if rev else "f"
            for a in range(len(same)):
                for b in range(a + 1, len(same)):
                    (pi, hi), (qi, hj) = same[a], same[b]
                    add_separation(
                        f"o_c{cidx}{tag}_p{pi}_q{qi}", x_expr(pi, hi), x_expr(qi, hj), 1
                    )
        conn = g.connections[cidx]
        if conn.kind == EDGE:
            fwd = sorted(users.get((cidx, False), []))
            bwd = sorted(users.get((cidx, True), []))
            k = max(1, conn.theta)
            for pi, hi in fwd:
                for qi, hj in bwd:
                    add_separation(
                        f"h_c{cidx}_p{pi}_q{qi}", x_expr(pi, hi), x_expr(qi, hj), k
                    )

    # vertex occupancy counting
    def x_of(pidx, h):
        return model.x_name[(pidx, h)]

    def add_triple(a_name, b_name, g_name, arr_p, arr_q, dep_q, tag):
        model.add_var(a_name, 0, 1, "bin")
        model.add_var(b_name, 0, 1, "bin")
        model.add_var(g_name, 0, 1, "bin")
        terms, const = _expr_sub(arr_p, arr_q)
        model.add_con(f"arr_{tag}", terms + [(M, a_name)], "<=", M - 1 - const)
        terms, const = _expr_sub(arr_p, dep_q)
        model.add_con(f"dep_{tag}", terms + [(-M, b_name)], ">=", 1 - M - const)
        model.add_con(f"one_{tag}", [(1, a_name), (1, b_name), (1, g_name)], "=", 1)

    for v in g.vertices:
        vi = g.vertex_index(v)
        plist = sorted(instance.paths_through(v))
        cap = g.capacity(v)
        var_paths = [p for p in plist if p not in model.fixed]
        fixed_paths = [p for p in plist if p in model.fixed]
        if fold_fixed and cap is None:
            continue  # no capacity row, indicators would be dead weight
        # distinct constant intervals with multiplicity
        fixed_intervals = {}
        for q in fixed_paths:
            iv = _const_occupancy(instance, q, v, model.fixed[q])
            fixed_intervals[iv] = fixed_intervals.get(iv, 0) + 1
        distinct = sorted(fixed_intervals)
        for p in var_paths:
            arr_p, _ = _occupancy_expr(instance, p, v, x_of)
            gamma_terms = []
            for q in var_paths:
                arr_q, dep_q = _occupancy_expr(instance, q, v, x_of)
                tag = f"v{vi}_p{p}_q{q}"
                add_triple(f"a_{tag}", f"b_{tag}", f"g_{tag}", arr_p, arr_q, dep_q, tag)
                gamma_terms.append((1, f"g_{tag}"))
            for j, iv in enumerate(distinct):
                tag = f"v{vi}_p{p}_f{j}"
                add_triple(
                    f"a_{tag}", f"b_{tag}", f"g_{tag}",
                    arr_p, ([], iv[0]), ([], iv[1]), tag,
                )
                gamma_terms.append((fixed_intervals[iv], f"g_{tag}"))
            if cap is not None:
                model.add_con(f"cap_v{vi}_p{p}", gamma_terms, "<=", cap)
        # capacity rows seen from each distinct constant arrival time
        arr_times = sorted({iv[0] for iv in fixed_intervals})
        for jj, t_arr in enumerate(arr_times):
            const_cnt = sum(
                mult for iv, mult in fixed_intervals.items() if iv[0] <= t_arr <= iv[1]
            )
            gamma_terms = []
            for q in var_paths:
                arr_q, dep_q = _occupancy_expr(instance, q, v, x_of)
                tag = f"v{vi}_t{jj}_q{q}"
                add_triple(
                    f"a_{tag}", f"b_{tag}", f"g_{tag}",
                    ([], t_arr), arr_q, dep_q, tag,
                )
                gamma_terms.append((1, f"g_{tag}"))
            if cap is not None:
                if not gamma_terms:
                    if const_cnt > cap:
                        mark_conflict()
                    continue
                model.add_con(f"cap_v{vi}_t{jj}", gamma_terms, "<=", cap - const_cnt)

    for name, terms, sense, rhs in model.constraints:
        for coef, var in terms:
            if not model.declared(var):
                raise AssertionError(f"constraint {name} names undeclared {var}")
    return model


def export_lp(model: MilpModel, relax: bool = False) -> str:
    """Deterministic LP text; relax drops the integrality sections."""
    lines = ["Minimize"]
    lines.append(" obj: dstar" if model.objective == "dstar" else " obj: 0")
    lines.append("Subject To")
    for name, terms, sense, rhs in model.constraints:
        parts = []
        for coef, var in terms:
            sign = "-" if coef < 0 else "+"
            parts.append(f"{sign} {abs(coef)} {var}")
        lines.append(f" {name}: {' '.join(parts)} {sense} {rhs}")
    lines.append("Bounds")
    for var in model.var_order:
        lo, hi, _kind = model.variables[var]
        lines.append(f" {lo} <= {var} <= {hi}")
    if not relax:
        generals = [v for v in model.var_order if model.variables[v][2] == "int"]
        if generals:
            lines.append("Generals")
            lines.extend(f" {v}" for v in generals)
        binaries = [v for v in model.var_order if model.variables[v][2] == "bin"]
        if binaries:
            lines.append("Binaries")
            lines.extend(f" {v}" for v in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SolverBackend:
    """External MILP solver invoked as a command with file placeholders."""

    command: str  # template containing {model} and {solution}
    dialect: str = "plain"  # solution file shape: "plain" | "cbc"


def default_backend() -> SolverBackend:
    return SolverBackend(
        command=f"{shlex.quote(sys.executable)} -m srdg.lp_backend {{model}} {{solution}}"
    )


def _parse_solution(text: str, dialect: str):
    values = {}
    status = None
    objective = None
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if dialect == "plain":
        for ln in lines:
            parts = ln.split()
            if parts[0] == "status":
                status = parts[1].lower()
            elif parts[0] == "objective":
                objective = float(parts[1])
            else:
                values[parts[0]] = float(parts[1])
    elif dialect == "cbc":
        if not lines:
            raise BackendError("empty solution file")
        head = lines[0]
        status = head.split()[0].lower()
        if "objective value" in head:
            objective = float(head.rsplit(None, 1)[1])
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) >= 3:
                values[parts[1]] = float(parts[2])
    else:
        raise BackendError(f"unknown solution dialect {dialect!r}")
    if status is None:
        raise BackendError("solution file carries no status line")
    return status, objective, values


def _run_backend(lp_text: str, backend: SolverBackend):
    with tempfile.TemporaryDirectory(prefix="srdg-milp-") as work:
        model_path = Path(work) / "model.lp"
        solution_path = Path(work) / "solution.sol"
        model_path.write_text(lp_text)
        cmd = backend.command.format(model=str(model_path), solution=str(solution_path))
        try:
            proc = subprocess.run(
                shlex.split(cmd), capture_output=True, text=True, timeout=600
            )
        except OSError as exc:
            raise BackendError(f"backend launch failed: {exc}") from exc
        except subprocess.TimeoutExpired as exc:
            raise BackendError("backend timed out") from exc
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip()[-500:]
            raise BackendError(f"backend exited with {proc.returncode}: {tail}")
        if not solution_path.exists():
            raise BackendError("backend produced no solution file")
        return _parse_solution(solution_path.read_text(), backend.dialect)


def _round_int(value: float, what: str) -> int:
    r = round(value)
    if abs(value - r) > 1e-5:
        raise BackendError(f"non-integral value {value} for {what}")
    return int(r)


def _decode_schedule(model: MilpModel, values: dict, d_star: int) -> Temporalization:
    inst = model.instance
    departures = []
    for pidx in range(len(inst.paths)):
        if pidx in model.fixed:
            departures.append(list(model.fixed[pidx]))
        else:
            departures.append(
                [
                    _round_int(values[model.x_name[(pidx, h)]], model.x_name[(pidx, h)])
                    for h in range(len(inst.paths[pidx]))
                ]
            )
    return Temporalization.of(inst.graph.tau + d_star, departures)


def solve_milp(model: MilpModel, backend: SolverBackend | None = None) -> OptimizeOutcome:
    """Solve through the backend, decode, and re-validate the schedule."""
    backend = backend or default_backend()
    status, objective, values = _run_backend(export_lp(model), backend)
    if status != "optimal":
        if status == "infeasible":
            raise BackendInfeasibleError(
                "backend reports infeasible"
                + (" in min-slack mode: modeling bug" if model.mode == "min_slack" else "")
            )
        raise BackendError(f"backend status {status!r}")
    missing = [v for v in model.var_order if v not in values]
    if missing:
        raise BackendError(f"solution misses variables, e.g. {missing[:3]}")
    if model.mode == "min_slack":
        d_star = _round_int(values["dstar"], "dstar")
    else:
        d_star = 0
    pi = _decode_schedule(model, values, d_star)
    diag = validate(model.instance, pi)
    assert diag.ok, f"decoded schedule invalid: {diag.violations[:3]}"
    return OptimizeOutcome(d_star, pi)


def solve_min_slack(instance: Instance, backend: SolverBackend | None = None) -> OptimizeOutcome:
    return solve_milp(build_milp(instance, "min_slack"), backend)


def solve_feasibility(
    instance: Instance, backend: SolverBackend | None = None, fold_fixed: bool = False
) -> SolveOutcome:
    model = build_milp(instance, "feasibility", fold_fixed=fold_fixed)
    try:
        out = solve_milp(model, backend)
    except BackendInfeasibleError:
        return SolveOutcome("infeasible", None, 0)
    return SolveOutcome("feasible", out.schedule, 0)


def solve_relaxation(model: MilpModel, backend: SolverBackend | None = None) -> float:
    """Optimal value of the model with integrality dropped."""
    backend = backend or default_backend()
    status, objective, values = _run_backend(export_lp(model, relax=True), backend)
    if status != "optimal":
        if status == "infeasible":
            raise BackendInfeasibleError("relaxation infeasible: modeling bug")
        raise BackendError(f"backend status {status!r}")
    if model.objective == "dstar":
        return float(values["dstar"])
    return float(objective or 0.0)

"""Bundled LP/MILP solving command.

Reads an LP-format model file, solves it with scipy's HiGHS bindings, and
writes a plain solution file: a status line, an objective line, and one
"name value" pair per variable.  Serves as the default external backend
so the suite works without a separately installed solver.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

_SENSES = ("<=", ">=", "=", "<", ">")


class LpParseError(ValueError):
    pass


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_terms(tokens):
    """Affine expression: [(coef, name), ...] plus the constant part."""
    terms = []
    const = 0.0
    sign = 1.0
    coef = None
    for tok in tokens:
        if tok == "+":
            if coef is not None:
                const += sign * coef
                coef = None
            sign = 1.0
        elif tok == "-":
            if coef is not None:
                const += sign * coef
                coef = None
            sign = -1.0
        elif _is_number(tok):
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = float(tok)
        else:
            terms.append((sign * (1.0 if coef is None else coef), tok))
            sign = 1.0
            coef = None
    if coef is not None:
        const += sign * coef
    return terms, const


def parse_lp(text: str) -> dict:
    objective = []
    obj_const = 0.0
    constraints = []  # (terms, sense, rhs)
    bounds = {}
    integers = set()
    bound_order = []
    section = None
    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()  # strip LP comments
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "maximize", "min", "max"):
            section = "objective"
            continue
        if low in ("subject to", "st", "s.t.", "such that"):
            section = "constraints"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("generals", "general", "integers", "integer"):
            section = "integers"
            continue
        if low in ("binaries", "binary"):
            section = "binaries"
            continue
        if low == "end":
            section = None
            continue
        if section == "objective":
            body = line.split(":", 1)[1] if ":" in line else line
            terms, const = _parse_terms(body.split())
            objective.extend(terms)
            obj_const += const
        elif section == "constraints":
            body = line.split(":", 1)[1] if ":" in line else line
            tokens = body.split()
            sense_pos = [i for i, t in enumerate(tokens) if t in _SENSES]
            if len(sense_pos) != 1:
                raise LpParseError(f"cannot parse constraint: {raw!r}")
            i = sense_pos[0]
            sense = tokens[i].rstrip()
            sense = {"<": "<=", ">": ">="}.get(sense, sense)
            lhs, lc = _parse_terms(tokens[:i])
            rhs_terms, rc = _parse_terms(tokens[i + 1 :])
            if rhs_terms:
                raise LpParseError(f"variables on the right-hand side: {raw!r}")
            if not lhs:
                raise LpParseError(f"constant-only constraint: {raw!r}")
            constraints.append((lhs, sense, rc - lc))
        elif section == "bounds":
            tokens = line.split()
            if len(tokens) == 5 and tokens[1] in ("<=", "<") and tokens[3] in ("<=", "<"):
                name = tokens[2]
                lo, hi = float(tokens[0]), float(tokens[4])
            elif len(tokens) == 3 and tokens[1] in ("<=", "<"):
                name, lo, hi = tokens[0], 0.0, float(tokens[2])
            elif len(tokens) == 3 and tokens[1] in (">=", ">"):
                name, lo, hi = tokens[0], float(tokens[2]), np.inf
            elif len(tokens) == 3 and tokens[1] == "=":
                name = tokens[0]
                lo = hi = float(tokens[2])
            elif len(tokens) == 2 and tokens[1].lower() == "free":
                name, lo, hi = tokens[0], -np.inf, np.inf
            else:
                raise LpParseError(f"cannot parse bound: {raw!r}")
            if name not in bounds:
                bound_order.append(name)
            bounds[name] = (lo, hi)
        elif section in ("integers", "binaries"):
            for name in line.split():
                integers.add(name)
                if section == "binaries" and name not in bounds:
                    bound_order.append(name)
                    bounds[name] = (0.0, 1.0)
        else:
            raise LpParseError(f"content outside any section: {raw!r}")

    var_order = list(bound_order)
    seen = set(var_order)
    for terms, _sense, _rhs in constraints:
        for _c, name in terms:
            if name not in seen:
                seen.add(name)
                var_order.append(name)
    for _c, name in objective:
        if name not in seen:
            seen.add(name)
            var_order.append(name)
    return {
        "objective": objective,
        "obj_const": obj_const,
        "constraints": constraints,
        "bounds": bounds,
        "integers": integers,
        "variables": var_order,
    }


def solve_lp(parsed: dict) -> tuple:
    """Returns (status, objective value, {name: value})."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_array

    names = parsed["variables"]
    n = len(names)
    if n == 0:
        return "optimal", parsed["obj_const"], {}
    index = {name: i for i, name in enumerate(names)}
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    for name, (l, h) in parsed["bounds"].items():
        lo[index[name]] = l
        hi[index[name]] = h
    if np.any(lo > hi):
        return "infeasible", None, {}
    c = np.zeros(n)
    for coef, name in parsed["objective"]:
        c[index[name]] += coef
    integrality = np.array([1 if name in parsed["integers"] else 0 for name in names])

    cons = parsed["constraints"]
    if cons:
        rows, cols, data = [], [], []
        clb = np.empty(len(cons))
        cub = np.empty(len(cons))
        for r, (terms, sense, rhs) in enumerate(cons):
            for coef, name in terms:
                rows.append(r)
                cols.append(index[name])
                data.append(coef)
            if sense == "<=":
                clb[r], cub[r] = -np.inf, rhs
            elif sense == ">=":
                clb[r], cub[r] = rhs, np.inf
            else:
                clb[r], cub[r] = rhs, rhs
        a = coo_array((data, (rows, cols)), shape=(len(cons), n))
        constraints = [LinearConstraint(a, clb, cub)]
    else:
        constraints = []

    res = milp(
        c=c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options={"mip_rel_gap": 0.0},
    )
    if res.status == 0:
        values = {name: float(res.x[i]) for i, name in enumerate(index)}
        return "optimal", float(res.fun) + parsed["obj_const"], values
    if res.status == 2:
        return "infeasible", None, {}
    return f"error_{res.status}", None, {}


def format_solution(status: str, objective, values: dict) -> str:
    lines = [f"status {status}"]
    if objective is not None:
        lines.append(f"objective {objective:.12g}")
    for name, value in values.items():
        lines.append(f"{name} {value:.12g}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="srdg-lp-backend",
        description="Solve an LP-format model and write a plain solution file.",
    )
    parser.add_argument("model", help="LP model file to read")
    parser.add_argument("solution", help="solution file to write")
    args = parser.parse_args(argv)
    try:
        with open(args.model) as fh:
            parsed = parse_lp(fh.read())
    except (OSError, LpParseError) as exc:
        print(f"srdg-lp-backend: {exc}", file=sys.stderr)
        return 2
    status, objective, values = solve_lp(parsed)
    with open(args.solution, "w") as fh:
        fh.write(format_solution(status, objective, values))
    if status.startswith("error"):
        print(f"srdg-lp-backend: solver status {status}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

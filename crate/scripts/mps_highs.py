#!/usr/bin/env python3
"""Solve a free-format MPS file with SciPy's HiGHS MILP interface.

Usage:
    mps_highs.py MODEL.mps          # prints {"status": ..., "objective": ...}
    mps_highs.py --dump MODEL.mps   # prints the parsed matrix as JSON

The reader is written from the format description and handles the subset
emitted by `dsr export-mps`: N/L/G/E rows, COLUMNS, RHS, (empty) RANGES and
BV/FX/LO/UP/MI/PL bounds. Exit code 3 when SciPy is unavailable.
"""

import json
import sys


def parse_mps(text):
    rows = {}  # name -> sense
    row_order = []
    objective_row = None
    cols = {}  # name -> {row: coeff}
    col_order = []
    rhs = {}
    bounds = {}
    binaries = set()
    section = None
    sense = "MIN"
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "OBJSENSE" and len(head) > 1:
                sense = head[1]
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            sense = tok[0]
        elif section == "ROWS":
            kind, name = tok
            if kind == "N":
                if objective_row is None:
                    objective_row = name
            else:
                rows[name] = kind
                row_order.append(name)
        elif section == "COLUMNS":
            name = tok[0]
            if name not in cols:
                cols[name] = {}
                col_order.append(name)
            for r, v in zip(tok[1::2], tok[2::2]):
                cols[name][r] = cols[name].get(r, 0.0) + float(v)
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                rhs[r] = float(v)
        elif section == "RANGES":
            raise ValueError("RANGES entries are not supported")
        elif section == "BOUNDS":
            kind, name = tok[0], tok[2]
            lo, hi = bounds.get(name, (0.0, float("inf")))
            value = float(tok[3]) if len(tok) > 3 else None
            if kind == "BV":
                lo, hi = 0.0, 1.0
                binaries.add(name)
            elif kind == "FX":
                lo = hi = value
            elif kind == "LO":
                lo = value
            elif kind == "UP":
                hi = value
            elif kind == "MI":
                lo = float("-inf")
            elif kind == "PL":
                hi = float("inf")
            else:
                raise ValueError(f"unsupported bound type {kind}")
            bounds[name] = (lo, hi)
    return {
        "sense": sense,
        "objective_row": objective_row,
        "rows": [(r, rows[r], rhs.get(r, 0.0)) for r in row_order],
        "cols": [(c, bounds.get(c, (0.0, float("inf"))), c in binaries) for c in col_order],
        "entries": {c: cols[c] for c in col_order},
    }


def finite(x):
    return x if x not in (float("inf"), float("-inf")) else None


def dump(model):
    out = {
        "rows": [{"name": r, "sense": s, "rhs": b} for r, s, b in model["rows"]],
        "cols": [
            {"name": c, "lower": finite(lo), "upper": finite(hi), "binary": b}
            for c, (lo, hi), b in model["cols"]
        ],
        "objective": {
            c: e[model["objective_row"]]
            for c, e in model["entries"].items()
            if model["objective_row"] in e and e[model["objective_row"]] != 0.0
        },
        "matrix": [
            [r, c, v]
            for c, e in model["entries"].items()
            for r, v in e.items()
            if r != model["objective_row"]
        ],
    }
    print(json.dumps(out))


def solve(model):
    try:
        import numpy as np
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import lil_matrix
    except ImportError:
        print(json.dumps({"status": "unavailable"}))
        sys.exit(3)
    col_index = {c: j for j, (c, _, _) in enumerate(model["cols"])}
    row_index = {r: i for i, (r, _, _) in enumerate(model["rows"])}
    n, m = len(col_index), len(row_index)
    c = np.zeros(n)
    a = lil_matrix((max(m, 1), n))
    for col, entries in model["entries"].items():
        j = col_index[col]
        for r, v in entries.items():
            if r == model["objective_row"]:
                c[j] += v
            else:
                a[row_index[r], j] = v
    if model["sense"].upper().startswith("MAX"):
        c = -c
    lb = np.full(max(m, 1), -np.inf)
    ub = np.full(max(m, 1), np.inf)
    for i, (_, s, b) in enumerate(model["rows"]):
        if s in ("L", "E"):
            ub[i] = b
        if s in ("G", "E"):
            lb[i] = b
    lo = np.array([bnd[0] for _, bnd, _ in model["cols"]])
    hi = np.array([bnd[1] for _, bnd, _ in model["cols"]])
    integrality = np.array([1 if b else 0 for _, _, b in model["cols"]])
    constraints = [LinearConstraint(a.tocsr(), lb, ub)] if m else []
    res = milp(
        c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options={"mip_rel_gap": 1e-9, "presolve": True},
    )
    status = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded"}.get(res.status, "error")
    obj = float(res.fun) if res.fun is not None else None
    if obj is not None and model["sense"].upper().startswith("MAX"):
        obj = -obj
    print(json.dumps({"status": status, "objective": obj}))


def main(argv):
    args = argv[1:]
    want_dump = "--dump" in args
    args = [a for a in args if a != "--dump"]
    if len(args) != 1:
        print(__doc__, file=sys.stderr)
        return 2
    with open(args[0]) as fh:
        model = parse_mps(fh.read())
    if want_dump:
        dump(model)
    else:
        solve(model)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

"""LP-file export of the family feasibility constraints.

The scan and mixture argmax problems over the connected, graph_cut and
submatrix families can be posed as integer linear programs; this module
writes them in the de-facto LP file grammar (Maximize / Subject To / Bounds /
Binary / End) for optional solving with an external solver.  Nothing here
solves anything.

Variable naming: ``y_i`` is the 0/1 membership indicator of index i.  The
connected family adds root indicators ``r_i`` and a single-commodity flow
``f_u_v`` per directed arc: the root injects up to n units and every selected
vertex absorbs one, which forces the selection to be connected.  The
graph_cut family adds ``z_u_v`` in [0, 1] per edge with z >= |y_u - y_v| and
sum z <= rho.  The submatrix family uses row/column indicators ``u_r`` /
``v_c`` with product linking to the cell variables.

The objective sum(w_i y_i) is the linear numerator of the scan objective;
with the optional fixed-size constraint sum(y) = k it is exactly the
size-k slice of the MLE problem, and with mixture responsibilities as
weights it is the size-constrained estimator.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .families import FamilySpec

_EXPORTABLE = ("connected", "graph_cut", "submatrix")


def _lin(terms: Sequence[tuple[float, str]]) -> str:
    parts = []
    for coef, name in terms:
        if coef >= 0:
            parts.append(f"+ {coef:.12g} {name}")
        else:
            parts.append(f"- {abs(coef):.12g} {name}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def export_ilp(
    weights: Sequence[float],
    family: FamilySpec,
    path,
    fixed_size: Optional[int] = None,
) -> None:
    """Write the membership ILP for one family to ``path`` in LP format."""
    if family.kind not in _EXPORTABLE:
        raise ValueError(
            f"ILP export supports {_EXPORTABLE}, not {family.kind!r}"
        )
    w = np.asarray(weights, dtype=float)
    n = family.n
    if w.size != n:
        raise ValueError("weight vector length must equal the universe size")

    lines: list[str] = []
    lines.append(f"\\ structscan ILP export: family={family.kind} n={n}")
    lines.append("Maximize")
    lines.append(" obj: " + _lin([(float(w[i]), f"y_{i}") for i in range(n)]))
    lines.append("Subject To")
    binaries = [f"y_{i}" for i in range(n)]
    bounds: list[str] = []

    if fixed_size is not None:
        lines.append(
            " c_size: " + _lin([(1.0, f"y_{i}") for i in range(n)]) + f" = {fixed_size}"
        )
    else:
        lines.append(
            " c_nonempty: " + _lin([(1.0, f"y_{i}") for i in range(n)]) + " >= 1"
        )

    if family.kind == "graph_cut":
        edges = sorted(family.graph.edges)
        for u, v in edges:
            lines.append(f" c_cut_a_{u}_{v}: z_{u}_{v} - y_{u} + y_{v} >= 0")
            lines.append(f" c_cut_b_{u}_{v}: z_{u}_{v} + y_{u} - y_{v} >= 0")
        lines.append(
            " c_cut_total: "
            + _lin([(1.0, f"z_{u}_{v}") for u, v in edges])
            + f" <= {family.rho}"
        )
        bounds.extend(f" 0 <= z_{u}_{v} <= 1" for u, v in edges)

    elif family.kind == "connected":
        arcs = []
        for u, v in sorted(family.graph.edges):
            arcs.append((u, v))
            arcs.append((v, u))
        for i in range(n):
            lines.append(f" c_root_{i}: r_{i} - y_{i} <= 0")
        lines.append(" c_one_root: " + _lin([(1.0, f"r_{i}") for i in range(n)]) + " = 1")
        for u, v in arcs:
            lines.append(f" c_cap_tail_{u}_{v}: f_{u}_{v} - {n - 1} y_{u} <= 0")
            lines.append(f" c_cap_head_{u}_{v}: f_{u}_{v} - {n - 1} y_{v} <= 0")
        adj = family.graph.adjacency()
        for i in range(n):
            terms = [(1.0, f"f_{u}_{i}") for u in adj[i]]
            terms += [(-1.0, f"f_{i}_{u}") for u in adj[i]]
            terms += [(-1.0, f"y_{i}"), (float(n), f"r_{i}")]
            if terms:
                lines.append(f" c_flow_{i}: " + _lin(terms) + " >= 0")
        binaries.extend(f"r_{i}" for i in range(n))
        bounds.extend(f" 0 <= f_{u}_{v} <= {n - 1}" for u, v in arcs)

    elif family.kind == "submatrix":
        rows, cols = family.rows, family.cols
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                lines.append(f" c_cell_row_{i}: y_{i} - u_{r} <= 0")
                lines.append(f" c_cell_col_{i}: y_{i} - v_{c} <= 0")
                lines.append(f" c_cell_and_{i}: y_{i} - u_{r} - v_{c} >= -1")
        binaries.extend(f"u_{r}" for r in range(rows))
        binaries.extend(f"v_{c}" for c in range(cols))

    lines.append("Bounds")
    lines.extend(bounds)
    lines.append("Binary")
    lines.extend(f" {b}" for b in binaries)
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

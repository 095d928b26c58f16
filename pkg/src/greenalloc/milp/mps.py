"""Fixed-format MPS writer for external cross-checking."""
from __future__ import annotations

import math

from .model import BINARY, LE, EQ, GE, MAX, MilpModel

_SENSE_TAG = {LE: "L", EQ: "E", GE: "G"}


def _short_names(names: list[str], taken: set[str] | None = None) -> list[str]:
    """Truncate to 8 characters, uniquifying collisions with numeric suffixes."""
    taken = set(taken or ())
    out = []
    for name in names:
        base = "".join(ch for ch in name if not ch.isspace())[:8] or "V"
        cand = base
        k = 1
        while cand in taken:
            suffix = str(k)
            cand = base[: 8 - len(suffix)] + suffix
            k += 1
        taken.add(cand)
        out.append(cand)
    return out


def export_mps(model: MilpModel) -> tuple[str, dict[str, str]]:
    """Render the model as fixed-format MPS text.

    Returns the document plus a map from emitted 8-character names back to
    the model's row and column names. Integer columns are wrapped in
    MARKER INTORG/INTEND lines; a nonzero objective constant is encoded as an
    RHS entry on the objective row.
    """
    obj_row = "OBJ"
    row_names = _short_names([c.name for c in model.constraints], taken={obj_row})
    col_names = _short_names([v.name for v in model.variables], taken={obj_row})
    name_map = {obj_row: "(objective)"}
    name_map.update(zip(row_names, (c.name for c in model.constraints)))
    name_map.update(zip(col_names, (v.name for v in model.variables)))

    lines = [f"NAME          {model.name[:60]}"]
    if model.sense == MAX:
        lines.append("OBJSENSE")
        lines.append("    MAX")
    lines.append("ROWS")
    lines.append(f" N  {obj_row}")
    for tag_name, con in zip(row_names, model.constraints):
        lines.append(f" {_SENSE_TAG[con.sense]}  {tag_name}")

    by_col: dict[int, list[tuple[str, float]]] = {v.id: [] for v in model.variables}
    for vid, coef in model.objective.items():
        by_col[vid].append((obj_row, coef))
    for tag_name, con in zip(row_names, model.constraints):
        for vid, coef in con.coeffs.items():
            by_col[vid].append((tag_name, coef))

    lines.append("COLUMNS")
    marker = 0
    in_int = False
    for var in model.variables:
        is_int = var.kind == BINARY
        if is_int and not in_int:
            lines.append(f"    MARKER{marker:04d}  'MARKER'                 'INTORG'")
            marker += 1
            in_int = True
        elif not is_int and in_int:
            lines.append(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'")
            marker += 1
            in_int = False
        entries = by_col[var.id] or [(obj_row, 0.0)]
        for row, coef in entries:
            lines.append(f"    {col_names[var.id]:<8}  {row:<8}  {coef:.12g}")
    if in_int:
        lines.append(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'")

    lines.append("RHS")
    if model.objective_const:
        lines.append(f"    RHS       {obj_row:<8}  {-model.objective_const:.12g}")
    for tag_name, con in zip(row_names, model.constraints):
        if con.rhs:
            lines.append(f"    RHS       {tag_name:<8}  {con.rhs:.12g}")

    lines.append("BOUNDS")
    for var in model.variables:
        name = col_names[var.id]
        if var.kind == BINARY and var.lb == 0.0 and var.ub == 1.0:
            lines.append(f" BV BND       {name}")
            continue
        if var.lb == var.ub:
            lines.append(f" FX BND       {name:<8}  {var.lb:.12g}")
            continue
        if math.isinf(var.lb):
            lines.append(f" MI BND       {name}")
        elif var.lb != 0.0:
            lines.append(f" LO BND       {name:<8}  {var.lb:.12g}")
        if math.isfinite(var.ub):
            lines.append(f" UP BND       {name:<8}  {var.ub:.12g}")

    lines.append("ENDATA")
    return "\n".join(lines) + "\n", name_map

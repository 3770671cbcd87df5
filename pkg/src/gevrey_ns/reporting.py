"""Deterministic JSON/CSV serialization for reports and series.

Floats are rendered with 17 significant digits so identical runs produce
byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _fmt_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    return format(float(x), ".17g")


def _dump(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            _dump(str(key), out)
            out.append(": ")
            _dump(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(list(obj)):
            if i:
                out.append(", ")
            _dump(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def json_dumps(obj) -> str:
    out: list[str] = []
    _dump(obj, out)
    return "".join(out) + "\n"


def write_json(obj, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json_dumps(obj))
    return p


def _write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(_fmt_float(float(v)))
            elif isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trajectory_csv(traj, path: str | Path) -> Path:
    from .spectral import norm_l2
    rows = []
    for t, u, d in zip(traj.times, traj.fields, traj.dissipation):
        l2 = norm_l2(u)
        g = traj.grad_sq[traj.times.index(t)] ** 0.5
        rows.append((t, l2, g, d))
    return _write_csv(Path(path), ["t", "l2_norm", "grad_l2_norm", "dissipation_accum"], rows)


def write_functionals_csv(series, alpha: float, path: str | Path) -> Path:
    from .functionals import renormalize
    rows = []
    for s in series.samples:
        sc = renormalize(s, alpha)
        for m in range(s.M + 1):
            rows.append((s.t, m, s.L_raw[m], s.H_raw[m], s.L_tilde[m], s.H_tilde[m],
                         sc.L_c[m], sc.H_c[m]))
    return _write_csv(Path(path),
                      ["t", "m", "L_raw", "H_raw", "L_tilde", "H_tilde", "L_c", "H_c"],
                      rows)


def write_ccc0_csv(audit, path: str | Path) -> Path:
    rows = [(r.k, r.j, r.alpha, r.ratio, r.printed_bound, r.corrected_bound,
             r.printed_ok, r.corrected_ok) for r in audit.rows]
    return _write_csv(Path(path),
                      ["k", "j", "alpha", "ratio", "printed_bound", "corrected_bound",
                       "printed_ok", "corrected_ok"],
                      rows)

"""CSV/JSON emission with deterministic formatting."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .lattice import GrassmannParams, SphericalWeight, casimir, dimension, positive_roots, rho

__all__ = [
    "dumps_json",
    "rows_to_csv",
    "write_text",
    "root_rows",
    "weight_rows",
    "weight_records",
]


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _clean(obj.item())
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_text(text: str, out: str | Path | None) -> None:
    if out is None or str(out) == "-":
        import sys

        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def root_rows(space: GrassmannParams) -> tuple[list[str], list[list]]:
    header = ["root", *[f"c_{i}" for i in range(1, space.q + 1)], "multiplicity"]
    rows = [[r.label, *r.coeffs, r.multiplicity] for r in positive_roots(space)]
    return header, rows


def weight_rows(space: GrassmannParams, weights: Sequence[SphericalWeight], scale=None) -> tuple[list[str], list[list]]:
    q = space.q
    header = [f"m_{i}" for i in range(1, q + 1)] + [f"lambda_{i}" for i in range(1, q + 1)] + ["d_lambda", "kappa_lambda"]
    rows = [[*w.m, *w.lam, dimension(space, w), casimir(space, w, scale)] for w in weights]
    return header, rows


def weight_records(space: GrassmannParams, weights: Sequence[SphericalWeight], scale=None) -> dict:
    recs = []
    for w in weights:
        rec = w.to_record(space)
        rec["d_lambda"] = dimension(space, w)
        rec["kappa_lambda"] = casimir(space, w, scale)
        recs.append(rec)
    return {"p": space.p, "q": space.q, "rho": list(rho(space)), "weights": recs}

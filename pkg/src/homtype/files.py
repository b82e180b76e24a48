"""JSON file formats for spaces, exponents, point functions, grids and configs.

Infinite exponent values are written as the string ``"inf"``.  Distance
tables store the strict lower triangle, row by row.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .dyadic import DyadicGrid
from .exponents import ExponentFunction
from .space import FiniteSpace

__all__ = [
    "dump_json",
    "read_json",
    "save_space",
    "load_space",
    "save_exponent",
    "load_exponent",
    "save_function",
    "load_function",
    "save_grid",
    "load_grid",
]


def _enc(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_enc(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _enc(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_enc(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_enc(v) for v in x)
    return x


def _dec(v):
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    return v


def dump_json(obj: Any, path) -> None:
    """Deterministic JSON: sorted keys, two-space indent, shortest round-trip floats."""
    text = json.dumps(_enc(obj), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def read_json(path) -> Any:
    return json.loads(Path(path).read_text())


def save_space(space: FiniteSpace, path) -> None:
    il = np.tril_indices(space.n, -1)
    doc = {"n": space.n, "dist_lower": space.dist[il], "mass": space.mass}
    if space.a0_declared is not None:
        doc["a0"] = space.a0_declared
    dump_json(doc, path)


def load_space(path) -> FiniteSpace:
    doc = read_json(path)
    n = int(doc["n"])
    low = np.asarray(doc.get("dist_lower", []), dtype=float)
    if low.size != n * (n - 1) // 2:
        raise ValueError(f"dist_lower has {low.size} entries, expected {n * (n - 1) // 2}")
    d = np.zeros((n, n))
    d[np.tril_indices(n, -1)] = low
    d = d + d.T
    return FiniteSpace(d, doc["mass"], doc.get("a0"))


def save_exponent(p: ExponentFunction, path) -> None:
    doc = {"values": p.values, "base_point": p.base_point}
    if p.p_inf is not None:
        doc["p_inf"] = p.p_inf
    dump_json(doc, path)


def load_exponent(path) -> ExponentFunction:
    doc = read_json(path)
    vals = np.array([float(_dec(v)) for v in doc["values"]])
    pinf = doc.get("p_inf")
    return ExponentFunction(vals, None if pinf is None else float(_dec(pinf)), int(doc.get("base_point", 0)))


def save_function(values, path) -> None:
    dump_json({"values": np.asarray(values, dtype=float)}, path)


def load_function(path) -> np.ndarray:
    doc = read_json(path)
    vals = doc["values"] if isinstance(doc, dict) else doc
    return np.array([float(_dec(v)) for v in vals])


def grid_document(grid: DyadicGrid) -> dict:
    levels = []
    for g, ids in zip(grid.generations, grid.level_ids):
        levels.append(
            {
                "generation": g,
                "cubes": [{"center": grid.cubes[i].center, "members": sorted(grid.cubes[i].members)} for i in ids],
            }
        )
    return {
        "d0": grid.d0,
        "seed": grid.seed,
        "achieved_Cd": grid.achieved_Cd,
        "achieved_eps": grid.achieved_eps,
        "levels": levels,
    }


def save_grid(grid: DyadicGrid, path) -> None:
    dump_json(grid_document(grid), path)


def load_grid(path, space: FiniteSpace) -> DyadicGrid:
    doc = read_json(path)
    levels = [[(c["center"], c["members"]) for c in lv["cubes"]] for lv in doc["levels"]]
    gens = [int(lv["generation"]) for lv in doc["levels"]]
    return DyadicGrid.from_levels(
        space, levels, gens, float(doc["d0"]), int(doc.get("seed", 0)), doc.get("achieved_Cd"), doc.get("achieved_eps")
    )

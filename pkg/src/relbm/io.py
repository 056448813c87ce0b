"""CSV and JSON writers/readers for grids, reports, smiles and path sets.

Floats are written with ``repr``, the shortest string that round-trips, so
reading a file back reproduces every value bit for bit.  CSV files may start
with ``# key=value`` comment lines carrying run metadata.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import IO, Iterable

import numpy as np

from .density import DensityGrid
from .params import ModelParams
from .pricing import PriceReport, SmileCurve, SmilePoint


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def _parse(cell: str):
    if cell == "":
        return None
    try:
        return float(cell)
    except ValueError:
        return cell


def write_csv(fh: IO[str], columns: list[str], rows: Iterable[Iterable], meta: dict | None = None) -> None:
    for key, value in (meta or {}).items():
        fh.write(f"# {key}={fmt(value)}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def read_csv(fh: IO[str]) -> tuple[dict, dict[str, list]]:
    """Return ``(meta, columns)``; numeric cells become floats, empty cells None."""
    meta: dict = {}
    body = []
    for line in fh:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = _parse(value.strip())
        elif line.strip():
            body.append(line)
    reader = csv.reader(io.StringIO("".join(body)))
    header = next(reader)
    cols: dict[str, list] = {h: [] for h in header}
    for row in reader:
        for h, cell in zip(header, row):
            cols[h].append(_parse(cell))
    return meta, cols


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(fh: IO[str], payload: dict) -> None:
    json.dump(_jsonable(payload), fh, indent=2, allow_nan=False)
    fh.write("\n")


def read_json(fh: IO[str]) -> dict:
    return json.load(fh)


# density grids


def density_grid_payload(grid: DensityGrid) -> dict:
    return {
        "params": grid.params.as_dict(),
        "t": grid.t,
        "x": grid.x_values,
        "p": grid.p_values,
        **({"meta": grid.meta} if grid.meta else {}),
    }


def write_density_json(fh: IO[str], grid: DensityGrid) -> None:
    write_json(fh, density_grid_payload(grid))


def write_density_csv(fh: IO[str], grid: DensityGrid, meta: dict | None = None) -> None:
    head = {"sigma": grid.params.sigma, "c": grid.params.c, "r0": grid.params.r0, "t": grid.t}
    head.update(meta or {})
    write_csv(fh, ["x", "p"], zip(grid.x_values, grid.p_values), head)


def read_density_json(fh: IO[str]) -> DensityGrid:
    d = read_json(fh)
    params = ModelParams(d["params"]["sigma"], d["params"]["c"])
    return DensityGrid(np.array(d["x"], dtype=float), np.array(d["p"], dtype=float), d["t"], params, d.get("meta", {}))


def read_density_csv(fh: IO[str]) -> DensityGrid:
    meta, cols = read_csv(fh)
    params = ModelParams(meta["sigma"], meta["c"])
    return DensityGrid(np.array(cols["x"], dtype=float), np.array(cols["p"], dtype=float), meta["t"], params, meta)


# price reports and smiles

REPORT_COLUMNS = ["strike", "price", "implied_vol", "delta"]


def write_report_csv(fh: IO[str], strike: float, report: PriceReport, implied: float | None, meta: dict | None = None) -> None:
    head = {"x_star": report.x_star, "bond_units": report.bond_units,
            "quad_error_estimate": report.quad_error_estimate, "kind": report.kind}
    head.update(meta or {})
    write_csv(fh, REPORT_COLUMNS, [(strike, report.price, implied, report.delta)], head)


def smile_payload(smile: SmileCurve) -> dict:
    return {
        "maturity": smile.maturity,
        "forward": smile.forward,
        "points": [
            {"strike": p.strike, "price": p.model_price, "implied_vol": p.implied_vol,
             "delta": p.delta, "status": p.status}
            for p in smile.points
        ],
    }


def write_smile_csv(fh: IO[str], smile: SmileCurve, meta: dict | None = None) -> None:
    head = {"maturity": smile.maturity, "forward": smile.forward}
    head.update(meta or {})
    rows = [(p.strike, p.model_price, p.implied_vol, p.delta) for p in smile.points]
    write_csv(fh, REPORT_COLUMNS, rows, head)


def read_smile_csv(fh: IO[str]) -> SmileCurve:
    meta, cols = read_csv(fh)
    points = tuple(
        SmilePoint(k, v, iv, d, "ok" if iv is not None else "failed")
        for k, v, iv, d in zip(cols["strike"], cols["price"], cols["implied_vol"], cols["delta"])
    )
    return SmileCurve(meta["maturity"], meta["forward"], points)


def read_smile_json(fh: IO[str]) -> SmileCurve:
    d = read_json(fh)
    d = d.get("smile", d)
    points = tuple(
        SmilePoint(p["strike"], p["price"], p["implied_vol"], p["delta"], p.get("status", "ok")) for p in d["points"]
    )
    return SmileCurve(d["maturity"], d["forward"], points)


# path sets


def write_paths_csv(fh: IO[str], increments: np.ndarray, full: bool = False, meta: dict | None = None) -> None:
    """One row per path: the terminal value, plus every increment when ``full``."""
    n_steps = increments.shape[1]
    cols = ["path", "terminal"] + ([f"dx{i}" for i in range(n_steps)] if full else [])
    terminal = increments.sum(axis=1)
    rows = (
        [i, terminal[i], *(increments[i] if full else ())]
        for i in range(increments.shape[0])
    )
    head = {"full_increments": full}
    head.update(meta or {})
    write_csv(fh, cols, rows, head)


def path_summary(terminal: np.ndarray) -> dict:
    n = terminal.size
    mean = float(terminal.mean())
    centered = terminal - mean
    var = float(centered @ centered / max(n - 1, 1))
    m4 = float(np.mean(centered**4))
    return {
        "n_paths": n,
        "mean": mean,
        "variance": var,
        "mean_std_error": math.sqrt(var / n),
        "excess_kurtosis": m4 / (var * var) - 3.0 if var > 0 else None,
    }

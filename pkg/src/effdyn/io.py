"""Flat-file exports: CSV curves, ``key = value`` reports and run manifests."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

CSV_FORMAT = "%.16e"  # 17 significant digits


def write_csv(path, columns: Mapping[str, np.ndarray]) -> dict:
    """Write equal-length columns; returns a manifest entry for the file."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, data, fmt=CSV_FORMAT, delimiter=",", header=",".join(names), comments="")
    return {"file": path.name, "rows": int(data.shape[0]), "columns": names}


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {k: data[:, i] for i, k in enumerate(names)}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def format_report(values: Mapping[str, object]) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in values.items())


def write_report(path, values: Mapping[str, object]) -> dict:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(format_report(values))
    return {"file": path.name, "rows": len(values), "columns": ["key", "value"]}


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_manifest(path, entries: list[dict], extra: Mapping[str, object] | None = None) -> None:
    doc = {"files": entries}
    if extra:
        doc.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")

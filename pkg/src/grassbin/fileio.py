"""Model and dataset file formats.

Model files are JSON objects {"p": int, "sigma": [[...]], "meta": {...}}
with every number written with 17 significant digits, so a write/read
round trip reproduces the doubles bit-exactly.

Dataset files are CSV with header "x1,...,xp" and 0/1 rows; leading lines
starting with '#' carry "key: value" metadata (seed, rng algorithm, model
hash).
"""

from __future__ import annotations

import csv
import hashlib
import json
from typing import Dict, Optional, Tuple

import numpy as np

from . import linalg
from .sampling import Dataset


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(sigma, meta: Optional[dict] = None) -> str:
    """Serialize a parameter matrix (plus optional metadata) to JSON text."""
    a = linalg.as_square_matrix(sigma)
    rows = ",\n    ".join(
        "[" + ", ".join(_fmt(v) for v in row) + "]" for row in a
    )
    parts = [f'  "p": {a.shape[0]}', f'  "sigma": [\n    {rows}\n  ]']
    if meta:
        parts.append('  "meta": ' + json.dumps(meta, sort_keys=True))
    return "{\n" + ",\n".join(parts) + "\n}\n"


def model_from_json(text: str) -> Tuple[np.ndarray, dict]:
    """Parse a model file; returns (sigma, meta)."""
    doc = json.loads(text)
    if not isinstance(doc, dict) or "sigma" not in doc:
        raise ValueError("model file must be a JSON object with a 'sigma' field")
    sigma = np.array(doc["sigma"], dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"'sigma' must be a square matrix, got shape {sigma.shape}")
    p = doc.get("p")
    if p is not None and int(p) != sigma.shape[0]:
        raise ValueError(f"'p' field ({p}) disagrees with sigma shape {sigma.shape}")
    return sigma, doc.get("meta", {})


def write_model(path, sigma, meta: Optional[dict] = None) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(sigma, meta))


def read_model(path) -> Tuple[np.ndarray, dict]:
    with open(path) as fh:
        return model_from_json(fh.read())


def model_hash(sigma) -> str:
    """sha256 of the canonical serialization, for dataset provenance headers."""
    return hashlib.sha256(model_to_json(sigma).encode()).hexdigest()


def write_dataset(path, data: Dataset, meta: Optional[Dict[str, str]] = None) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(1, data.p + 1)])
        writer.writerows(data.rows.tolist())


def read_dataset(path) -> Tuple[Dataset, Dict[str, str]]:
    meta: Dict[str, str] = {}
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, value = body.split(":", 1)
                    meta[key.strip()] = value.strip()
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                if header != [f"x{i}" for i in range(1, len(header) + 1)]:
                    raise ValueError(f"unexpected dataset header {header}")
                continue
            if len(cells) != len(header):
                raise ValueError(f"row has {len(cells)} cells, expected {len(header)}")
            try:
                bits = [int(c) for c in cells]
            except ValueError as exc:
                raise ValueError(f"non-integer cell in row {line!r}") from exc
            if any(b not in (0, 1) for b in bits):
                raise ValueError(f"dataset values must be 0/1, got {bits}")
            rows.append(bits)
    if header is None:
        raise ValueError("dataset file has no header row")
    arr = np.array(rows, dtype=np.uint8).reshape(len(rows), len(header))
    return Dataset(arr), meta

"""Deterministic artifact I/O: versioned binary model files and hashed text artifacts.

Every artifact embeds the config hash that produced it, and identical inputs
always produce byte-identical files (no wall-clock timestamps, sorted keys,
fixed float formatting via repr round-trip).
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Any, Iterable

import numpy as np

MAGIC = b"TWKMDL01"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def config_hash(resolved_config: dict) -> str:
    return hashlib.sha256(canonical_json(resolved_config).encode("utf-8")).hexdigest()


def save_model_file(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write a versioned binary container: JSON metadata + raw little-endian arrays."""
    names = sorted(arrays)
    header = {
        "meta": meta,
        "arrays": [
            {
                "name": name,
                "dtype": str(arrays[name].dtype),
                "shape": list(arrays[name].shape),
            }
            for name in names
        ],
    }
    blob = canonical_json(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in names:
            arr = np.ascontiguousarray(arrays[name])
            if arr.dtype.byteorder == ">":
                arr = arr.astype(arr.dtype.newbyteorder("<"))
            fh.write(arr.tobytes(order="C"))


def load_model_file(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a tweetkit model file (bad magic)")
        (blob_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        arrays: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            dtype = np.dtype(spec["dtype"])
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * dtype.itemsize)
            arrays[spec["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return header["meta"], arrays


def write_csv(path: str | Path, header: Iterable[str], rows: Iterable[Iterable], cfg_hash: str) -> None:
    """CSV with a leading ``# config_hash=...`` comment line.

    Values are formatted with str(); floats therefore use shortest
    round-trip repr, which is deterministic.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _csv_cell(value: Any) -> str:
    text = "" if value is None else str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def read_csv_rows(path: str | Path) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Read a tweetkit CSV back; returns (header, rows, comments)."""
    import csv

    comments: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    comments[key.strip()] = val.strip()
                continue
            lines.append(line)
    reader = csv.reader(lines)
    parsed = list(reader)
    if not parsed:
        return [], [], comments
    return parsed[0], parsed[1:], comments


def write_json(path: str | Path, payload: dict, cfg_hash: str | None = None) -> None:
    doc = dict(payload)
    if cfg_hash is not None:
        doc["config_hash"] = cfg_hash
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2))
        fh.write("\n")


def read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)

"""Persistent per-pair score columns: a columnar CSV (id + one column per
method) with a JSON sidecar carrying direction/range/fingerprint metadata.
Floats are serialized with repr() so a round-trip is bit-exact."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from typing import Mapping, Sequence

from .errors import InputError
from .external import DIRECTIONS, ExternalScoreColumn


def config_fingerprint(flags: Mapping) -> str:
    """Short stable hash of ranking-relevant configuration."""
    blob = json.dumps(flags, ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def sidecar_path(path: str) -> str:
    return path + ".meta.json"


class ScoreTable:
    """Ordered score columns over a fixed id space."""

    def __init__(self, ids: Sequence[int]):
        self.ids: list[int] = list(ids)
        if len(set(self.ids)) != len(self.ids):
            raise InputError("score table id space contains duplicates")
        self.columns: dict[str, dict[int, float]] = {}
        self.meta: dict[str, dict] = {}

    def methods(self) -> list[str]:
        return list(self.columns)

    def has_column(self, name: str) -> bool:
        return name in self.columns

    def add_column(
        self,
        name: str,
        scores: Mapping[int, float],
        direction: str,
        declared_range: tuple[float, float] | None = None,
        flags: Mapping | None = None,
        force: bool = False,
    ) -> None:
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        if name in self.columns and not force:
            raise InputError(
                f"column {name!r} already exists (use force to overwrite)"
            )
        id_set = set(self.ids)
        have = set(scores)
        if have != id_set:
            missing = sorted(id_set - have)[:10]
            extra = sorted(have - id_set)[:10]
            raise InputError(
                f"column {name!r} does not cover the id space "
                f"(missing {missing}, unknown {extra})"
            )
        for pair_id, score in scores.items():
            if not math.isfinite(score):
                raise InputError(f"column {name!r}: non-finite score for id {pair_id}")
        self.columns[name] = {i: float(scores[i]) for i in self.ids}
        flags = dict(flags or {})
        self.meta[name] = {
            "direction": direction,
            "range": list(declared_range) if declared_range else None,
            "flags": flags,
            "fingerprint": config_fingerprint(flags),
        }

    def add_external(self, column: ExternalScoreColumn, flags=None, force=False) -> None:
        self.add_column(
            column.method_name,
            column.scores,
            column.direction,
            column.declared_range,
            flags=flags,
            force=force,
        )

    def column(self, name: str) -> dict[int, float]:
        if name not in self.columns:
            raise InputError(
                f"no column {name!r}; available: {sorted(self.columns)}"
            )
        return self.columns[name]

    def direction(self, name: str) -> str:
        self.column(name)
        return self.meta[name]["direction"]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id"] + list(self.columns))
            for pair_id in self.ids:
                writer.writerow(
                    [pair_id] + [repr(self.columns[m][pair_id]) for m in self.columns]
                )
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            json.dump(
                {"kind": "pairselect-scores", "version": 1, "columns": self.meta},
                fh,
                ensure_ascii=False,
                sort_keys=True,
                indent=2,
            )
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "ScoreTable":
        try:
            fh = open(path, encoding="utf-8", newline="")
        except OSError as exc:
            raise InputError(f"cannot read score table {path}: {exc}") from exc
        with fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InputError(f"{path}: empty score table") from None
            if not header or header[0] != "id":
                raise InputError(f"{path}: first column must be 'id'")
            methods = header[1:]
            ids: list[int] = []
            raw_columns: dict[str, dict[int, float]] = {m: {} for m in methods}
            for row in reader:
                if len(row) != len(header):
                    raise InputError(f"{path}: ragged row {row!r}")
                pair_id = int(row[0])
                ids.append(pair_id)
                for method, cell in zip(methods, row[1:]):
                    raw_columns[method][pair_id] = float(cell)
        meta_file = sidecar_path(path)
        if not os.path.exists(meta_file):
            raise InputError(f"{path}: missing sidecar {meta_file}")
        with open(meta_file, encoding="utf-8") as fh:
            sidecar = json.load(fh)
        if sidecar.get("kind") != "pairselect-scores" or sidecar.get("version") != 1:
            raise InputError(f"{meta_file}: not a version-1 score sidecar")
        table = cls(ids)
        for method in methods:
            meta = sidecar["columns"].get(method)
            if meta is None:
                raise InputError(f"{meta_file}: no metadata for column {method!r}")
            declared = tuple(meta["range"]) if meta.get("range") else None
            table.add_column(
                method,
                raw_columns[method],
                meta["direction"],
                declared_range=declared,
                flags=meta.get("flags") or {},
            )
        return table

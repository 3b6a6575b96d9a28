"""Cross-method selection analysis: uniqueness/overlap accounting, score
distribution statistics, and deterministic report rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import InputError

FORMATS = ("markdown", "csv", "json")


@dataclass(frozen=True)
class UniquenessReport:
    """Per-method exclusive counts against the union of all selections."""

    methods: tuple[str, ...]
    set_sizes: dict[str, int]
    unique_counts: dict[str, int]
    unique_pcts: dict[str, float]
    union_size: int
    overlap: tuple[tuple[int, ...], ...]  # |S_i & S_j|, indexed like methods


def _named_sets(selections) -> list[tuple[str, set[int]]]:
    if isinstance(selections, Mapping):
        items = list(selections.items())
    else:
        items = list(selections)
    names = [name for name, _ in items]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise InputError(f"duplicate method names: {dupes}")
    return [(name, set(ids)) for name, ids in items]


def overlap_matrix(selections) -> tuple[tuple[int, ...], ...]:
    """Pairwise intersection sizes; diagonal holds |S_i|."""
    sets = _named_sets(selections)
    return tuple(
        tuple(len(a & b) for _, b in sets) for _, a in sets
    )


def unique_samples(selections) -> UniquenessReport:
    """For each method: the ids no other method selected, and that count as
    a percentage of the union of all selections."""
    sets = _named_sets(selections)
    if len(sets) < 2:
        raise InputError("uniqueness analysis needs at least two selections")
    union: set[int] = set()
    for _, ids in sets:
        union |= ids
    unique_counts: dict[str, int] = {}
    unique_pcts: dict[str, float] = {}
    for i, (name, ids) in enumerate(sets):
        others: set[int] = set()
        for j, (_, other) in enumerate(sets):
            if j != i:
                others |= other
        unique = ids - others
        unique_counts[name] = len(unique)
        unique_pcts[name] = 100.0 * len(unique) / len(union) if union else 0.0
    return UniquenessReport(
        methods=tuple(name for name, _ in sets),
        set_sizes={name: len(ids) for name, ids in sets},
        unique_counts=unique_counts,
        unique_pcts=unique_pcts,
        union_size=len(union),
        overlap=overlap_matrix(sets),
    )


@dataclass(frozen=True)
class DistributionStats:
    count: int
    mean: float
    variance: float  # unbiased (n-1); 0 by convention when count < 2
    std: float
    skewness: float  # adjusted Fisher-Pearson; 0 when count < 3 or variance 0
    min: float
    max: float
    q1: float
    median: float
    q3: float
    histogram: tuple[tuple[float, float, int], ...]  # (bin_lo, bin_hi, count)


def _quantile(ordered: Sequence[float], q: float) -> float:
    """Linear interpolation between closest ranks."""
    pos = (len(ordered) - 1) * q
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return ordered[lo]
    frac = pos - lo
    return ordered[lo] * (1.0 - frac) + ordered[hi] * frac


def distribution_stats(scores: Sequence[float], bins: int = 20) -> DistributionStats:
    """Moments, quartiles, and a fixed-width histogram over [min, max]
    (maximum value lands in the last bin)."""
    if not scores:
        raise ValueError("distribution of an empty score list is undefined")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    n = len(scores)
    mean = math.fsum(scores) / n
    m2 = math.fsum((x - mean) ** 2 for x in scores)
    m3 = math.fsum((x - mean) ** 3 for x in scores)
    variance = m2 / (n - 1) if n > 1 else 0.0
    std = math.sqrt(variance)
    if n >= 3 and m2 > 0.0:
        g1 = (m3 / n) / (m2 / n) ** 1.5
        skewness = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    else:
        skewness = 0.0
    ordered = sorted(scores)
    lo, hi = ordered[0], ordered[-1]
    counts = [0] * bins
    if hi == lo:
        # Degenerate range: every value is the maximum, so the last bin
        # takes them all.
        counts[-1] = n
    else:
        width = (hi - lo) / bins
        for x in scores:
            idx = int((x - lo) / width)
            if idx >= bins:
                idx = bins - 1
            counts[idx] += 1
    histogram = tuple(
        (lo + i * (hi - lo) / bins, lo + (i + 1) * (hi - lo) / bins, counts[i])
        for i in range(bins)
    )
    return DistributionStats(
        count=n,
        mean=mean,
        variance=variance,
        std=std,
        skewness=skewness,
        min=lo,
        max=hi,
        q1=_quantile(ordered, 0.25),
        median=_quantile(ordered, 0.5),
        q3=_quantile(ordered, 0.75),
        histogram=histogram,
    )


def histogram_csv(stats: DistributionStats) -> str:
    """Histogram as CSV with columns bin_lo, bin_hi, count."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lo", "bin_hi", "count"])
    for bin_lo, bin_hi, count in stats.histogram:
        writer.writerow([repr(bin_lo), repr(bin_hi), count])
    return buf.getvalue()


def _report_payload(
    corpus_stats,
    selections,
    score_columns: Mapping[str, Mapping[int, float]] | None,
    fingerprint: str,
    bins: int,
) -> dict:
    payload: dict = {"config_fingerprint": fingerprint}
    if corpus_stats is not None:
        payload["corpus"] = {
            "pair_count": corpus_stats.pair_count,
            "source_vocab_size": corpus_stats.source_vocab_size,
            "target_vocab_size": corpus_stats.target_vocab_size,
        }
    sets = _named_sets(selections) if selections else []
    if sets:
        id_universe = None
        if corpus_stats is not None:
            id_universe = corpus_stats.pair_count
            for name, ids in sets:
                bad = [i for i in ids if i < 0 or i >= id_universe]
                if bad:
                    raise InputError(
                        f"selection {name!r} has ids outside the corpus: {sorted(bad)[:10]}"
                    )
        payload["selections"] = {name: len(ids) for name, ids in sets}
        if len(sets) >= 2:
            uniq = unique_samples(sets)
            payload["uniqueness"] = {
                "union_size": uniq.union_size,
                "methods": [
                    {
                        "method": name,
                        "selected": uniq.set_sizes[name],
                        "unique": uniq.unique_counts[name],
                        "unique_pct": uniq.unique_pcts[name],
                    }
                    for name in uniq.methods
                ],
                "overlap": [list(row) for row in uniq.overlap],
            }
    if score_columns:
        payload["score_distributions"] = {}
        for name in sorted(score_columns):
            stats = distribution_stats(list(score_columns[name].values()), bins=bins)
            payload["score_distributions"][name] = {
                "count": stats.count,
                "mean": stats.mean,
                "variance": stats.variance,
                "std": stats.std,
                "skewness": stats.skewness,
                "min": stats.min,
                "q1": stats.q1,
                "median": stats.median,
                "q3": stats.q3,
                "max": stats.max,
                "histogram": [list(b) for b in stats.histogram],
            }
    return payload


def _render_markdown(payload: dict) -> str:
    out = ["# Selection report", ""]
    out.append(f"Config fingerprint: `{payload['config_fingerprint']}`")
    out.append("")
    if "corpus" in payload:
        c = payload["corpus"]
        out += [
            "## Corpus",
            "",
            "| pairs | source vocab | target vocab |",
            "|---|---|---|",
            f"| {c['pair_count']} | {c['source_vocab_size']} | {c['target_vocab_size']} |",
            "",
        ]
    if "uniqueness" in payload:
        u = payload["uniqueness"]
        out += [
            "## Uniqueness",
            "",
            f"Union of all selections: {u['union_size']} ids",
            "",
            "| method | selected | unique | unique % |",
            "|---|---|---|---|",
        ]
        for row in u["methods"]:
            out.append(
                f"| {row['method']} | {row['selected']} | {row['unique']} "
                f"| {row['unique_pct']:.2f} |"
            )
        out.append("")
        methods = [row["method"] for row in u["methods"]]
        out += ["### Pairwise overlap", "", "| | " + " | ".join(methods) + " |"]
        out.append("|" + "---|" * (len(methods) + 1))
        for name, row in zip(methods, u["overlap"]):
            out.append("| " + name + " | " + " | ".join(str(v) for v in row) + " |")
        out.append("")
    if "score_distributions" in payload:
        out += [
            "## Score distributions",
            "",
            "| method | count | mean | std | skew | min | median | max |",
            "|---|---|---|---|---|---|---|---|",
        ]
        for name, s in payload["score_distributions"].items():
            out.append(
                f"| {name} | {s['count']} | {s['mean']:.6f} | {s['std']:.6f} "
                f"| {s['skewness']:.6f} | {s['min']:.6f} | {s['median']:.6f} "
                f"| {s['max']:.6f} |"
            )
        out.append("")
    return "\n".join(out)


def _render_csv(payload: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "item", "field", "value"])
    writer.writerow(["config", "", "fingerprint", payload["config_fingerprint"]])
    if "corpus" in payload:
        for key, value in payload["corpus"].items():
            writer.writerow(["corpus", "", key, value])
    if "uniqueness" in payload:
        u = payload["uniqueness"]
        writer.writerow(["uniqueness", "", "union_size", u["union_size"]])
        for row in u["methods"]:
            for key in ("selected", "unique", "unique_pct"):
                writer.writerow(["uniqueness", row["method"], key, repr(row[key])])
        methods = [row["method"] for row in u["methods"]]
        for name, row in zip(methods, u["overlap"]):
            for other, value in zip(methods, row):
                writer.writerow(["overlap", name, other, value])
    if "score_distributions" in payload:
        for name, s in payload["score_distributions"].items():
            for key in (
                "count", "mean", "variance", "std", "skewness",
                "min", "q1", "median", "q3", "max",
            ):
                writer.writerow(["scores", name, key, repr(s[key])])
    return buf.getvalue()


def emit_report(
    corpus_stats=None,
    selections=None,
    score_columns: Mapping[str, Mapping[int, float]] | None = None,
    format: str = "markdown",
    fingerprint: str = "",
    bins: int = 20,
) -> bytes:
    """Render the analysis artifact; identical inputs produce identical
    bytes. The fingerprint of ranking-relevant configuration is embedded so
    reports are only comparable when it matches."""
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    payload = _report_payload(corpus_stats, selections, score_columns, fingerprint, bins)
    if format == "json":
        text = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    elif format == "csv":
        text = _render_csv(payload)
    else:
        text = _render_markdown(payload)
    return text.encode("utf-8")

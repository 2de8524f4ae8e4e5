"""Node-source diagnostics: frequency, precision and recall per channel.

Reference and system nodes each carry a source tag (vocab generation,
source-side copy, target-side copy).  Counts are matched greedily by
surface form within each sentence and channel:

    frequency(z) = |ref_z| / sum_z |ref_z|
    precision(z) = |ref_z  matched  sys_z| / |sys_z|
    recall(z)    = |ref_z  matched  sys_z| / |ref_z|
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

SOURCES = ("vocab", "src", "tgt")


@dataclass
class SourceStats:
    frequency: float
    precision: float
    recall: float
    ref_count: int
    sys_count: int
    match_count: int


def node_source_stats(ref_tagged, sys_tagged) -> dict:
    """Per-source statistics over aligned sentence lists of (surface, tag)."""
    if len(ref_tagged) != len(sys_tagged):
        raise ValueError(f"{len(ref_tagged)} reference vs {len(sys_tagged)} system sentences")
    ref_counts = Counter()
    sys_counts = Counter()
    matches = Counter()
    for ref_nodes, sys_nodes in zip(ref_tagged, sys_tagged):
        for z in SOURCES:
            ref_surf = Counter(s for s, tag in ref_nodes if tag == z)
            sys_surf = Counter(s for s, tag in sys_nodes if tag == z)
            ref_counts[z] += sum(ref_surf.values())
            sys_counts[z] += sum(sys_surf.values())
            matches[z] += sum((ref_surf & sys_surf).values())
    total_ref = sum(ref_counts.values())
    out = {}
    for z in SOURCES:
        out[z] = SourceStats(
            frequency=ref_counts[z] / total_ref if total_ref else 0.0,
            precision=matches[z] / sys_counts[z] if sys_counts[z] else 0.0,
            recall=matches[z] / ref_counts[z] if ref_counts[z] else 0.0,
            ref_count=ref_counts[z], sys_count=sys_counts[z], match_count=matches[z],
        )
    return out


def reference_tags(records, cfg) -> list:
    """Source tags of gold corpora via the training-side preprocessing."""
    from .training import preprocess_record
    from .transduce import graph_to_tree, linearize

    out = []
    for rec in records:
        tokens, _, lemmas, _, graph, _ = preprocess_record(rec, cfg)
        target = linearize(graph_to_tree(graph), tokens, lemmas)
        out.append([(c, kind) for c, (kind, _) in zip(target.concepts, target.sources)])
    return out


def format_stats_table(stats: dict) -> str:
    """Delimited report: one row per source channel."""
    lines = ["source\tfrequency\tprecision\trecall\tref\tsys\tmatched"]
    for z in SOURCES:
        s = stats[z]
        lines.append(f"{z}\t{s.frequency:.4f}\t{s.precision:.4f}\t{s.recall:.4f}"
                     f"\t{s.ref_count}\t{s.sys_count}\t{s.match_count}")
    return "\n".join(lines)

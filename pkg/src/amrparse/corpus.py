"""Corpus and sidecar file formats.

A corpus file is a sequence of records separated by blank lines.  Each
record holds optional ``# ::key value`` comment lines (id, snt, tok,
lem, pos) followed by one PENMAN expression; parse inputs may omit the
expression.  Sidecars covered here: linearized-target TSV, pretrained
word vectors, contextual embedding records, and anonymization maps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import AmrGraph
from .penman import PenmanError, penman_decode, penman_encode


class CorpusError(ValueError):
    """Malformed corpus or sidecar content, tagged with the record number."""


@dataclass
class CorpusRecord:
    id: str | None = None
    snt: str | None = None
    tokens: list | None = None
    pos: list | None = None
    lemmas: list | None = None
    graph: AmrGraph | None = None
    meta: dict = field(default_factory=dict)

    def lemma_list(self) -> list:
        """Lemmas if present, else lowercased tokens."""
        if self.lemmas is not None:
            return list(self.lemmas)
        return [t.lower() for t in (self.tokens or [])]


_COMMENT = re.compile(r"^#\s*::(\S+)\s*(.*)$")


def _split_blocks(text: str) -> list:
    blocks, cur, start = [], [], 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not cur:
                start = lineno
            cur.append(line)
        elif cur:
            blocks.append((start, cur))
            cur = []
    if cur:
        blocks.append((start, cur))
    return blocks


def read_corpus_text(text: str, require_graph: bool = False) -> list:
    records = []
    for recno, (lineno, lines) in enumerate(_split_blocks(text), start=1):
        rec = CorpusRecord()
        graph_lines = []
        for line in lines:
            if line.lstrip().startswith("#"):
                m = _COMMENT.match(line.strip())
                if not m:
                    continue  # plain comment
                key, value = m.group(1), m.group(2).strip()
                if key == "id":
                    rec.id = value
                elif key == "snt":
                    rec.snt = value
                elif key == "tok":
                    rec.tokens = value.split()
                elif key == "lem":
                    rec.lemmas = value.split()
                elif key == "pos":
                    rec.pos = value.split()
                else:
                    rec.meta[key] = value
            else:
                graph_lines.append(line)
        if graph_lines:
            try:
                rec.graph = penman_decode("\n".join(graph_lines))
            except PenmanError as e:
                raise CorpusError(f"record {recno} (line {lineno}): {e}") from e
        elif require_graph:
            raise CorpusError(f"record {recno} (line {lineno}): missing graph")
        for name, seq in (("pos", rec.pos), ("lem", rec.lemmas)):
            if seq is not None and rec.tokens is not None and len(seq) != len(rec.tokens):
                raise CorpusError(
                    f"record {recno}: ::{name} has {len(seq)} fields for {len(rec.tokens)} tokens")
        if rec.tokens is None and rec.snt is not None:
            rec.tokens = rec.snt.split()
        records.append(rec)
    return records


def read_corpus(path, require_graph: bool = False) -> list:
    return read_corpus_text(Path(path).read_text(encoding="utf-8"), require_graph)


def format_record(rec: CorpusRecord) -> str:
    out = []
    if rec.id is not None:
        out.append(f"# ::id {rec.id}")
    if rec.snt is not None:
        out.append(f"# ::snt {rec.snt}")
    if rec.tokens is not None:
        out.append("# ::tok " + " ".join(rec.tokens))
    if rec.lemmas is not None:
        out.append("# ::lem " + " ".join(rec.lemmas))
    if rec.pos is not None:
        out.append("# ::pos " + " ".join(rec.pos))
    for key in sorted(rec.meta):
        out.append(f"# ::{key} {rec.meta[key]}")
    if rec.graph is not None:
        out.append(penman_encode(rec.graph))
    return "\n".join(out)


def write_corpus(records, path) -> None:
    text = "\n\n".join(format_record(r) for r in records)
    Path(path).write_text(text + "\n", encoding="utf-8")


# --- linearized targets -------------------------------------------------

def format_target_block(target, rec_id=None) -> str:
    """TSV columns: position, concept, index, head, label, source tag."""
    lines = []
    if rec_id is not None:
        lines.append(f"# ::id {rec_id}")
    for i in range(len(target.concepts)):
        kind, pos = target.sources[i]
        tag = kind if pos is None else f"{kind}:{pos}"
        lines.append("\t".join([
            str(i + 1), target.concepts[i], str(target.indices[i]),
            str(target.heads[i]), target.labels[i], tag,
        ]))
    return "\n".join(lines)


def write_targets(targets, path, ids=None) -> None:
    blocks = []
    for i, tgt in enumerate(targets):
        rid = ids[i] if ids is not None else None
        blocks.append(format_target_block(tgt, rid))
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def read_targets_text(text: str):
    from .transduce import LinearizedTarget  # local import to avoid a cycle

    out = []
    for recno, (lineno, lines) in enumerate(_split_blocks(text), start=1):
        concepts, indices, heads, labels, sources = [], [], [], [], []
        rec_id = None
        for line in lines:
            if line.startswith("#"):
                m = _COMMENT.match(line.strip())
                if m and m.group(1) == "id":
                    rec_id = m.group(2).strip()
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 6:
                raise CorpusError(f"target record {recno}: expected 6 columns, got {len(cols)}")
            concepts.append(cols[1])
            indices.append(int(cols[2]))
            heads.append(int(cols[3]))
            labels.append(cols[4])
            kind, _, pos = cols[5].partition(":")
            sources.append((kind, int(pos) if pos else None))
        out.append((rec_id, LinearizedTarget(concepts, indices, heads, labels, sources)))
    return out


# --- pretrained word vectors --------------------------------------------

def load_word_vectors(path, dim: int) -> dict:
    """Whitespace text format: ``token v1 ... v_dim`` per line."""
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise CorpusError(f"vector line {lineno}: expected {dim} values, got {len(parts) - 1}")
        table[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
    return table


# --- contextual embedding sidecar ---------------------------------------

def load_contextual(path) -> dict:
    """Per-sentence matrices keyed by ``::id``.

    A record is ``# ::id <str>`` followed by one line of floats per word.
    An optional ``# ::spans a:b ...`` line marks the rows as subword
    states to be pooled over those half-open spans.
    """
    table = {}
    for recno, (lineno, lines) in enumerate(_split_blocks(Path(path).read_text(encoding="utf-8")), 1):
        rec_id, spans, rows = None, None, []
        for line in lines:
            m = _COMMENT.match(line.strip())
            if m:
                if m.group(1) == "id":
                    rec_id = m.group(2).strip()
                elif m.group(1) == "spans":
                    spans = []
                    for part in m.group(2).split():
                        a, _, b = part.partition(":")
                        spans.append((int(a), int(b)))
                continue
            rows.append([float(x) for x in line.split()])
        if rec_id is None:
            raise CorpusError(f"contextual record {recno} (line {lineno}): missing ::id")
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise CorpusError(f"contextual record {recno}: ragged rows")
        table[rec_id] = (np.array(rows, dtype=np.float64), spans)
    return table


# --- anonymization sidecar ----------------------------------------------

def write_anon_maps(maps, path, ids=None) -> None:
    blocks = []
    for i, amap in enumerate(maps):
        lines = []
        if ids is not None and ids[i] is not None:
            lines.append(f"# ::id {ids[i]}")
        for entry in amap.entries:
            lines.append("\t".join([entry.placeholder, str(entry.start), str(entry.end), entry.text]))
        blocks.append("\n".join(lines) if lines else "# ::empty true")
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")

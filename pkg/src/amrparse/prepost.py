"""Corpus preprocessing and prediction postprocessing.

Preprocessing anonymizes entity sub-graphs into ``TYPE_i`` placeholder
nodes (mirrored in the token stream), and strips wiki links, polarity
attributes and predicate senses.  Postprocessing restores majority
senses, regenerates entity sub-graphs from the recorded text spans,
re-adds polarity by lexical rules, and runs a pluggable wikification
hook that defaults to emitting ``:wiki -``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from .graph import AmrGraph

PLACEHOLDER = re.compile(r"^([A-Z][A-Z_]*)_(\d+)$")
_SENSE = re.compile(r"^(.*[a-z])-(\d{2,3})$")
_WORDISH = re.compile(r"^[a-z][a-z0-9]*(-[a-z0-9]+)*$")

MONTHS = ("january", "february", "march", "april", "may", "june", "july",
          "august", "september", "october", "november", "december")
_MONTH_NUM = {name: str(i + 1) for i, name in enumerate(MONTHS)}

NEGATION_WORDS = {"not", "n't", "never", "no", "non", "without", "cannot",
                  "none", "neither", "nor"}
_FUNCTION_WORDS = {"the", "a", "an", "of", "to", "in", "on", "at", "and",
                   "or", "is", "are", "was", "were", "be", "been", "do",
                   "does", "did", "have", "has", "had", "will", "would",
                   "could", "should", "can", "may", "might", "it", "he",
                   "she", "they", "we", "you", "i", "that", "this", "."}


# --- tables carried in the checkpoint -------------------------------------

@dataclass
class SenseTable:
    """Majority sense suffix per lemma, counted on training graphs."""

    majority: dict = field(default_factory=dict)   # lemma -> "01"
    seen_bare: set = field(default_factory=set)    # concepts seen without a sense

    def to_dict(self) -> dict:
        return {"majority": dict(self.majority), "seen_bare": sorted(self.seen_bare)}

    @classmethod
    def from_dict(cls, d: dict) -> "SenseTable":
        return cls(majority=dict(d["majority"]), seen_bare=set(d["seen_bare"]))


@dataclass
class EntityTable:
    """Lowercased span text -> majority entity TYPE, learned in training."""

    spans: dict = field(default_factory=dict)      # "route 66" -> "HIGHWAY"
    max_len: int = 1

    def to_dict(self) -> dict:
        return {"spans": dict(self.spans), "max_len": self.max_len}

    @classmethod
    def from_dict(cls, d: dict) -> "EntityTable":
        return cls(spans=dict(d["spans"]), max_len=int(d["max_len"]))


@dataclass
class Tables:
    sense: SenseTable
    entity: EntityTable

    def to_dict(self) -> dict:
        return {"sense": self.sense.to_dict(), "entity": self.entity.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tables":
        return cls(sense=SenseTable.from_dict(d["sense"]),
                   entity=EntityTable.from_dict(d["entity"]))


# --- sense handling ---------------------------------------------------------

def split_sense(concept: str):
    m = _SENSE.match(concept)
    if m:
        return m.group(1), m.group(2)
    return concept, None


def build_sense_table(graphs) -> SenseTable:
    counts = {}
    table = SenseTable()
    for g in graphs:
        for _, concept in g.nodes:
            base, suffix = split_sense(concept)
            if suffix is not None:
                counts.setdefault(base, Counter())[suffix] += 1
            elif _WORDISH.match(concept):
                table.seen_bare.add(concept)
    for base, ctr in counts.items():
        # majority sense; ties prefer the smallest suffix
        table.majority[base] = sorted(ctr.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return table


def sense_transform(g: AmrGraph, mode: str, table: SenseTable | None = None) -> AmrGraph:
    """Strip trailing ``-NN`` senses, or restore the training majority (-01 unseen)."""
    if mode not in ("strip", "restore"):
        raise ValueError(f"unknown mode {mode!r}")
    nodes = []
    for var, concept in g.nodes:
        if mode == "strip":
            nodes.append((var, split_sense(concept)[0]))
            continue
        if table is None:
            raise ValueError("restore needs a sense table")
        if PLACEHOLDER.match(concept) or not _WORDISH.match(concept) or split_sense(concept)[1]:
            nodes.append((var, concept))
        elif concept in table.majority:
            nodes.append((var, f"{concept}-{table.majority[concept]}"))
        elif concept in table.seen_bare:
            nodes.append((var, concept))
        else:
            nodes.append((var, f"{concept}-01"))
    return AmrGraph(root=g.root, nodes=nodes, edges=g.edges, attributes=g.attributes)


def strip_wiki_polarity(g: AmrGraph) -> AmrGraph:
    attributes = [a for a in g.attributes if a[1] not in ("wiki", "polarity")]
    return AmrGraph(root=g.root, nodes=g.nodes, edges=g.edges, attributes=attributes)


# --- anonymization -----------------------------------------------------------

@dataclass
class AnonEntry:
    placeholder: str
    start: int          # token span, -1 when no span was found
    end: int            # exclusive
    text: str           # original span text (regeneration input)
    kind: str           # "named" or "entity"
    type_name: str      # e.g. HIGHWAY, DATE
    subgraph: tuple = ()  # removed triples, for inspection


@dataclass
class AnonymizationMap:
    entries: list = field(default_factory=list)
    overlaps_dropped: int = 0

    def get(self, placeholder: str):
        for e in self.entries:
            if e.placeholder == placeholder:
                return e
        return None


def concept_to_type(concept: str) -> str:
    if concept == "date-entity":
        return "DATE"
    if concept.endswith("-entity"):
        concept = concept[:-len("-entity")]
    return concept.upper().replace("-", "_")


def type_to_concept(type_name: str):
    """Returns (concept, is_date)."""
    if type_name == "DATE":
        return "date-entity", True
    return type_name.lower().replace("_", "-"), False


def _strip_quotes(value: str) -> str:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def _find_name_span(tokens, parts):
    lowered = [t.lower() for t in tokens]
    wanted = [p.lower() for p in parts]
    for start in range(len(tokens) - len(parts) + 1):
        if lowered[start:start + len(parts)] == wanted:
            return start, start + len(parts)
    return None


def _token_matches_part(token: str, value: str, relation: str) -> bool:
    low = token.lower().rstrip(".,")
    value = value.lower()
    if low == value or low.lstrip("0") == value:
        return True
    if relation == "month" and low in _MONTH_NUM and _MONTH_NUM[low] == value:
        return True
    if relation == "day":
        stripped = re.sub(r"(st|nd|rd|th)$", "", low)
        if stripped == value:
            return True
    return False


def _find_parts_span(tokens, parts):
    """Smallest leftmost window whose tokens cover every (relation, value) part."""
    best = None
    for start in range(len(tokens)):
        for end in range(start + 1, min(len(tokens), start + len(parts) + 2) + 1):
            window = tokens[start:end]
            used = [False] * len(window)
            ok = True
            for rel, value in parts:
                for i, tok in enumerate(window):
                    if not used[i] and _token_matches_part(tok, value, rel):
                        used[i] = True
                        break
                else:
                    ok = False
                    break
            if ok and (best is None or (end - start) < (best[1] - best[0])):
                best = (start, end)
                break
    return best


def _named_entity_heads(g: AmrGraph):
    for var, concept in g.nodes:
        for s, rel, t in g.edges:
            if s == var and rel == "name" and g.concept(t) == "name":
                yield var, t
                break


def anonymize_pair(tokens, pos_tags, lemmas, graph: AmrGraph | None,
                   table: "EntityTable | None" = None):
    """Replace entity sub-graphs and their text spans with TYPE_i placeholders.

    Training mode (graph given) walks the graph for entity heads and maps
    them to token spans; prediction mode (graph None) matches spans seen
    in training plus standalone four-digit years.  Returns the modified
    (tokens, pos, lemmas, flags, graph, AnonymizationMap).
    """
    if graph is None:
        return _anonymize_predict(tokens, pos_tags, lemmas, table)

    type_counts = Counter()
    picked = []  # (var, kind, type_name, span|None, text, removal info)
    concepts = graph.concepts()

    named = dict(_named_entity_heads(graph))
    for var, concept in graph.nodes:
        if var in named:
            name_var = named[var]
            ops = sorted(((rel, val) for v, rel, val in graph.attributes if v == name_var),
                         key=lambda rv: (len(rv[0]), rv[0]))
            parts = [_strip_quotes(val) for _, val in ops]
            type_name = concept_to_type(concept)
            span = _find_name_span(tokens, parts) if parts else None
            text = " ".join(parts)
            picked.append((var, "named", type_name, span, text, name_var))
        elif concept.endswith("-entity"):
            attrs = sorted(((rel, val) for v, rel, val in graph.attributes if v == var),
                           key=lambda rv: rv[0])
            parts = [(rel, _strip_quotes(val)) for rel, val in attrs]
            type_name = concept_to_type(concept)
            span = _find_parts_span(tokens, parts) if parts else None
            text = " ".join(tokens[span[0]:span[1]]) if span else " ".join(v for _, v in parts)
            picked.append((var, "entity", type_name, span, text, None))

    # leftmost-longest on overlapping spans
    amap = AnonymizationMap()
    taken = [False] * len(tokens)
    order = sorted(range(len(picked)),
                   key=lambda i: (picked[i][3] is None, picked[i][3] or (0, 0)))
    accepted = {}
    for i in order:
        var, kind, type_name, span, text, name_var = picked[i]
        if span is not None:
            if any(taken[j] for j in range(span[0], span[1])):
                amap.overlaps_dropped += 1
                span = None
            else:
                for j in range(span[0], span[1]):
                    taken[j] = True
        accepted[var] = (kind, type_name, span, text, name_var)

    # rewrite the graph: placeholder concepts, removed name/attribute material
    new_nodes, new_edges, new_attrs = [], [], []
    drop_vars = set()
    placeholder_of = {}
    for var, concept in graph.nodes:  # graph node order fixes the numbering
        if var in accepted:
            kind, type_name, span, text, name_var = accepted[var]
            placeholder = f"{type_name}_{type_counts[type_name]}"
            type_counts[type_name] += 1
            placeholder_of[var] = placeholder
            removed = []
            if name_var is not None:
                drop_vars.add(name_var)
                removed.append((var, "name", name_var))
                removed.extend(a for a in graph.attributes if a[0] == name_var)
            if kind == "entity":
                removed.extend(a for a in graph.attributes if a[0] == var)
            amap.entries.append(AnonEntry(
                placeholder=placeholder,
                start=span[0] if span else -1, end=span[1] if span else -1,
                text=text, kind=kind, type_name=type_name,
                subgraph=tuple(removed)))
            new_nodes.append((var, placeholder))
        else:
            new_nodes.append((var, concept))
    new_nodes = [(v, c) for v, c in new_nodes if v not in drop_vars]
    for s, rel, t in graph.edges:
        if s in drop_vars or t in drop_vars:
            continue
        if s in accepted and rel == "name":
            continue
        new_edges.append((s, rel, t))
    for v, rel, const in graph.attributes:
        if v in drop_vars:
            continue
        if v in accepted and accepted[v][0] == "entity":
            continue
        new_attrs.append((v, rel, const))
    new_graph = AmrGraph(root=graph.root, nodes=new_nodes, edges=new_edges,
                         attributes=new_attrs)

    tokens, pos_tags, lemmas, flags = _apply_spans(
        tokens, pos_tags, lemmas,
        [(e.start, e.end, e.placeholder) for e in amap.entries if e.start >= 0])
    return tokens, pos_tags, lemmas, flags, new_graph, amap


def _apply_spans(tokens, pos_tags, lemmas, spans):
    spans = sorted(spans)
    out_tok, out_pos, out_lem, flags = [], [], [], []
    i = 0
    by_start = {s: (e, ph) for s, e, ph in spans}
    while i < len(tokens):
        if i in by_start:
            end, placeholder = by_start[i]
            out_tok.append(placeholder)
            out_pos.append(pos_tags[i] if pos_tags else "NNP")
            out_lem.append(placeholder)
            flags.append(1)
            i = end
        else:
            out_tok.append(tokens[i])
            out_pos.append(pos_tags[i] if pos_tags else "NN")
            out_lem.append(lemmas[i])
            flags.append(0)
            i += 1
    return out_tok, out_pos, out_lem, flags


def _anonymize_predict(tokens, pos_tags, lemmas, table: EntityTable | None):
    amap = AnonymizationMap()
    type_counts = Counter()
    spans = []
    i = 0
    table = table or EntityTable()
    lowered = [t.lower() for t in tokens]
    while i < len(tokens):
        matched = None
        for length in range(min(table.max_len, len(tokens) - i), 0, -1):
            key = " ".join(lowered[i:i + length])
            if key in table.spans:
                matched = (length, table.spans[key])
                break
        if matched is None and re.fullmatch(r"[12]\d{3}", tokens[i]):
            matched = (1, "DATE")
        if matched:
            length, type_name = matched
            placeholder = f"{type_name}_{type_counts[type_name]}"
            type_counts[type_name] += 1
            text = " ".join(tokens[i:i + length])
            amap.entries.append(AnonEntry(placeholder, i, i + length, text,
                                          "entity" if type_name == "DATE" else "named",
                                          type_name))
            spans.append((i, i + length, placeholder))
            i += length
        else:
            i += 1
    tokens, pos_tags, lemmas, flags = _apply_spans(tokens, pos_tags, lemmas, spans)
    return tokens, pos_tags, lemmas, flags, None, amap


def build_entity_table(records) -> EntityTable:
    """Span-text -> TYPE majority votes from training-mode anonymization."""
    votes = {}
    max_len = 1
    for rec in records:
        if rec.graph is None or not rec.tokens:
            continue
        lemmas = rec.lemma_list()
        pos = rec.pos or ["NN"] * len(rec.tokens)
        _, _, _, _, _, amap = anonymize_pair(list(rec.tokens), pos, lemmas, rec.graph)
        for e in amap.entries:
            if e.start >= 0:
                key = e.text.lower()
                votes.setdefault(key, Counter())[e.type_name] += 1
                max_len = max(max_len, e.end - e.start)
    spans = {key: ctr.most_common(1)[0][0] for key, ctr in sorted(votes.items())}
    return EntityTable(spans=spans, max_len=max_len)


def _fresh_var(used: set, letter: str) -> str:
    if letter not in used:
        used.add(letter)
        return letter
    i = 2
    while f"{letter}{i}" in used:
        i += 1
    used.add(f"{letter}{i}")
    return f"{letter}{i}"


def deanonymize(g: AmrGraph, amap: AnonymizationMap):
    """Regenerate entity sub-graphs for placeholder nodes from recorded spans.

    Returns (graph, unresolved_count).  Placeholders without a map entry
    become their plain lowercased type concept.
    """
    unresolved = 0
    nodes, edges, attrs = [], list(g.edges), list(g.attributes)
    used = {v for v, _ in g.nodes}
    for var, concept in g.nodes:
        m = PLACEHOLDER.match(concept)
        if not m:
            nodes.append((var, concept))
            continue
        type_name = m.group(1)
        base_concept, is_date = type_to_concept(type_name)
        entry = amap.get(concept) if amap is not None else None
        if entry is None:
            nodes.append((var, base_concept))
            unresolved += 1
            continue
        nodes.append((var, base_concept))
        words = entry.text.split()
        if is_date:
            for tok in words:
                low = tok.lower().rstrip(".,")
                if re.fullmatch(r"[12]\d{3}", low):
                    attrs.append((var, "year", low))
                elif low in _MONTH_NUM:
                    attrs.append((var, "month", _MONTH_NUM[low]))
                else:
                    stripped = re.sub(r"(st|nd|rd|th)$", "", low)
                    if stripped.isdigit() and 1 <= int(stripped) <= 31:
                        attrs.append((var, "day", str(int(stripped))))
        else:
            name_var = _fresh_var(used, "n")
            nodes.append((name_var, "name"))
            edges.append((var, "name", name_var))
            for i, word in enumerate(words, start=1):
                attrs.append((name_var, f"op{i}", f'"{word}"'))
    return AmrGraph(root=g.root, nodes=nodes, edges=edges, attributes=attrs), unresolved


# --- polarity ------------------------------------------------------------------

def is_negation(token: str) -> bool:
    low = token.lower()
    return low in NEGATION_WORDS or low.endswith("n't")


_AUXILIARIES = {"do", "does", "did", "be", "is", "are", "was", "were", "been",
                "have", "has", "had", "can", "could", "will", "would",
                "should", "may", "might", "must"}


def _is_content_word(token: str, pos: str | None) -> bool:
    if token.lower() in _AUXILIARIES:
        return False
    if pos:
        return pos[0] in "NVJR" and pos != "RB"
    return token.lower() not in _FUNCTION_WORDS and token.isalpha()


def _modified_word(i: int, tokens, pos_tags):
    for j in range(i + 1, len(tokens)):
        if _is_content_word(tokens[j], pos_tags[j] if pos_tags else None):
            return j
    for j in range(i - 1, -1, -1):
        if _is_content_word(tokens[j], pos_tags[j] if pos_tags else None):
            return j
    return None


def _mapped_node(word: str, lemma: str, g: AmrGraph):
    low = word.lower()
    for var, concept in g.nodes:
        if concept == lemma or concept == low:
            return var
    for var, concept in g.nodes:
        if split_sense(concept)[0] in (lemma, low):
            return var
    return None


def add_polarity(tokens, g: AmrGraph, pos_tags=None, lemmas=None):
    """Attach ``:polarity -`` to nodes modified by negation tokens.

    Idempotent; returns (graph, unmatched_count) where unmatched counts
    negation tokens whose modified word maps to no node.
    """
    lemmas = list(lemmas) if lemmas is not None else [t.lower() for t in tokens]
    attrs = list(g.attributes)
    have = {(v, r) for v, r, _ in attrs}
    unmatched = 0
    for i, tok in enumerate(tokens):
        if not is_negation(tok):
            continue
        j = _modified_word(i, tokens, pos_tags)
        var = _mapped_node(tokens[j], lemmas[j], g) if j is not None else None
        if var is None:
            unmatched += 1
            continue
        if (var, "polarity") not in have:
            attrs.append((var, "polarity", "-"))
            have.add((var, "polarity"))
    return AmrGraph(root=g.root, nodes=g.nodes, edges=g.edges, attributes=attrs), unmatched


# --- wikification hook -----------------------------------------------------------

def wikify(g: AmrGraph, linker=None) -> AmrGraph:
    """Attach ``:wiki`` to named-entity heads; the default linker emits ``-``."""
    named = dict(_named_entity_heads(g))
    attrs = list(g.attributes)
    have = {(v, r) for v, r, _ in attrs}
    for var, name_var in named.items():
        if (var, "wiki") in have:
            continue
        if linker is None:
            attrs.append((var, "wiki", "-"))
        else:
            parts = [_strip_quotes(val) for v, rel, val in g.attributes if v == name_var]
            link = linker(" ".join(parts))
            attrs.append((var, "wiki", link if link else "-"))
    return AmrGraph(root=g.root, nodes=g.nodes, edges=g.edges, attributes=attrs)

"""Codec for PENMAN notation: parenthesized concept graphs with variables.

Decoding resolves reentrant variable references to edges and keeps
constants (numbers, quoted strings, ``-``/``+``, bare words) as
attributes.  Encoding is deterministic: children are emitted in sorted
order, variables are renamed to first-letter-plus-counter style, and the
second and later references to a variable appear as bare tokens.
"""

from __future__ import annotations

import re

from .graph import AmrGraph, validate_graph


class PenmanError(ValueError):
    """Malformed PENMAN input or an unserializable graph."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


_SYMBOL_BREAK = set(' \t\r\n()"/')
# bare tokens shaped like variables (letter plus optional digits); longer
# bare words such as `imperative` are attribute constants
_VAR_SHAPED = re.compile(r"^[A-Za-z][0-9]*$")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, ch: str):
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        self.pos += 1

    def tokens(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance(ch)
                continue
            line, col = self.line, self.col
            if ch in "()/":
                self._advance(ch)
                yield (ch, ch, line, col)
            elif ch == '"':
                start = self.pos
                self._advance(ch)
                while self.pos < len(text) and text[self.pos] != '"':
                    if text[self.pos] == "\\" and self.pos + 1 < len(text):
                        self._advance(text[self.pos])
                    self._advance(text[self.pos])
                if self.pos >= len(text):
                    raise PenmanError("unterminated string", line, col)
                self._advance('"')
                yield ("string", text[start:self.pos], line, col)
            elif ch == ":":
                start = self.pos
                self._advance(ch)
                while self.pos < len(text) and text[self.pos] not in _SYMBOL_BREAK:
                    self._advance(text[self.pos])
                if self.pos == start + 1:
                    raise PenmanError("empty relation name", line, col)
                yield ("role", text[start + 1:self.pos], line, col)
            else:
                start = self.pos
                while self.pos < len(text) and text[self.pos] not in _SYMBOL_BREAK and text[self.pos] != ":":
                    self._advance(text[self.pos])
                yield ("symbol", text[start:self.pos], line, col)
        yield ("eof", "", self.line, self.col)


class _Parser:
    def __init__(self, text: str):
        self._stream = _Scanner(text).tokens()
        self.tok = next(self._stream)

    def _next(self):
        self.tok = next(self._stream)

    def _expect(self, kind: str, what: str):
        if self.tok[0] != kind:
            raise PenmanError(f"expected {what}, found {self.tok[1]!r}", self.tok[2], self.tok[3])
        tok = self.tok
        self._next()
        return tok

    def parse(self):
        node = self._node()
        if self.tok[0] != "eof":
            raise PenmanError(f"trailing input {self.tok[1]!r}", self.tok[2], self.tok[3])
        return node

    def _node(self):
        self._expect("(", "'('")
        var_tok = self._expect("symbol", "a variable")
        self._expect("/", "'/'")
        concept_tok = self._expect("symbol", "a concept")
        relations = []
        while self.tok[0] == "role":
            role = self.tok[1]
            self._next()
            if self.tok[0] == "(":
                relations.append((role, self._node()))
            elif self.tok[0] in ("symbol", "string"):
                relations.append((role, ("leaf", self.tok[0], self.tok[1], self.tok[2], self.tok[3])))
                self._next()
            else:
                raise PenmanError(f"expected a value after :{role}", self.tok[2], self.tok[3])
        self._expect(")", "')'")
        return ("node", var_tok[1], concept_tok[1], relations, var_tok[2], var_tok[3])


def penman_decode(text: str) -> AmrGraph:
    """Parse one PENMAN expression into an AmrGraph.

    Raises PenmanError with line/column on syntax errors, on duplicate
    variable definitions, and on bare variable-shaped tokens that are
    never defined anywhere in the expression.
    """
    ast = _Parser(text).parse()

    defined = {}
    def collect(node):
        _, var, concept, relations, line, col = node
        if var in defined:
            raise PenmanError(f"duplicate definition of variable {var!r}", line, col)
        defined[var] = concept
        for _, value in relations:
            if value[0] == "node":
                collect(value)
    collect(ast)

    nodes, edges, attributes = [], [], []
    def build(node):
        _, var, concept, relations, _, _ = node
        nodes.append((var, concept))
        for role, value in relations:
            if value[0] == "node":
                edges.append((var, role, value[1]))
                build(value)
            else:
                _, kind, text_, line, col = value
                if kind == "symbol" and text_ in defined:
                    edges.append((var, role, text_))
                elif kind == "symbol" and _VAR_SHAPED.match(text_):
                    raise PenmanError(f"undefined variable reference {text_!r}", line, col)
                else:
                    attributes.append((var, role, text_))
    build(ast)

    return AmrGraph(root=ast[1], nodes=nodes, edges=edges, attributes=attributes)


def _sorted_payloads(g: AmrGraph, var: str) -> list:
    # edges and attributes of one node interleaved deterministically
    items = []
    for s, rel, t in g.edges:
        if s == var:
            items.append((rel, 0, g.concept(t), ("edge", t)))
    for v, rel, const in g.attributes:
        if v == var:
            items.append((rel, 1, const, ("attr", const)))
    items.sort(key=lambda it: (it[0], it[1], it[2], it[3][1]))
    return [(rel, payload) for rel, _, _, payload in items]


def _canonical_names(g: AmrGraph) -> dict:
    names = {}
    used = {}
    def visit(var):
        if var in names:
            return
        concept = g.concept(var)
        letter = concept[0].lower() if concept[:1].isalpha() else "x"
        used[letter] = used.get(letter, 0) + 1
        names[var] = letter if used[letter] == 1 else f"{letter}{used[letter]}"
        for _, payload in _sorted_payloads(g, var):
            if payload[0] == "edge":
                visit(payload[1])
    visit(g.root)
    return names


def penman_encode(g: AmrGraph) -> str:
    """Serialize an AmrGraph to PENMAN text (deterministic, multi-line)."""
    problems = validate_graph(g)
    if problems:
        raise PenmanError("cannot encode invalid graph: " + "; ".join(problems))

    names = _canonical_names(g)
    if len(names) < len(g.nodes):
        missing = sorted(set(g.variables) - set(names))
        raise PenmanError(
            f"nodes {missing} not reachable from the root along edge direction; "
            "opaque relation labels cannot express them")

    emitted = set()
    def emit(var, depth):
        emitted.add(var)
        parts = [f"({names[var]} / {g.concept(var)}"]
        pad = "    " * (depth + 1)
        for rel, payload in _sorted_payloads(g, var):
            if payload[0] == "attr":
                parts.append(f"\n{pad}:{rel} {payload[1]}")
            elif payload[1] in emitted:
                parts.append(f"\n{pad}:{rel} {names[payload[1]]}")
            else:
                parts.append(f"\n{pad}:{rel} " + emit(payload[1], depth + 1))
        parts.append(")")
        return "".join(parts)

    return emit(g.root, 0)

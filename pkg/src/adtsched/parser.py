"""Line-oriented ``.adt`` text format.

One declaration per line, ``#`` starts a comment::

    attack b time=60 cost=500
    defence p time=10 cost=100
    gate ST = AND(b, f) time=2
    gate TS = CAND(TF, p)
    root TS

Omitted ``time``/``cost`` default to 0. Gates may also carry an opaque
``cond="..."`` predicate, which is stored but never evaluated.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .model import (ARITY, COUNTERING, Adt, AdtNode, GateKind, Side,
                    propagate_sides, validate)

_GATES = {k.value: k for k in GateKind if k not in (GateKind.LEAF, GateKind.NULL)}
_ID = r"[A-Za-z_][A-Za-z0-9_]*"
_TOKEN = re.compile(
    rf"""\s*(?:
        (?P<str>"(?:[^"\\]|\\.)*")
      | (?P<int>[0-9]+)
      | (?P<id>{_ID})
      | (?P<punct>[=(),])
      | (?P<bad>\S)
    )""",
    re.VERBOSE,
)


class ErrorKind(enum.Enum):
    SYNTAX = "Syntax"
    UNKNOWN_ID = "UnknownId"
    DUPLICATE_ID = "DuplicateId"
    ARITY_MISMATCH = "ArityMismatch"
    STRUCTURE = "Structure"


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    kind: ErrorKind

    def __str__(self):
        return f"{self.span}: {self.kind.value}: {self.message}"


class AdtParseError(ValueError):
    """Raised by :func:`load` and :func:`parse_or_raise`; carries every error found."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(line: str):
    pos = 0
    toks = []
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None or m.end() == pos:
            break
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    return toks


class _LineParser:
    """Recursive descent over the tokens of a single declaration."""

    def __init__(self, toks, lineno):
        self.toks = toks
        self.i = 0
        self.lineno = lineno

    def span(self, tok=None):
        if tok is None:
            tok = self.toks[self.i] if self.i < len(self.toks) else None
        col = tok.col if tok else (self.toks[-1].col + len(self.toks[-1].text) if self.toks else 1)
        return SourceSpan(self.lineno, col)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def fail(self, msg, tok=None):
        raise _Fail(ParseError(self.span(tok), msg, ErrorKind.SYNTAX))

    def expect(self, kind, text=None, what=None):
        tok = self.peek()
        if tok is None or tok.kind != kind or (text is not None and tok.text != text):
            found = "end of line" if tok is None else repr(tok.text)
            self.fail(f"expected {what or text or kind}, found {found}")
        self.i += 1
        return tok

    def attrs(self):
        out = {}
        while self.peek() is not None:
            key = self.expect("id", what="attribute name")
            if key.text not in ("time", "cost", "cond"):
                self.fail(f"unknown attribute {key.text!r}", key)
            if key.text in out:
                self.fail(f"attribute {key.text!r} given twice", key)
            self.expect("punct", "=")
            if key.text == "cond":
                val = self.expect("str", what="quoted condition")
                out["cond"] = (re.sub(r"\\(.)", r"\1", val.text[1:-1]), key)
            else:
                val = self.expect("int", what="non-negative integer")
                out[key.text] = (int(val.text), key)
        return out


class _Fail(Exception):
    def __init__(self, err):
        self.err = err


@dataclass
class _Decl:
    node: AdtNode
    span: SourceSpan
    child_spans: tuple[SourceSpan, ...] = ()


def _parse_line(toks, lineno):
    """Return ('decl', _Decl) | ('root', (id, span)) for one non-empty line."""
    p = _LineParser(toks, lineno)
    head = p.expect("id", what="'attack', 'defence', 'gate' or 'root'")
    if head.text in ("attack", "defence"):
        name = p.expect("id", what="node identifier")
        attrs = p.attrs()
        if "cond" in attrs:
            p.fail("conditions are only allowed on gates", attrs["cond"][1])
        side = Side.ATTACK if head.text == "attack" else Side.DEFENCE
        node = AdtNode(name.text, GateKind.LEAF, side,
                       attrs.get("time", (0,))[0], attrs.get("cost", (0,))[0])
        return "decl", _Decl(node, p.span(name))
    if head.text == "gate":
        name = p.expect("id", what="node identifier")
        p.expect("punct", "=")
        kind_tok = p.expect("id", what="gate kind")
        kind = _GATES.get(kind_tok.text.upper())
        if kind is None:
            p.fail(f"unknown gate kind {kind_tok.text!r}", kind_tok)
        p.expect("punct", "(")
        children, spans = [], []
        while True:
            c = p.expect("id", what="child identifier")
            children.append(c.text)
            spans.append(p.span(c))
            sep = p.expect("punct", what="',' or ')'")
            if sep.text == ")":
                break
            if sep.text != ",":
                p.fail("expected ',' or ')'", sep)
        attrs = p.attrs()
        node = AdtNode(name.text, kind, Side.ATTACK,
                       attrs.get("time", (0,))[0], attrs.get("cost", (0,))[0],
                       tuple(children), attrs.get("cond", (None,))[0])
        return "decl", _Decl(node, p.span(name), tuple(spans))
    if head.text == "root":
        name = p.expect("id", what="node identifier")
        if p.peek() is not None:
            p.fail("unexpected trailing input")
        return "root", (name.text, p.span(name))
    p.fail(f"unknown declaration {head.text!r}", head)


def _strip_comment(line: str) -> str:
    in_str = False
    esc = False
    for i, ch in enumerate(line):
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "#":
            return line[:i]
    return line


def parse(text: str | bytes) -> Adt | list[ParseError]:
    """Parse a whole file. Returns the tree, or every error found."""
    errors: list[ParseError] = []
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            return [ParseError(SourceSpan(1, 1), f"input is not UTF-8: {exc.reason}",
                               ErrorKind.SYNTAX)]

    decls: dict[str, _Decl] = {}
    roots: list[tuple[str, SourceSpan]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        toks = _tokenize(line)
        bad = next((t for t in toks if t.kind == "bad"), None)
        if bad is not None:
            errors.append(ParseError(SourceSpan(lineno, bad.col),
                                     f"unexpected character {bad.text!r}", ErrorKind.SYNTAX))
            continue
        try:
            what, payload = _parse_line(toks, lineno)
        except _Fail as f:
            errors.append(f.err)
            continue
        if what == "root":
            roots.append(payload)
            continue
        decl = payload
        if decl.node.id in decls:
            first = decls[decl.node.id].span
            errors.append(ParseError(decl.span, f"{decl.node.id!r} already declared at {first}",
                                     ErrorKind.DUPLICATE_ID))
            continue
        decls[decl.node.id] = decl

    # resolution
    referenced: set[str] = set()
    for decl in decls.values():
        node = decl.node
        for c, span in zip(node.children, decl.child_spans):
            referenced.add(c)
            if c not in decls:
                errors.append(ParseError(span, f"child {c!r} is never declared",
                                         ErrorKind.UNKNOWN_ID))
        k = len(node.children)
        if node.kind in COUNTERING and k != 2:
            errors.append(ParseError(decl.span,
                                     f"{node.kind.value} takes (attack, defence), got {k} children",
                                     ErrorKind.ARITY_MISMATCH))
        elif node.kind in (GateKind.AND, GateKind.OR, GateKind.SAND) and k < 2:
            errors.append(ParseError(decl.span,
                                     f"{node.kind.value} needs at least 2 children, got {k}",
                                     ErrorKind.ARITY_MISMATCH))

    # a line that failed to parse would make these checks report phantoms
    syntax_failed = any(e.kind is ErrorKind.SYNTAX for e in errors)
    if not roots and not syntax_failed:
        if decls:
            errors.append(ParseError(SourceSpan(max(1, len(text.splitlines())), 1),
                                     "missing 'root' declaration", ErrorKind.STRUCTURE))
        else:
            errors.append(ParseError(SourceSpan(1, 1), "empty file", ErrorKind.STRUCTURE))
    for name, span in roots[1:]:
        errors.append(ParseError(span, "duplicate 'root' declaration", ErrorKind.DUPLICATE_ID))
    if roots and not syntax_failed:
        name, span = roots[0]
        if name not in decls:
            errors.append(ParseError(span, f"root {name!r} is never declared",
                                     ErrorKind.UNKNOWN_ID))
        elif name in referenced:
            errors.append(ParseError(span, f"root {name!r} is used as a child",
                                     ErrorKind.STRUCTURE))
        unreferenced = [d for n, d in decls.items() if n not in referenced and n != name]
        for d in unreferenced:
            errors.append(ParseError(d.span, f"{d.node.id!r} is neither the root nor a child",
                                     ErrorKind.STRUCTURE))
    if errors:
        return sorted(errors, key=lambda e: (e.span.line, e.span.column))

    root = roots[0][0]
    table = propagate_sides(root, {n: d.node for n, d in decls.items()})
    adt = Adt(root, table)
    for v in validate(adt):
        span = decls[v.node].span if v.node in decls else SourceSpan(1, 1)
        kind = ErrorKind.ARITY_MISMATCH if v.rule == ARITY else ErrorKind.STRUCTURE
        errors.append(ParseError(span, f"{v.rule}: {v.message}", kind))
    if errors:
        return sorted(errors, key=lambda e: (e.span.line, e.span.column))
    return adt


def parse_or_raise(text: str | bytes) -> Adt:
    result = parse(text)
    if isinstance(result, list):
        raise AdtParseError(result)
    return result


def load(path) -> Adt:
    with open(path, "rb") as fh:
        return parse_or_raise(fh.read())


def _attrs(node: AdtNode) -> str:
    parts = []
    if node.duration:
        parts.append(f"time={node.duration}")
    if node.cost:
        parts.append(f"cost={node.cost}")
    if node.condition is not None:
        esc = node.condition.replace("\\", "\\\\").replace('"', '\\"')
        parts.append(f'cond="{esc}"')
    return (" " + " ".join(parts)) if parts else ""


def serialize(adt: Adt) -> str:
    """Emit declarations in pre-order from the root, then the ``root`` line."""
    lines = []
    for node in adt.walk():
        if node.kind is GateKind.LEAF:
            lines.append(f"{node.side.value} {node.id}{_attrs(node)}")
        else:
            lines.append(f"gate {node.id} = {node.kind.value}({', '.join(node.children)}){_attrs(node)}")
    lines.append(f"root {adt.root}")
    return "\n".join(lines) + "\n"

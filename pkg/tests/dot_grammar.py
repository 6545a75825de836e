"""Small checker for the DOT language (graph/stmt_list/node/edge/attr
statements, ID = identifier | numeral | quoted string). Returns the parsed
nodes and edges or raises ValueError."""

import re

_TOKEN = re.compile(r'''\s*(?:
    (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<num>-?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?))
  | (?P<id>[A-Za-z_\x80-￿][A-Za-z_0-9\x80-￿]*)
  | (?P<arrow>->|--)
  | (?P<punct>[{}\[\];,=:])
  | (?P<bad>\S)
)''', re.VERBOSE)

KEYWORDS = {"strict", "graph", "digraph", "node", "edge", "subgraph"}


def _tokens(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        pos = m.end()
        if m.lastgroup == "bad":
            raise ValueError(f"bad character {m.group('bad')!r}")
        out.append((m.lastgroup, m.group(m.lastgroup)))
    return out


def check_dot(text):
    toks = _tokens(text)
    i = 0
    nodes, edges = {}, []

    def peek():
        return toks[i] if i < len(toks) else (None, None)

    def take(kind=None, value=None):
        nonlocal i
        k, v = peek()
        if k is None or (kind and k != kind) or (value and v.lower() != value):
            raise ValueError(f"expected {value or kind}, got {v!r}")
        i += 1
        return v

    def ident():
        k, v = peek()
        if k == "str":
            take()
            return v[1:-1].replace('\\"', '"')
        if k in ("id", "num") and v.lower() not in KEYWORDS:
            take()
            return v
        raise ValueError(f"expected ID, got {v!r}")

    def attr_list():
        attrs = {}
        while peek() == ("punct", "["):
            take()
            while peek() != ("punct", "]"):
                key = ident()
                take("punct", "=")
                attrs[key] = ident()
                if peek()[1] in (",", ";"):
                    take()
            take("punct", "]")
        return attrs

    if peek()[1] and peek()[1].lower() == "strict":
        take()
    kind = take("id").lower()
    if kind not in ("graph", "digraph"):
        raise ValueError("expected graph or digraph")
    arrow = "->" if kind == "digraph" else "--"
    if peek()[0] != "punct":
        ident()
    take("punct", "{")
    while peek() != ("punct", "}"):
        k, v = peek()
        if k == "id" and v.lower() in ("graph", "node", "edge"):
            take()
            attr_list()
        else:
            a = ident()
            if peek()[0] == "punct" and peek()[1] == "=":
                take()
                ident()
            elif peek()[0] == "arrow":
                chain = [a]
                while peek()[0] == "arrow":
                    if take("arrow") != arrow:
                        raise ValueError("wrong edge operator")
                    chain.append(ident())
                attr_list()
                edges.extend(zip(chain, chain[1:]))
                for n in chain:
                    nodes.setdefault(n, {})
            else:
                nodes[a] = attr_list()
        if peek() == ("punct", ";"):
            take()
    take("punct", "}")
    if i != len(toks):
        raise ValueError("trailing tokens after graph")
    return nodes, edges

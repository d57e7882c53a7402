"""BIM knowledge graph and its Turtle serialization.

Nodes are building objects named ``<class>_<id>``; edges are the three
relation predicates. Only the subset of Turtle that
:func:`serialize_turtle` emits is parsed back:

* ``@prefix name: <iri> .`` declarations,
* statements ``subject predicate object`` with ``;`` and ``,``
  continuations, terminated by ``.``,
* prefixed names, the keyword ``a``, and plain string literals,
* ``#`` comments.

Numeric attributes are stored as plain string literals with 9 significant
digits, so :func:`build_graph` rounds them to that precision up front and
serialization round-trips exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .attributes import AttributeMap
from .errors import (
    GraphIntegrityError,
    LookupFailure,
    MultiplicityError,
    ReferentialIntegrityError,
    TurtleParseError,
)
from .records import check_object_id
from .relations import ADJACENT, HOSTED, HOSTING, PREDICATES, Relation

CBIM = "https://w3id.org/cbim#"
INST = "https://example.org/bimenrich/inst#"
ATTR = "https://example.org/bimenrich/attr#"
PREFIXES = (("cbim", CBIM), ("inst", INST), ("attr", ATTR))
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

CLASS_TERMS = {"wall": "Wall", "floor": "Floor", "window": "Window", "door": "Door"}
_TERM_CLASSES = {v: k for k, v in CLASS_TERMS.items()}
CENTRAL_POINT = "centralPoint"
FLAG = "flag"


def canonical_number(value: float) -> float:
    return float(f"{float(value):.9g}")


def _fmt(value: float) -> str:
    return f"{value:.9g}"


@dataclass
class Node:
    name: str
    object_class: str
    attributes: AttributeMap
    source_id: str


@dataclass
class BimGraph:
    nodes: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)

    def __post_init__(self):
        self.nodes = dict(sorted(self.nodes.items()))
        self.edges = sorted(set(self.edges))
        validate_graph(self)

    def node_for_id(self, source_id: str) -> Node:
        for node in self.nodes.values():
            if node.source_id == source_id:
                return node
        raise LookupFailure(f"no node for object id {source_id!r}")


def node_name(object_class: str, obj_id: str) -> str:
    if object_class not in CLASS_TERMS:
        raise ValueError(f"unknown object class {object_class!r}")
    return f"{object_class}_{check_object_id(obj_id)}"


def split_node_name(name: str) -> tuple:
    object_class, sep, obj_id = name.partition("_")
    if not sep or object_class not in CLASS_TERMS or not obj_id:
        raise GraphIntegrityError(f"node name {name!r} is not <class>_<id>")
    return object_class, obj_id


def validate_graph(graph: BimGraph) -> None:
    for name, node in graph.nodes.items():
        if name != node_name(node.object_class, node.source_id):
            raise GraphIntegrityError(f"node {name!r} does not match its class and id")
    edges = set(graph.edges)
    hosts = {}
    for e in edges:
        for end in (e.subject, e.object):
            if end not in graph.nodes:
                raise ReferentialIntegrityError(f"edge {e} references unknown node {end!r}")
        if e.predicate == ADJACENT:
            mate = Relation(e.object, ADJACENT, e.subject)
        elif e.predicate == HOSTING:
            mate = Relation(e.object, HOSTED, e.subject)
        else:
            mate = Relation(e.object, HOSTING, e.subject)
            hosts.setdefault(e.subject, []).append(e.object)
        if mate not in edges:
            raise GraphIntegrityError(f"edge {e} lacks its counterpart {mate}")
    for hosted, found in hosts.items():
        if len(found) > 1:
            raise MultiplicityError(f"{hosted} has {len(found)} hosts: {sorted(found)}")


def _canonical_attributes(attrs: AttributeMap) -> AttributeMap:
    return AttributeMap(
        {k: canonical_number(v) for k, v in sorted(attrs.values.items())},
        tuple(canonical_number(v) for v in attrs.central_point),
        tuple(sorted(attrs.flags)),
    )


def build_graph(records, relations) -> BimGraph:
    """Graph from classified, attributed records and id-level relations."""
    names = {}
    nodes = {}
    for rec in records:
        if rec.id in names:
            raise GraphIntegrityError(f"duplicate object id {rec.id!r}")
        if rec.attributes is None:
            raise ValueError(f"record {rec.id!r} has no attributes")
        name = node_name(rec.object_class, rec.id)
        names[rec.id] = name
        nodes[name] = Node(name, rec.object_class, _canonical_attributes(rec.attributes), rec.id)
    edges = []
    for r in relations:
        for end in (r.subject, r.object):
            if end not in names:
                raise ReferentialIntegrityError(f"relation {r} references unknown id {end!r}")
        edges.append(Relation(names[r.subject], r.predicate, names[r.object]))
    return BimGraph(nodes, edges)


# --- queries ------------------------------------------------------------------


def _require_node(graph, name):
    if name not in graph.nodes:
        raise LookupFailure(f"unknown node {name!r}")


def query_host(graph: BimGraph, name: str):
    """The node hosting ``name`` (via its ``hosted`` edge), or None."""
    _require_node(graph, name)
    hosts = [e.object for e in graph.edges if e.subject == name and e.predicate == HOSTED]
    if len(hosts) > 1:
        raise MultiplicityError(f"{name} has {len(hosts)} hosts")
    return hosts[0] if hosts else None


def query_hosted(graph: BimGraph, name: str) -> list:
    _require_node(graph, name)
    return sorted(e.object for e in graph.edges if e.subject == name and e.predicate == HOSTING)


def query_adjacent(graph: BimGraph, name: str) -> list:
    _require_node(graph, name)
    return sorted(e.object for e in graph.edges if e.subject == name and e.predicate == ADJACENT)


# --- Turtle output ------------------------------------------------------------


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_turtle(graph: BimGraph) -> str:
    out = [f"@prefix {p}: <{iri}> ." for p, iri in PREFIXES]
    out.append("")
    by_subject = {}
    for e in graph.edges:
        by_subject.setdefault(e.subject, []).append(e)
    for name, node in graph.nodes.items():
        attrs = node.attributes
        pairs = [(f"attr:{k}", _quote(_fmt(v))) for k, v in attrs.values.items()]
        pairs.append((f"attr:{CENTRAL_POINT}", _quote(" ".join(_fmt(v) for v in attrs.central_point))))
        pairs += [(f"attr:{FLAG}", _quote(f)) for f in attrs.flags]
        pairs.sort()
        lines = [f"inst:{name} a cbim:{CLASS_TERMS[node.object_class]}"]
        lines += [f"    {p} {o}" for p, o in pairs]
        out.append(" ;\n".join(lines) + " .")
        rels = sorted(by_subject.get(name, []), key=lambda e: (e.predicate, e.object))
        out += [f"inst:{e.subject} cbim:{e.predicate} inst:{e.object} ." for e in rels]
    return "\n".join(out) + "\n"


# --- Turtle input -------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"\s]*>)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<prefix>@prefix\b)
  | (?P<pname>[A-Za-z][A-Za-z0-9_-]*:[A-Za-z0-9_][A-Za-z0-9_-]*|[A-Za-z][A-Za-z0-9_-]*:)
  | (?P<a>a(?![A-Za-z0-9_:-]))
  | (?P<punct>[;.,])
    """,
    re.VERBOSE,
)


def _tokens(text):
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TurtleParseError(f"unexpected text {text[pos:pos + 20]!r}", line)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind not in ("ws", "comment"):
            yield kind, m.group(), line
        pos = m.end()


def _unquote(token: str) -> str:
    return re.sub(r"\\(.)", r"\1", token[1:-1])


def parse_turtle(text: str) -> BimGraph:
    """Parse Turtle written by :func:`serialize_turtle` into a validated graph."""
    toks = list(_tokens(text))
    prefixes = {}
    triples = []
    i = 0

    def expect(kind, value=None):
        nonlocal i
        if i >= len(toks):
            raise TurtleParseError(f"unexpected end of input, expected {value or kind}",
                                   toks[-1][2] if toks else 1)
        k, v, ln = toks[i]
        if k != kind or (value is not None and v != value):
            raise TurtleParseError(f"expected {value or kind}, got {v!r}", ln)
        i += 1
        return v, ln

    def expand(v, ln):
        p, _, local = v.partition(":")
        if p not in prefixes:
            raise TurtleParseError(f"unknown prefix {p!r}", ln)
        return prefixes[p] + local

    def term(allow_literal):
        nonlocal i
        if i >= len(toks):
            raise TurtleParseError("unexpected end of input", toks[-1][2] if toks else 1)
        k, v, ln = toks[i]
        i += 1
        if k == "pname":
            return ("iri", expand(v, ln)), ln
        if k == "iri":
            return ("iri", v[1:-1]), ln
        if k == "string" and allow_literal:
            return ("lit", _unquote(v)), ln
        raise TurtleParseError(f"unexpected token {v!r}", ln)

    while i < len(toks):
        kind, value, line = toks[i]
        if kind == "prefix":
            i += 1
            name, ln = expect("pname")
            if not name.endswith(":"):
                raise TurtleParseError(f"bad prefix name {name!r}", ln)
            iri, _ = expect("iri")
            expect("punct", ".")
            prefixes[name[:-1]] = iri[1:-1]
            continue
        subject, sline = term(False)
        while True:
            if i < len(toks) and toks[i][0] == "a":
                pred, pline = ("iri", RDF_TYPE), toks[i][2]
                i += 1
            else:
                pred, pline = term(False)
            while True:
                obj, oline = term(True)
                triples.append((subject[1], pred[1], obj, oline))
                if i < len(toks) and toks[i][1] == ",":
                    i += 1
                    continue
                break
            sep, ln = expect("punct")
            if sep == ";":
                continue
            if sep == ".":
                break
            raise TurtleParseError(f"unexpected {sep!r}", ln)
    return _graph_from_triples(triples)


def _local(iri, namespace, line, what):
    if not iri.startswith(namespace):
        raise TurtleParseError(f"{what} {iri!r} outside namespace {namespace}", line)
    return iri[len(namespace):]


def _number(text, line):
    try:
        return float(text)
    except ValueError as exc:
        raise TurtleParseError(f"non-numeric literal {text!r}", line) from exc


def _graph_from_triples(triples) -> BimGraph:
    classes = {}
    values = {}
    points = {}
    flags = {}
    edges = []
    for s, p, (okind, o), line in triples:
        subj = _local(s, INST, line, "subject")
        if p == RDF_TYPE:
            if okind != "iri":
                raise TurtleParseError("rdf:type object must be a class term", line)
            term = _local(o, CBIM, line, "class")
            if term not in _TERM_CLASSES:
                raise TurtleParseError(f"unknown class cbim:{term}", line)
            if subj in classes and classes[subj] != _TERM_CLASSES[term]:
                raise GraphIntegrityError(f"{subj} typed twice")
            classes[subj] = _TERM_CLASSES[term]
        elif p.startswith(CBIM):
            pred = p[len(CBIM):]
            if pred not in PREDICATES or okind != "iri":
                raise TurtleParseError(f"unsupported relation triple cbim:{pred}", line)
            edges.append((subj, pred, _local(o, INST, line, "object")))
        elif p.startswith(ATTR):
            key = p[len(ATTR):]
            if okind != "lit":
                raise TurtleParseError(f"attribute attr:{key} needs a literal", line)
            if key == CENTRAL_POINT:
                parts = o.split()
                if len(parts) != 3:
                    raise TurtleParseError("centralPoint needs three numbers", line)
                points[subj] = tuple(_number(x, line) for x in parts)
            elif key == FLAG:
                flags.setdefault(subj, []).append(o)
            else:
                values.setdefault(subj, {})[key] = _number(o, line)
        else:
            raise TurtleParseError(f"unsupported predicate {p!r}", line)

    nodes = {}
    for name, object_class in classes.items():
        cls_from_name, obj_id = split_node_name(name)
        if cls_from_name != object_class:
            raise GraphIntegrityError(f"{name} is typed {object_class}")
        if name not in points:
            raise GraphIntegrityError(f"{name} has no centralPoint")
        attrs = AttributeMap(dict(sorted(values.get(name, {}).items())), points[name],
                             tuple(sorted(flags.get(name, []))))
        nodes[name] = Node(name, object_class, attrs, obj_id)
    untyped = (set(values) | set(points) | set(flags)) - set(classes)
    if untyped:
        raise GraphIntegrityError(f"attributes on untyped nodes: {sorted(untyped)}")
    rels = []
    for s, p, o in edges:
        for end in (s, o):
            if end not in nodes:
                raise ReferentialIntegrityError(f"relation endpoint {end!r} is not a typed node")
        rels.append(Relation(s, p, o))
    return BimGraph(nodes, rels)


def write_turtle(graph: BimGraph, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(serialize_turtle(graph))


def read_turtle(path) -> BimGraph:
    with open(path) as fh:
        return parse_turtle(fh.read())

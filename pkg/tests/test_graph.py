import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimenrich.attributes import AttributeMap, compute_attributes
from bimenrich.errors import (
    GraphIntegrityError,
    LookupFailure,
    MultiplicityError,
    ReferentialIntegrityError,
    TurtleParseError,
)
from bimenrich.graph import (
    BimGraph,
    Node,
    build_graph,
    parse_turtle,
    query_adjacent,
    query_host,
    query_hosted,
    read_turtle,
    serialize_turtle,
    write_turtle,
)
from bimenrich.relations import ADJACENT, HOSTED, HOSTING, Relation

from conftest import record

PREFIXES = """@prefix cbim: <https://w3id.org/cbim#> .
@prefix inst: <https://example.org/bimenrich/inst#> .
@prefix attr: <https://example.org/bimenrich/attr#> .
"""


def attributed(obj_id, lo, hi, kind):
    r = record(obj_id, lo, hi, kind)
    r.attributes = compute_attributes(r)
    return r


def wall_window():
    wall = attributed("17", (0, 0, 0), (4, 0.2, 3), "wall")
    window = attributed("3", (1.4, 0, 0.8), (2.6, 0.2, 2.2), "window")
    rels = [Relation("17", HOSTING, "3"), Relation("3", HOSTED, "17")]
    return [wall, window], rels


def test_single_node():
    g = build_graph([attributed("17", (0, 0, 0), (4, 0.2, 3), "wall")], [])
    assert list(g.nodes) == ["wall_17"] and g.edges == []
    text = serialize_turtle(g)
    assert text.count("a cbim:Wall") == 1
    assert 'attr:height "3"' in text


def test_hosting_pair():
    g = build_graph(*wall_window())
    assert len(g.nodes) == 2 and len(g.edges) == 2
    assert query_host(g, "window_3") == "wall_17"
    assert query_hosted(g, "wall_17") == ["window_3"]
    text = serialize_turtle(g)
    assert "inst:wall_17 cbim:hosting inst:window_3 ." in text
    assert "inst:window_3 cbim:hosted inst:wall_17 ." in text


def test_adjacent_pair_both_directions():
    a = attributed("1", (0, 0, 0), (4, 0.2, 3), "wall")
    b = attributed("2", (0, 0.2, 0), (0.2, 4, 3), "wall")
    g = build_graph([a, b], [Relation("1", ADJACENT, "2"), Relation("2", ADJACENT, "1")])
    text = serialize_turtle(g)
    assert "inst:wall_1 cbim:adjacentTo inst:wall_2 ." in text
    assert "inst:wall_2 cbim:adjacentTo inst:wall_1 ." in text


def test_dangling_relation():
    recs, _ = wall_window()
    with pytest.raises(ReferentialIntegrityError):
        build_graph(recs, [Relation("17", ADJACENT, "99"), Relation("99", ADJACENT, "17")])


def test_queries():
    recs = [attributed(str(i), (i * 10, 0, 0), (i * 10 + 4, 0.2, 3), "wall") for i in (1, 2, 4)]
    rels = []
    for j in ("2", "4"):
        rels += [Relation("1", ADJACENT, j), Relation(j, ADJACENT, "1")]
    g = build_graph(recs, rels)
    assert query_adjacent(g, "wall_1") == ["wall_2", "wall_4"]
    assert query_host(g, "wall_2") is None
    assert query_adjacent(g, "wall_4") == ["wall_1"]
    with pytest.raises(LookupFailure):
        query_host(g, "wall_9")


def test_multiple_hosts_rejected():
    nodes = {
        n: Node(n, n.split("_")[0], AttributeMap({}, (0, 0, 0)), n.split("_")[1])
        for n in ("wall_1", "wall_2", "window_3")
    }
    edges = []
    for w in ("wall_1", "wall_2"):
        edges += [Relation(w, HOSTING, "window_3"), Relation("window_3", HOSTED, w)]
    with pytest.raises(MultiplicityError):
        BimGraph(nodes, edges)


def test_roundtrip_and_determinism(tmp_path):
    g = build_graph(*wall_window())
    text = serialize_turtle(g)
    assert serialize_turtle(parse_turtle(text)) == text
    p = tmp_path / "g.ttl"
    write_turtle(g, p)
    back = read_turtle(p)
    assert back.edges == g.edges
    assert back.nodes.keys() == g.nodes.keys()
    for name, node in g.nodes.items():
        assert back.nodes[name].attributes.values == node.attributes.values
        assert back.nodes[name].attributes.central_point == node.attributes.central_point


def test_parse_empty_document():
    g = parse_turtle(PREFIXES)
    assert g.nodes == {} and g.edges == []


def test_parse_missing_inverse():
    text = PREFIXES + """inst:wall_1 a cbim:Wall ; attr:centralPoint "0 0 0" .
inst:window_2 a cbim:Window ; attr:centralPoint "0 0 0" .
inst:wall_1 cbim:hosting inst:window_2 .
"""
    with pytest.raises(GraphIntegrityError, match="counterpart"):
        parse_turtle(text)


def test_parse_unknown_prefix_reports_line():
    text = PREFIXES + "\ninst:wall_1 a ifc:Wall .\n"
    with pytest.raises(TurtleParseError, match="line 5"):
        parse_turtle(text)


def test_parse_comma_and_semicolon_lists():
    text = PREFIXES + """# comment
inst:wall_1 a cbim:Wall ; attr:height "3" ; attr:centralPoint "1 2 3" ;
    cbim:adjacentTo inst:wall_2 , inst:wall_4 .
inst:wall_2 a cbim:Wall ; attr:centralPoint "0 0 0" ; cbim:adjacentTo inst:wall_1 .
inst:wall_4 a cbim:Wall ; attr:centralPoint "0 0 0" ; cbim:adjacentTo inst:wall_1 .
"""
    g = parse_turtle(text)
    assert query_adjacent(g, "wall_1") == ["wall_2", "wall_4"]
    assert g.nodes["wall_1"].attributes.values == {"height": 3.0}
    assert g.nodes["wall_1"].attributes.central_point == (1.0, 2.0, 3.0)


def test_parse_node_without_central_point():
    with pytest.raises(GraphIntegrityError, match="centralPoint"):
        parse_turtle(PREFIXES + "inst:wall_1 a cbim:Wall .\n")


CLASSES = ["wall", "floor", "window", "door"]
value = st.floats(0.001, 1e4, allow_nan=False)


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 8))
    nodes = {}
    for i in range(n):
        kind = draw(st.sampled_from(CLASSES))
        attrs = draw(st.dictionaries(st.sampled_from(["height", "width", "area", "volume"]),
                                     value, max_size=4))
        center = tuple(draw(st.tuples(value, value, value)))
        flags = tuple(sorted(draw(st.sets(st.sampled_from(["non_axis_aligned"]), max_size=1))))
        name = f"{kind}_{i}"
        nodes[name] = Node(name, kind, AttributeMap(
            {k: float(f"{v:.9g}") for k, v in sorted(attrs.items())},
            tuple(float(f"{c:.9g}") for c in center), flags), str(i))
    names = sorted(nodes)
    edges = set()
    hosted = set()
    for a in names:
        for b in names:
            if a >= b:
                continue
            kind = draw(st.sampled_from(["none", "adj", "host", "hosted"]))
            if kind == "adj":
                edges |= {Relation(a, ADJACENT, b), Relation(b, ADJACENT, a)}
            elif kind == "host" and b not in hosted:
                hosted.add(b)
                edges |= {Relation(a, HOSTING, b), Relation(b, HOSTED, a)}
            elif kind == "hosted" and a not in hosted:
                hosted.add(a)
                edges |= {Relation(b, HOSTING, a), Relation(a, HOSTED, b)}
    return BimGraph(nodes, edges)


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_serialize_parse_identity(g):
    back = parse_turtle(serialize_turtle(g))
    assert back.edges == g.edges
    assert list(back.nodes) == list(g.nodes)
    for name, node in g.nodes.items():
        other = back.nodes[name]
        assert other.object_class == node.object_class
        assert other.source_id == node.source_id
        assert other.attributes.flags == node.attributes.flags
        np.testing.assert_allclose(other.attributes.central_point, node.attributes.central_point,
                                   rtol=1e-9)
        assert other.attributes.values.keys() == node.attributes.values.keys()
        for k, v in node.attributes.values.items():
            assert other.attributes.values[k] == pytest.approx(v, rel=1e-9)

"""Rule-network compilation, candidate ordering, and graph emission."""

import pytest

from dsshell.kb import KbError, parse_kb
from dsshell.network import (
    AND,
    CompileError,
    EVIDENCE,
    HYPOTHESIS,
    LEVEL,
    VIA_DIRECT,
    VIA_LEVEL,
    candidates_for,
    compile_network,
    emit_graph,
    subspace_of,
)


@pytest.fixture(scope="module")
def demo_net(demo_kb):
    return compile_network(demo_kb, "site_analysis")


def test_conjunctive_rule_gets_one_and_node(demo_net):
    and_nodes = [n for n in demo_net.nodes.values() if n.kind == AND]
    assert len(and_nodes) == 1
    and_node = and_nodes[0]
    assert and_node.rule_ref == "rule06"
    members = [l for l in demo_net.links if l.target == and_node.id]
    assert len(members) == 4
    out = [l for l in demo_net.links if l.source == and_node.id]
    assert len(out) == 1
    assert out[0].weight == pytest.approx(0.7)
    hyp = demo_net.nodes[out[0].target]
    assert hyp.kind == HYPOTHESIS and hyp.subset.members() == ("margin",)


def test_level_node_convergence(demo_net):
    level = demo_net.level_node_for("beds_deepen")
    assert level is not None and level.kind == LEVEL
    into_level = {
        demo_net.nodes[l.source].value
        for l in demo_net.links
        if l.target == level.id
    }
    assert into_level == {"seaward", "landward"}
    assert demo_net.level_node_for("beds_dip") is not None
    assert demo_net.level_node_for("dist") is None  # askable: no level node


def test_askable_evidence_carries_query_verifiable_does_not(demo_net):
    dist = demo_net.nodes["ev:dist:less_equal_200"]
    assert dist.query_ref and "miles" in dist.query_ref
    deepen = demo_net.nodes["ev:beds_deepen:seaward"]
    assert deepen.query_ref is None


def test_minimal_network_shape():
    kb = parse_kb(
        "(frame goal (x y))\n(attribute q askable \"?\" (a b))\n(partition p)\n"
        "(rule r :partition p :lhs ((q a)) :rhs-mass (((goal x) 0.5)))"
    )
    net = compile_network(kb, "p")
    kinds = sorted(n.kind for n in net.nodes.values())
    assert kinds == [EVIDENCE, HYPOTHESIS]
    assert len(net.links) == 1
    assert net.links[0].weight == pytest.approx(0.5)
    assert net.top_attributes == ["goal"]


def test_compilation_is_lossless(demo_kb, demo_net):
    # every (rule, conclusion subset) pair appears as exactly one weighted link
    for rule in demo_kb.partition_rules("site_analysis"):
        mf = rule.mass_function()
        for subset, _ in rule.conclusions:
            hits = [
                l
                for l in demo_net.links
                if l.rule == rule.id
                and demo_net.nodes[l.target].kind == HYPOTHESIS
                and demo_net.nodes[l.target].subset == subset
            ]
            assert len(hits) == 1
            assert hits[0].weight == pytest.approx(mf.mass(subset))


def test_compile_deterministic(demo_kb):
    a = compile_network(demo_kb, "site_analysis")
    b = compile_network(demo_kb, "site_analysis")
    assert list(a.nodes) == list(b.nodes)
    assert a.links == b.links


def test_compile_rejects_cycles():
    kb = parse_kb(
        "(frame a_attr (x y))\n(frame b_attr (p q))\n(partition p1)\n"
        "(rule r1 :partition p1 :lhs ((b_attr p)) :rhs-mass (((a_attr x) 0.5)))\n"
        "(rule r2 :partition p1 :lhs ((a_attr x)) :rhs-mass (((b_attr p) 0.5)))"
    )
    with pytest.raises(CompileError):
        compile_network(kb, "p1")


def test_compile_rejects_unknown_partition(demo_kb):
    with pytest.raises(CompileError):
        compile_network(demo_kb, "nope")


# --- candidate selection -----------------------------------------------------


def test_candidates_prefer_heavier_links(demo_kb, demo_net):
    target = demo_kb.frame_of("site_of_play").singleton("margin")
    cands = candidates_for(demo_net, target)
    assert cands[0].node.id == "ev:dist:less_equal_200"
    assert cands[0].weight == pytest.approx(0.8)
    assert cands[0].via == VIA_DIRECT
    # rule01 covers margin through two subsets; its best covering mass ranks it
    weights = [c.weight for c in cands]
    assert weights == sorted(weights, reverse=True)


def test_candidates_expand_and_members_after_dist(demo_kb, demo_net):
    target = demo_kb.frame_of("site_of_play").singleton("margin")
    satisfied = {("dist", "less_equal_200"), ("initial_signs", "margin_trend")}
    cands = candidates_for(demo_net, target, satisfied=satisfied)
    top_rule = cands[0].rule_id
    assert top_rule == "rule06"
    members = [c for c in cands if c.rule_id == "rule06"]
    assert [c.pattern.attribute for c in members] == [
        "move",
        "beds_dip",
        "beds_deepen",
        "abrupt_change",
    ]
    deepen = next(c for c in members if c.pattern.attribute == "beds_deepen")
    assert deepen.via == VIA_LEVEL
    assert deepen.level_node is demo_net.level_node_for("beds_deepen")


def test_candidates_empty_for_unsupported_target(demo_kb, demo_net):
    frame = demo_kb.frame_of("beds_dip")
    cands = candidates_for(demo_net, frame.singleton("landward"))
    assert cands == []


def test_candidates_accept_attribute_value_tuple(demo_net):
    cands = candidates_for(demo_net, ("beds_deepen", "seaward"))
    assert [c.rule_id for c in cands] == ["rule18", "rule20", "rule21"]
    assert all(c.weight == pytest.approx(0.7) for c in cands)


def test_candidates_without_target_cover_all_rules(demo_net):
    cands = candidates_for(demo_net, None)
    assert {c.rule_id for c in cands} == {
        "rule01", "rule03", "rule04", "rule06",
        "rule18", "rule19", "rule20", "rule21", "rule22",
    }


# --- subspaces ------------------------------------------------------------------


def test_subspace_membership(demo_net):
    space = subspace_of(demo_net, "beds_deepen")
    assert {"rule18", "rule20", "rule21"} <= set(space.rule_ids)
    assert "rule19" in space.rule_ids  # same attribute, opposite value
    dip = subspace_of(demo_net, "beds_dip")
    assert dip.rule_ids == ["rule22"]


def test_subspace_rejects_askable(demo_kb, demo_net):
    with pytest.raises(KbError):
        subspace_of(demo_net, "dist")
    with pytest.raises(KbError):
        subspace_of(demo_kb, "unknown_attr")


def test_subspace_from_kb(demo_kb):
    space = subspace_of(demo_kb, "beds_deepen")
    assert {"rule18", "rule19", "rule20", "rule21"} == set(space.rule_ids)


# --- emission -------------------------------------------------------------------


def test_emit_dot_structure(demo_net):
    dot = emit_graph(demo_net, "dot")
    assert dot.count('"level:beds_deepen"') >= 1
    assert dot.count("shape=hexagon") == 2  # beds_deepen and beds_dip levels
    assert "AND" in dot
    assert 'label="0.8"' in dot


def test_emit_json_structure(demo_net):
    import json

    payload = json.loads(emit_graph(demo_net, "json"))
    level_nodes = [n for n in payload["nodes"] if n["kind"] == LEVEL]
    assert {n["attribute"] for n in level_nodes} == {"beds_deepen", "beds_dip"}
    assert payload["top_attributes"] == ["site_of_play"]


def test_emit_deterministic(demo_net):
    assert emit_graph(demo_net, "dot") == emit_graph(demo_net, "dot")
    assert emit_graph(demo_net, "json") == emit_graph(demo_net, "json")


def test_emit_empty_partition():
    kb = parse_kb("(frame goal (x y))\n(partition p)\n(partition p2)\n"
                  "(attribute q askable \"?\" (a b))\n"
                  "(rule r :partition p2 :lhs ((q a)) :rhs-mass (((goal x) 0.5)))")
    net = compile_network(kb, "p")
    assert net.nodes == {}
    dot = emit_graph(net, "dot")
    assert "->" not in dot

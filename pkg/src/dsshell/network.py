"""Off-line compilation of a partition's rules into a weighted network.

Conclusions become hypothesis nodes and LHS patterns become evidence nodes.
A conjunctive rule routes its evidence through an AND node; every evidence
node for a verifiable attribute converges on that attribute's single level
node, which ties it to the hypothesis space deriving the attribute.  The
network drives query selection during backward chaining.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .evidence import HypSubset
from .kb import ASKABLE, EvidencePattern, KbError, KnowledgeBase, Rule

HYPOTHESIS = "hypothesis"
EVIDENCE = "evidence"
AND = "and"
LEVEL = "level"

VIA_DIRECT = "direct"
VIA_AND = "and-node"
VIA_LEVEL = "level-node"


class CompileError(ValueError):
    """The partition's rules cannot form a valid network."""


@dataclass(frozen=True)
class NetworkNode:
    id: str
    kind: str
    attribute: str | None = None
    value: str | None = None  # evidence nodes
    negated: bool = False  # evidence nodes
    subset: HypSubset | None = None  # hypothesis nodes
    query_ref: str | None = None  # askable evidence only
    rule_ref: str | None = None  # AND nodes


@dataclass(frozen=True)
class WeightedLink:
    source: str
    target: str
    weight: float
    rule: str | None = None


@dataclass
class HypothesisSpace:
    attribute: str
    hypothesis_node_ids: list[str]
    rule_ids: list[str]


@dataclass
class RuleNetwork:
    partition: str
    kb: KnowledgeBase = field(repr=False)
    nodes: dict[str, NetworkNode] = field(default_factory=dict)
    links: list[WeightedLink] = field(default_factory=list)
    spaces: dict[str, HypothesisSpace] = field(default_factory=dict)
    top_attributes: list[str] = field(default_factory=list)
    rules: list[Rule] = field(default_factory=list)

    def node(self, node_id: str) -> NetworkNode:
        return self.nodes[node_id]

    def level_node_for(self, attribute: str) -> NetworkNode | None:
        return self.nodes.get(f"level:{attribute}")


def _evidence_id(p: EvidencePattern) -> str:
    neg = "!" if p.negated else ""
    return f"ev:{p.attribute}:{neg}{p.value}"


def _hypothesis_id(subset: HypSubset) -> str:
    return f"hyp:{subset.frame.attribute}:{'+'.join(subset.members())}"


def compile_network(kb: KnowledgeBase, partition: str) -> RuleNetwork:
    """Compile one partition's rules into its disjoint rule network."""
    if partition not in kb.partitions:
        raise CompileError(f"undeclared partition {partition!r}")
    rules = kb.partition_rules(partition)
    net = RuleNetwork(partition=partition, kb=kb, rules=rules)

    local = {r.concluded_attribute for r in rules}
    _check_acyclic(rules, local, partition)

    def add_node(node: NetworkNode) -> NetworkNode:
        existing = net.nodes.get(node.id)
        if existing is not None:
            return existing
        net.nodes[node.id] = node
        return node

    for rule in rules:
        attr = rule.concluded_attribute
        space = net.spaces.get(attr)
        if space is None:
            space = HypothesisSpace(attr, [], [])
            net.spaces[attr] = space
        space.rule_ids.append(rule.id)

        hyp_nodes = []
        for subset, _ in rule.conclusions:
            node = add_node(
                NetworkNode(
                    id=_hypothesis_id(subset),
                    kind=HYPOTHESIS,
                    attribute=attr,
                    subset=subset,
                )
            )
            if node.id not in space.hypothesis_node_ids:
                space.hypothesis_node_ids.append(node.id)
            hyp_nodes.append(node)

        ev_nodes = []
        for pattern in rule.lhs:
            decl = kb.attributes[pattern.attribute]
            ev_nodes.append(
                add_node(
                    NetworkNode(
                        id=_evidence_id(pattern),
                        kind=EVIDENCE,
                        attribute=pattern.attribute,
                        value=pattern.value,
                        negated=pattern.negated,
                        query_ref=decl.query_text if decl.kind == ASKABLE else None,
                    )
                )
            )

        mf = rule.mass_function()
        if len(rule.lhs) == 1:
            source = ev_nodes[0]
        else:
            source = add_node(
                NetworkNode(id=f"and:{rule.id}", kind=AND, rule_ref=rule.id)
            )
            for ev in ev_nodes:
                net.links.append(WeightedLink(ev.id, source.id, 1.0, rule.id))
        for subset, _ in rule.conclusions:
            net.links.append(
                WeightedLink(
                    source.id,
                    _hypothesis_id(subset),
                    mf.mass(subset),
                    rule.id,
                )
            )

    # evidence on attributes concluded in this partition converges on one
    # level node per attribute, tied to the space that derives the attribute;
    # every value of such an attribute gets an evidence node, fired or not
    verifiable_evidence = sorted(
        {
            p.attribute
            for r in rules
            for p in r.lhs
            if p.attribute in local
        }
    )
    for attribute in verifiable_evidence:
        for value in kb.attributes[attribute].values:
            add_node(
                NetworkNode(
                    id=_evidence_id(EvidencePattern(attribute, value)),
                    kind=EVIDENCE,
                    attribute=attribute,
                    value=value,
                )
            )
    for node in list(net.nodes.values()):
        if node.kind != EVIDENCE or node.attribute not in local:
            continue
        level = net.nodes.get(f"level:{node.attribute}")
        if level is None:
            level = NetworkNode(
                id=f"level:{node.attribute}", kind=LEVEL, attribute=node.attribute
            )
            net.nodes[level.id] = level
        net.links.append(WeightedLink(node.id, level.id, 1.0))

    used = {p.attribute for r in rules for p in r.lhs}
    net.top_attributes = [a for a in kb.concluded_attributes(partition) if a not in used]
    return net


def _check_acyclic(rules: list[Rule], local: set[str], partition: str) -> None:
    edges: dict[str, set[str]] = {a: set() for a in local}
    for rule in rules:
        for pattern in rule.lhs:
            if pattern.attribute in local:
                edges[rule.concluded_attribute].add(pattern.attribute)
            if pattern.attribute == rule.concluded_attribute:
                raise CompileError(
                    f"partition {partition!r}: rule {rule.id!r} verifies "
                    f"{rule.concluded_attribute!r} from itself"
                )
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]) -> None:
        state[node] = 1
        trail.append(node)
        for nxt in sorted(edges[node]):
            if state.get(nxt) == 1:
                cycle = trail[trail.index(nxt):] + [nxt]
                raise CompileError(
                    f"partition {partition!r}: cyclic verification dependency "
                    f"{' -> '.join(cycle)}"
                )
            if state.get(nxt, 0) == 0:
                visit(nxt, trail)
        trail.pop()
        state[node] = 2

    for node in sorted(edges):
        if state.get(node, 0) == 0:
            visit(node, [])


@dataclass(frozen=True)
class Candidate:
    """An evidence node worth pursuing for a target hypothesis."""

    node: NetworkNode
    weight: float
    via: str  # VIA_DIRECT | VIA_AND | VIA_LEVEL
    rule_id: str
    pattern: EvidencePattern
    level_node: NetworkNode | None = None


def candidates_for(
    net: RuleNetwork,
    target: HypSubset | tuple[str, str] | None,
    satisfied=None,
) -> list[Candidate]:
    """Evidence nodes supporting the target, best link weight first.

    For each rule whose conclusion covers the target, single-premise rules
    yield their evidence node directly; conjunctive rules expand to their
    members not yet satisfied.  Verifiable evidence reports its level node.
    ``satisfied`` is a predicate over EvidencePattern (or a set of
    (attribute, value) pairs) marking evidence already established.
    A None target matches every rule of the network.
    """
    if isinstance(target, tuple):
        attr, value = target
        target = net.kb.frame_of(attr).singleton(value)

    if satisfied is None:
        is_satisfied = lambda p: False  # noqa: E731
    elif callable(satisfied):
        is_satisfied = satisfied
    else:
        pairs = set(satisfied)
        is_satisfied = lambda p: (p.attribute, p.value) in pairs  # noqa: E731

    scored: list[tuple[float, int, Rule]] = []
    for index, rule in enumerate(net.rules):
        mf = rule.mass_function()
        if target is not None:
            if rule.concluded_attribute != target.frame.attribute:
                continue
            covering = [
                mf.mass(subset)
                for subset, _ in rule.conclusions
                if target.issubset(subset)
            ]
            if not covering:
                continue
            weight = max(covering)
        else:
            weight = max(mf.mass(subset) for subset, _ in rule.conclusions)
        scored.append((weight, index, rule))
    scored.sort(key=lambda t: (-t[0], t[1]))

    out: list[Candidate] = []
    for weight, _, rule in scored:
        conjunctive = len(rule.lhs) > 1
        for pattern in rule.lhs:
            if is_satisfied(pattern):
                continue
            node = net.nodes[_evidence_id(pattern)]
            level = net.level_node_for(pattern.attribute)
            if level is not None:
                via = VIA_LEVEL
            elif conjunctive:
                via = VIA_AND
            else:
                via = VIA_DIRECT
            out.append(Candidate(node, weight, via, rule.id, pattern, level))
    return out


def subspace_of(net_or_kb, attribute: str) -> HypothesisSpace:
    """The hypothesis space concluding a verifiable attribute."""
    if isinstance(net_or_kb, RuleNetwork):
        kb = net_or_kb.kb
        spaces = net_or_kb.spaces
        rules = net_or_kb.rules
    else:
        kb = net_or_kb
        spaces = None
        rules = kb.rules
    decl = kb.attributes.get(attribute)
    if decl is None:
        raise KbError(f"unknown attribute {attribute!r}")
    if decl.kind == ASKABLE:
        raise KbError(f"attribute {attribute!r} is askable, not verifiable")
    if spaces is not None:
        space = spaces.get(attribute)
        if space is None:
            raise KbError(f"no rule concludes {attribute!r} in this partition")
        return space
    rule_ids = [r.id for r in rules if r.concluded_attribute == attribute]
    if not rule_ids:
        raise KbError(f"no rule concludes {attribute!r}")
    hyp_ids: list[str] = []
    for r in rules:
        if r.concluded_attribute != attribute:
            continue
        for subset, _ in r.conclusions:
            hid = _hypothesis_id(subset)
            if hid not in hyp_ids:
                hyp_ids.append(hid)
    return HypothesisSpace(attribute, hyp_ids, rule_ids)


# --- graph emission ----------------------------------------------------------

_DOT_SHAPES = {HYPOTHESIS: "box", EVIDENCE: "ellipse", AND: "diamond", LEVEL: "hexagon"}


def _node_label(node: NetworkNode) -> str:
    if node.kind == HYPOTHESIS:
        assert node.subset is not None
        return f"{node.attribute} = {{{', '.join(node.subset.members())}}}"
    if node.kind == EVIDENCE:
        neg = "not " if node.negated else ""
        return f"{neg}{node.attribute} = {node.value}"
    if node.kind == AND:
        return "AND"
    return f"level: {node.attribute}"


def emit_graph(net: RuleNetwork, format: str = "dot") -> str:
    """Deterministic DOT or JSON rendering of a compiled network."""
    if format == "dot":
        lines = [f'digraph "{net.partition}" {{', "  rankdir=BT;"]
        for node_id in sorted(net.nodes):
            node = net.nodes[node_id]
            lines.append(
                f'  "{node_id}" [shape={_DOT_SHAPES[node.kind]}, '
                f'label="{_node_label(node)}"];'
            )
        for link in sorted(net.links, key=lambda l: (l.source, l.target, l.rule or "")):
            attrs = [f'label="{link.weight:g}"']
            if link.rule:
                attrs.append(f'tooltip="{link.rule}"')
            lines.append(
                f'  "{link.source}" -> "{link.target}" [{", ".join(attrs)}];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"
    if format in ("json", "json-graph"):
        payload = {
            "partition": net.partition,
            "top_attributes": net.top_attributes,
            "nodes": [
                {
                    "id": node_id,
                    "kind": node.kind,
                    "attribute": net.nodes[node_id].attribute,
                    "value": net.nodes[node_id].value,
                    "negated": net.nodes[node_id].negated,
                    "subset": (
                        list(net.nodes[node_id].subset.members())
                        if net.nodes[node_id].subset is not None
                        else None
                    ),
                    "query": net.nodes[node_id].query_ref,
                    "rule": net.nodes[node_id].rule_ref,
                }
                for node_id, node in sorted(net.nodes.items())
            ],
            "links": [
                {
                    "source": l.source,
                    "target": l.target,
                    "weight": l.weight,
                    "rule": l.rule,
                }
                for l in sorted(
                    net.links, key=lambda l: (l.source, l.target, l.rule or "")
                )
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown graph format {format!r}")

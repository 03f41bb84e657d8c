"""Knowledge-base model: attribute declarations, rules, partitions.

The textual format is s-expression based.  Attributes are either askable
(answered by querying the user, so they carry a query string) or verifiable
(concluded by rule firings).  Rules keep their belief assignment either as
raw expert rankings plus a relevance, or as pre-normalized masses; negated
conclusions are complemented against their frame at load time, so no loaded
rule ever carries a negated conclusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from .evidence import (
    Frame,
    HypSubset,
    MassFunction,
    negate_subset,
)
from .sexpr import Form, Quoted, SexprError, read_forms, write_node

ASKABLE = "askable"
VERIFIABLE = "verifiable"

DEFAULT_EXIT_THRESHOLD = 0.95


class KbError(ValueError):
    """Malformed knowledge-base text or structure."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{loc}{message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    kind: str  # ASKABLE or VERIFIABLE
    values: tuple[str, ...]
    query_text: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in (ASKABLE, VERIFIABLE):
            raise KbError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == ASKABLE and not self.query_text:
            raise KbError(f"askable attribute {self.name!r} needs a query text")
        if self.kind == VERIFIABLE and self.query_text is not None:
            raise KbError(f"verifiable attribute {self.name!r} cannot carry a query")

    def frame(self) -> Frame:
        return Frame(self.name, self.values)


@dataclass(frozen=True)
class EvidencePattern:
    """One LHS condition: an attribute-value pair, possibly negated."""

    attribute: str
    value: str
    negated: bool = False

    def __str__(self) -> str:
        core = f"{self.attribute} {self.value}"
        return f"(not {core})" if self.negated else core


RANK_FORM = "rank"
MASS_FORM = "mass"


@dataclass(frozen=True)
class Rule:
    id: str
    partition: str
    lhs: tuple[EvidencePattern, ...]
    conclusions: tuple[tuple[HypSubset, float | int], ...]
    form: str  # RANK_FORM or MASS_FORM
    relevance: int | None = None

    def __post_init__(self) -> None:
        if not self.lhs:
            raise KbError(f"rule {self.id!r} has an empty LHS")
        if not self.conclusions:
            raise KbError(f"rule {self.id!r} has no conclusions")
        frames = {s.frame for s, _ in self.conclusions}
        if len(frames) > 1:
            raise KbError(f"rule {self.id!r} concludes more than one attribute")
        if any(s.is_empty for s, _ in self.conclusions):
            raise KbError(f"rule {self.id!r} has an empty conclusion subset")
        if self.form == RANK_FORM and self.relevance is None:
            raise KbError(f"rule {self.id!r} uses rankings but has no relevance")

    @property
    def concluded_attribute(self) -> str:
        return self.conclusions[0][0].frame.attribute

    @property
    def frame(self) -> Frame:
        return self.conclusions[0][0].frame

    def mass_function(self) -> MassFunction:
        """The rule's exact belief assignment over its concluded frame."""
        if self.form == RANK_FORM:
            rankings = [(s, int(r)) for s, r in self.conclusions]
            return MassFunction.from_rankings(rankings, int(self.relevance or 0))
        frame = self.frame
        masses: dict[int, float] = {}
        for subset, m in self.conclusions:
            masses[subset.bits] = masses.get(subset.bits, 0.0) + float(m)
        assigned = sum(masses.values())
        if assigned > 1.0 + 1e-9:
            raise KbError(f"rule {self.id!r} masses sum to {assigned} > 1")
        ignorance = 1.0 - assigned
        if ignorance > 1e-12:
            theta = frame.theta_bits
            masses[theta] = masses.get(theta, 0.0) + ignorance
        return MassFunction(frame, masses)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}[{self.code}]: {self.message}"


@dataclass
class KnowledgeBase:
    attributes: dict[str, AttributeDecl]
    partitions: list[str]
    rules: list[Rule]
    entry_partition: str | None = None
    initial_questions: list[str] = field(default_factory=list)
    exit_threshold: float = DEFAULT_EXIT_THRESHOLD
    _frames: dict[str, Frame] = field(
        default_factory=dict, compare=False, repr=False
    )

    def frame_of(self, attribute: str) -> Frame:
        if attribute not in self._frames:
            decl = self.attributes.get(attribute)
            if decl is None:
                raise KbError(f"unknown attribute {attribute!r}")
            self._frames[attribute] = decl.frame()
        return self._frames[attribute]

    @property
    def start_partition(self) -> str:
        if self.entry_partition is not None:
            return self.entry_partition
        if not self.partitions:
            raise KbError("knowledge base declares no partitions")
        return self.partitions[0]

    def partition_rules(self, partition: str) -> list[Rule]:
        return [r for r in self.rules if r.partition == partition]

    def concluded_attributes(self, partition: str | None = None) -> list[str]:
        seen: list[str] = []
        for rule in self.rules:
            if partition is not None and rule.partition != partition:
                continue
            attr = rule.concluded_attribute
            if attr not in seen:
                seen.append(attr)
        return seen

    def rule_by_id(self, rule_id: str) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KbError(f"unknown rule {rule_id!r}")

    def with_rule(self, rule: Rule) -> "KnowledgeBase":
        if any(r.id == rule.id for r in self.rules):
            raise KbError(f"duplicate rule id {rule.id!r}")
        return replace(self, rules=self.rules + [rule], _frames={})


def lhs_belief(beliefs: Iterable[float]) -> float:
    """Overall belief of a conjunctive LHS: the minimum of its members."""
    values = list(beliefs)
    if not values:
        raise ValueError("lhs_belief of an empty pattern list")
    for b in values:
        if not 0.0 <= b <= 1.0:
            raise ValueError(f"belief {b} outside [0, 1]")
    return min(values)


# --- parsing ---------------------------------------------------------------


def parse_kb(text: str) -> KnowledgeBase:
    """Parse knowledge-base text into a fully resolved KnowledgeBase."""
    try:
        forms = read_forms(text)
    except SexprError as e:
        raise KbError(str(e)) from e

    attributes: dict[str, AttributeDecl] = {}
    partitions: list[str] = []
    rules: list[Rule] = []
    rule_lines: dict[str, int] = {}
    entry_partition: str | None = None
    initial_questions: list[str] = []
    exit_threshold = DEFAULT_EXIT_THRESHOLD
    frames: dict[str, Frame] = {}

    def err(message: str, form: Form) -> KbError:
        return KbError(message, form.line, form.col)

    def declare(decl: AttributeDecl, form: Form) -> None:
        if decl.name in attributes:
            raise err(f"attribute {decl.name!r} declared twice", form)
        try:
            frames[decl.name] = decl.frame()
        except ValueError as e:
            raise err(str(e), form) from e
        attributes[decl.name] = decl

    def symbol(node, form: Form, what: str) -> str:
        if not isinstance(node, str) or isinstance(node, Quoted):
            raise err(f"expected {what}, got {node!r}", form)
        return node

    def value_list(node, form: Form) -> tuple[str, ...]:
        if not isinstance(node, list):
            raise err("expected a value list", form)
        return tuple(symbol(v, form, "a value identifier") for v in node)

    for form in forms:
        if not isinstance(form, Form) or not form:
            raise KbError("top-level atoms are not allowed")
        head = form[0]
        if head == "frame":
            if len(form) != 3:
                raise err("frame takes a name and a value list", form)
            name = symbol(form[1], form, "an attribute name")
            declare(
                AttributeDecl(name, VERIFIABLE, value_list(form[2], form)), form
            )
        elif head == "attribute":
            if len(form) < 4:
                raise err("attribute takes name, kind, [query], values", form)
            name = symbol(form[1], form, "an attribute name")
            kind = symbol(form[2], form, "askable or verifiable")
            if kind == ASKABLE:
                if len(form) != 5 or not isinstance(form[3], Quoted):
                    raise err("askable attribute needs a quoted query text", form)
                decl = AttributeDecl(
                    name, ASKABLE, value_list(form[4], form), str(form[3])
                )
            elif kind == VERIFIABLE:
                if len(form) != 4:
                    raise err("verifiable attribute takes name and values", form)
                decl = AttributeDecl(name, VERIFIABLE, value_list(form[3], form))
            else:
                raise err(f"unknown attribute kind {kind!r}", form)
            declare(decl, form)
        elif head == "partition":
            if len(form) != 2:
                raise err("partition takes one name", form)
            name = symbol(form[1], form, "a partition name")
            if name in partitions:
                raise err(f"partition {name!r} declared twice", form)
            partitions.append(name)
        elif head == "entry-partition":
            entry_partition = symbol(form[1], form, "a partition name")
        elif head == "initial-questions":
            if len(form) != 2 or not isinstance(form[1], list):
                raise err("initial-questions takes a list of attributes", form)
            initial_questions = [
                symbol(a, form, "an attribute name") for a in form[1]
            ]
        elif head == "exit-threshold":
            if len(form) != 2 or not isinstance(form[1], (int, float)):
                raise err("exit-threshold takes a number", form)
            exit_threshold = float(form[1])
            if not 0.0 < exit_threshold <= 1.0:
                raise err("exit-threshold must lie in (0, 1]", form)
        elif head == "rule":
            rule = _parse_rule(form, frames, attributes, partitions, err)
            if rule.id in rule_lines:
                raise err(
                    f"duplicate rule id {rule.id!r} "
                    f"(first declared at line {rule_lines[rule.id]})",
                    form,
                )
            rule_lines[rule.id] = form.line
            rules.append(rule)
        else:
            raise err(f"unknown declaration {head!r}", form)

    kb = KnowledgeBase(
        attributes=attributes,
        partitions=partitions,
        rules=rules,
        entry_partition=entry_partition,
        initial_questions=initial_questions,
        exit_threshold=exit_threshold,
    )
    _check_references(kb)
    return kb


def _parse_rule(form, frames, attributes, partitions, err) -> Rule:
    if len(form) < 2:
        raise err("rule needs an id", form)
    rule_id = form[1]
    if not isinstance(rule_id, str) or isinstance(rule_id, Quoted):
        raise err("rule id must be a symbol", form)
    kwargs: dict[str, object] = {}
    i = 2
    while i < len(form):
        key = form[i]
        if not isinstance(key, str) or not key.startswith(":"):
            raise err(f"rule {rule_id!r}: expected a :keyword, got {key!r}", form)
        if i + 1 >= len(form):
            raise err(f"rule {rule_id!r}: {key} missing its value", form)
        kwargs[key] = form[i + 1]
        i += 2

    partition = kwargs.pop(":partition", None)
    if not isinstance(partition, str):
        raise err(f"rule {rule_id!r} needs :partition", form)
    if partition not in partitions:
        raise err(
            f"rule {rule_id!r} references undeclared partition {partition!r}", form
        )

    lhs_spec = kwargs.pop(":lhs", None)
    if not isinstance(lhs_spec, list) or not lhs_spec:
        raise err(f"rule {rule_id!r} needs a nonempty :lhs", form)
    lhs = tuple(
        _parse_pattern(p, attributes, rule_id, form, err) for p in lhs_spec
    )

    relevance = kwargs.pop(":relevance", None)
    rhs_rank = kwargs.pop(":rhs-rank", None)
    rhs_mass = kwargs.pop(":rhs-mass", None)
    if kwargs:
        raise err(f"rule {rule_id!r}: unknown keys {sorted(kwargs)}", form)
    if (rhs_rank is None) == (rhs_mass is None):
        raise err(
            f"rule {rule_id!r} needs exactly one of :rhs-rank or :rhs-mass", form
        )

    if rhs_rank is not None:
        if not isinstance(relevance, int) or not 1 <= relevance <= 10:
            raise err(
                f"rule {rule_id!r}: :rhs-rank needs an integer :relevance in 1..10",
                form,
            )
        conclusions = _parse_conclusions(
            rhs_rank, frames, rule_id, form, err, want_int=True
        )
        rule_form = RANK_FORM
    else:
        if relevance is not None:
            raise err(f"rule {rule_id!r}: :relevance only applies to :rhs-rank", form)
        conclusions = _parse_conclusions(
            rhs_mass, frames, rule_id, form, err, want_int=False
        )
        rule_form = MASS_FORM

    try:
        rule = Rule(
            id=rule_id,
            partition=partition,
            lhs=lhs,
            conclusions=conclusions,
            form=rule_form,
            relevance=relevance if rhs_rank is not None else None,
        )
        rule.mass_function()  # surface bad masses/rankings at load time
    except (KbError, ValueError) as e:
        raise err(str(e), form) from e
    return rule


def _parse_pattern(node, attributes, rule_id, form, err) -> EvidencePattern:
    negated = False
    if isinstance(node, list) and node and node[0] == "not":
        if len(node) != 2 or not isinstance(node[1], list):
            raise err(f"rule {rule_id!r}: malformed negated pattern", form)
        negated = True
        node = node[1]
    if not isinstance(node, list) or len(node) != 2:
        raise err(f"rule {rule_id!r}: LHS pattern must be (attribute value)", form)
    attr, value = node
    if attr not in attributes:
        raise err(f"rule {rule_id!r}: unknown attribute {attr!r}", form)
    if value not in attributes[attr].values:
        raise err(
            f"rule {rule_id!r}: {value!r} is not a value of {attr!r}", form
        )
    return EvidencePattern(attr, value, negated)


def _parse_conclusions(spec, frames, rule_id, form, err, want_int):
    if not isinstance(spec, list) or not spec:
        raise err(f"rule {rule_id!r}: RHS must be a nonempty list", form)
    out: list[tuple[HypSubset, float | int]] = []
    for entry in spec:
        if not isinstance(entry, list) or len(entry) != 2:
            raise err(
                f"rule {rule_id!r}: RHS entry must be ((attribute values...) weight)",
                form,
            )
        subset_spec, weight = entry
        negated = False
        if (
            isinstance(subset_spec, list)
            and subset_spec
            and subset_spec[0] == "not"
        ):
            if len(subset_spec) != 2:
                raise err(f"rule {rule_id!r}: malformed negated conclusion", form)
            negated = True
            subset_spec = subset_spec[1]
        if not isinstance(subset_spec, list) or len(subset_spec) < 2:
            raise err(
                f"rule {rule_id!r}: conclusion must name an attribute and values",
                form,
            )
        attr = subset_spec[0]
        if attr not in frames:
            raise err(f"rule {rule_id!r}: unknown attribute {attr!r}", form)
        frame = frames[attr]
        try:
            subset = frame.subset(subset_spec[1:])
            if negated:
                subset = negate_subset(frame, subset)
        except ValueError as e:
            raise err(f"rule {rule_id!r}: {e}", form) from e
        if want_int:
            if not isinstance(weight, int):
                raise err(f"rule {rule_id!r}: ranking must be an integer", form)
        else:
            if not isinstance(weight, (int, float)):
                raise err(f"rule {rule_id!r}: mass must be a number", form)
            weight = float(weight)
        out.append((subset, weight))
    return tuple(out)


def _check_references(kb: KnowledgeBase) -> None:
    for attr in kb.initial_questions:
        decl = kb.attributes.get(attr)
        if decl is None:
            raise KbError(f"initial question for unknown attribute {attr!r}")
        if decl.kind != ASKABLE:
            raise KbError(f"initial question {attr!r} is not askable")
    if kb.entry_partition is not None and kb.entry_partition not in kb.partitions:
        raise KbError(f"entry partition {kb.entry_partition!r} is not declared")


# --- serialization ---------------------------------------------------------


def serialize_kb(kb: KnowledgeBase) -> str:
    """Render a knowledge base back to text; parse_kb inverts this exactly."""
    lines: list[str] = []
    for decl in kb.attributes.values():
        if decl.kind == ASKABLE:
            node = [
                "attribute",
                decl.name,
                ASKABLE,
                Quoted(decl.query_text or ""),
                list(decl.values),
            ]
        else:
            node = ["attribute", decl.name, VERIFIABLE, list(decl.values)]
        lines.append(write_node(node))
    for partition in kb.partitions:
        lines.append(write_node(["partition", partition]))
    if kb.entry_partition is not None:
        lines.append(write_node(["entry-partition", kb.entry_partition]))
    if kb.initial_questions:
        lines.append(write_node(["initial-questions", list(kb.initial_questions)]))
    lines.append(write_node(["exit-threshold", kb.exit_threshold]))
    for rule in kb.rules:
        lines.append(_rule_node(rule))
    return "\n".join(lines) + "\n"


def _rule_node(rule: Rule) -> str:
    node: list = ["rule", rule.id, ":partition", rule.partition]
    lhs = []
    for p in rule.lhs:
        pat = [p.attribute, p.value]
        lhs.append(["not", pat] if p.negated else pat)
    node += [":lhs", lhs]
    rhs = [
        [[s.frame.attribute, *s.members()], w] for s, w in rule.conclusions
    ]
    if rule.form == RANK_FORM:
        node += [":relevance", rule.relevance, ":rhs-rank", rhs]
    else:
        node += [":rhs-mass", rhs]
    return write_node(node)


# --- validation ------------------------------------------------------------


def validate_kb(kb: KnowledgeBase) -> list[Diagnostic]:
    """Static checks beyond the grammar; returns diagnostics, never raises."""
    out: list[Diagnostic] = []
    concluded: dict[str, list[Rule]] = {}
    for rule in kb.rules:
        concluded.setdefault(rule.concluded_attribute, []).append(rule)

    for decl in kb.attributes.values():
        if len(decl.values) > 16:
            out.append(
                Diagnostic(
                    "error",
                    "frame-too-large",
                    f"frame {decl.name!r} has {len(decl.values)} values (max 16)",
                )
            )
        if decl.kind == VERIFIABLE and decl.name not in concluded:
            out.append(
                Diagnostic(
                    "error",
                    "unconcluded-verifiable",
                    f"verifiable attribute {decl.name!r} has no concluding rule",
                )
            )

    referenced = {p.attribute for r in kb.rules for p in r.lhs}
    referenced.update(kb.initial_questions)
    for decl in kb.attributes.values():
        if decl.kind == ASKABLE and decl.name not in referenced:
            out.append(
                Diagnostic(
                    "warning",
                    "unreferenced-askable",
                    f"askable attribute {decl.name!r} is never referenced",
                )
            )

    partition_index = {name: i for i, name in enumerate(kb.partitions)}
    home: dict[str, int] = {}
    for attr, rules in concluded.items():
        home[attr] = min(partition_index.get(r.partition, 0) for r in rules)
    for rule in kb.rules:
        own = partition_index.get(rule.partition, 0)
        for pattern in rule.lhs:
            decl = kb.attributes.get(pattern.attribute)
            if decl is None or decl.kind != VERIFIABLE:
                continue
            source = home.get(pattern.attribute)
            if source is not None and source > own:
                out.append(
                    Diagnostic(
                        "error",
                        "forward-partition-reference",
                        f"rule {rule.id!r} in partition {rule.partition!r} uses "
                        f"{pattern.attribute!r}, first concluded in the later "
                        f"partition {kb.partitions[source]!r}",
                    )
                )

    for partition in kb.partitions:
        cycle = _verification_cycle(kb, partition)
        if cycle:
            out.append(
                Diagnostic(
                    "error",
                    "verification-cycle",
                    f"partition {partition!r}: cyclic verification "
                    f"dependency {' -> '.join(cycle)}",
                )
            )
        out.extend(_unreachable_rules(kb, partition))
    return out


def _verification_cycle(kb: KnowledgeBase, partition: str) -> list[str] | None:
    rules = kb.partition_rules(partition)
    local = {r.concluded_attribute for r in rules}
    edges: dict[str, set[str]] = {a: set() for a in local}
    for rule in rules:
        for pattern in rule.lhs:
            if pattern.attribute in local:
                edges[rule.concluded_attribute].add(pattern.attribute)
    state: dict[str, int] = {}
    path: list[str] = []

    def visit(node: str) -> list[str] | None:
        state[node] = 1
        path.append(node)
        for nxt in sorted(edges[node]):
            if state.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            if state.get(nxt, 0) == 0:
                found = visit(nxt)
                if found:
                    return found
        path.pop()
        state[node] = 2
        return None

    for node in sorted(edges):
        if state.get(node, 0) == 0:
            found = visit(node)
            if found:
                return found
    return None


def _unreachable_rules(kb: KnowledgeBase, partition: str) -> list[Diagnostic]:
    rules = kb.partition_rules(partition)
    local = {r.concluded_attribute for r in rules}
    used = {p.attribute for r in rules for p in r.lhs}
    goals = [a for a in local if a not in used]
    reachable: set[str] = set(goals)
    changed = True
    while changed:
        changed = False
        for rule in rules:
            if rule.concluded_attribute in reachable:
                for pattern in rule.lhs:
                    if pattern.attribute in local and pattern.attribute not in reachable:
                        reachable.add(pattern.attribute)
                        changed = True
    return [
        Diagnostic(
            "warning",
            "unreachable-rule",
            f"rule {r.id!r} concludes {r.concluded_attribute!r}, which nothing "
            f"in partition {partition!r} can reach",
        )
        for r in rules
        if r.concluded_attribute not in reachable
    ]


def error_diagnostics(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.severity == "error"]

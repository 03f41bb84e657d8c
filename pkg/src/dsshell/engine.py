"""Mixed-initiative consultation engine.

The control loop alternates forward and backward reasoning: established
evidence fires rules and updates per-frame masses (deduce), the leading
singleton hypothesis is selected (getmaxh), and the rule network picks the
next query supporting it (chooseq).  Verifiable evidence opens a nested
hypothesis space whose belief is propagated to the parent only once the
exit check passes there, never incrementally.  The user may answer directed
questions, decline them, or volunteer evidence at any time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .evidence import ConflictError, Frame, HypSubset, MassFunction
from .kb import (
    ASKABLE,
    EvidencePattern,
    KbError,
    KnowledgeBase,
    Rule,
    lhs_belief,
)
from .network import RuleNetwork, compile_network, candidates_for

AWAITING = "awaiting-input"
CONCLUDED = "concluded"
EXHAUSTED = "exhausted"

SOURCE_ANSWER = "user-answer"
SOURCE_VOLUNTEERED = "volunteered"
SOURCE_PROPAGATED = "propagated-subspace"

UNKNOWN = "unknown"
IRRELEVANT = "irrelevant"

ASK = "ask"
VOLUNTEER = "volunteer"


class EngineError(RuntimeError):
    """Session driven outside its contract (no such question, wrong state)."""


@dataclass
class ExitPolicy:
    """When is a frame's conclusion definite?

    The designer hook, when present, decides alone; otherwise the leading
    singleton's total belief must reach the threshold.
    """

    threshold: float = 0.95
    hook: Callable[[Frame, MassFunction], bool] | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside (0, 1]")


@dataclass(frozen=True)
class Question:
    attribute: str | None
    text: str
    values: tuple[str, ...] = ()
    accepts_confidence: bool = True
    kind: str = ASK


@dataclass(frozen=True)
class EstablishedEvidence:
    attribute: str
    value: str
    belief: float
    source: str


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    data: dict

    def as_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, **self.data}


@dataclass
class _Focus:
    attribute: str
    target: HypSubset | None = None
    via_rule: str | None = None


def mass_payload(mf: MassFunction) -> list[dict]:
    return [
        {"subset": list(subset.members()), "mass": mass}
        for subset, mass in mf.items()
    ]


class Session:
    """One consultation: a single-threaded state machine over a shared kb."""

    def __init__(
        self,
        kb: KnowledgeBase,
        policy: ExitPolicy | None = None,
        initial_evidence: Iterable[tuple[str, str, float]] | None = None,
    ) -> None:
        self.kb = kb
        self.policy = policy or ExitPolicy(threshold=kb.exit_threshold)
        start = kb.start_partition
        order = kb.partitions[kb.partitions.index(start):]
        self.networks: dict[str, RuleNetwork] = {
            p: compile_network(kb, p) for p in order
        }
        self._order = order
        self._cursor = -1
        self.frame_masses: dict[str, MassFunction] = {
            attr: MassFunction.vacuous(kb.frame_of(attr))
            for attr in kb.concluded_attributes()
        }
        self.established: dict[tuple[str, str], EstablishedEvidence] = {}
        self.fired: list[str] = []
        self._fired_set: set[str] = set()
        self.conclusions: list[dict] = []
        self.trace: list[TraceEvent] = []
        self._stack: list[_Focus] = []
        self._goals: list[str] = []
        self._goal_idx = 0
        self._asked_done: set[str] = set()
        self._exhausted_frames: set[str] = set()
        self._initial_queue: list[str] = list(kb.initial_questions)
        self._volunteer_pending = not kb.initial_questions and not initial_evidence
        self.pending: Question | None = None
        self.status = AWAITING

        self._trace("start", partition=start, threshold=self.policy.threshold)
        if initial_evidence:
            for attr, value, confidence in initial_evidence:
                self._establish(attr, value, confidence, SOURCE_VOLUNTEERED)
        self._enter_next_partition()
        self._advance()

    # --- bookkeeping ------------------------------------------------------

    @property
    def partition(self) -> str:
        return self._order[self._cursor]

    @property
    def network(self) -> RuleNetwork:
        return self.networks[self.partition]

    @property
    def focus_attributes(self) -> list[str]:
        return [f.attribute for f in self._stack]

    def _trace(self, kind: str, **data) -> TraceEvent:
        event = TraceEvent(len(self.trace), kind, data)
        self.trace.append(event)
        return event

    def _require_awaiting(self) -> None:
        if self.status != AWAITING:
            raise EngineError(f"session is {self.status}, not awaiting input")

    def _establish(
        self, attribute: str, value: str, belief: float, source: str
    ) -> None:
        decl = self.kb.attributes.get(attribute)
        if decl is None:
            raise ValueError(f"unknown attribute {attribute!r}")
        if value not in decl.values:
            raise ValueError(f"{value!r} is not a value of {attribute!r}")
        if not 0.0 <= belief <= 1.0:
            raise ValueError(f"confidence {belief} outside [0, 1]")
        key = (attribute, value)
        replaced = key in self.established
        self.established[key] = EstablishedEvidence(attribute, value, belief, source)
        self._trace(
            "establish",
            attribute=attribute,
            value=value,
            belief=belief,
            source=source,
            replaced=replaced,
        )

    def _attribute_known(self, attribute: str) -> bool:
        return any(k[0] == attribute for k in self.established)

    def _pattern_belief(self, pattern: EvidencePattern) -> float | None:
        if not pattern.negated:
            ev = self.established.get((pattern.attribute, pattern.value))
            return None if ev is None else ev.belief
        # negated evidence: any established value of the attribute other
        # than the named one counts, with that value's belief
        best: float | None = None
        for (attr, value), ev in self.established.items():
            if attr == pattern.attribute and value != pattern.value:
                best = ev.belief if best is None else max(best, ev.belief)
        return best

    def _pattern_satisfied(self, pattern: EvidencePattern) -> bool:
        return self._pattern_belief(pattern) is not None

    # --- core operations ----------------------------------------------------

    def deduce(self) -> None:
        """Fire every satisfiable unfired rule of the current partition.

        Firing combines the rule's assignment, attenuated by the weakest LHS
        belief, into the concluded frame's mass.  Conclusions never become
        established evidence here; that only happens through propagation, so
        nested spaces stay isolated until their exit check passes.
        """
        progressed = True
        while progressed:
            progressed = False
            for rule in self.network.rules:
                if rule.id in self._fired_set:
                    continue
                beliefs = [self._pattern_belief(p) for p in rule.lhs]
                if any(b is None for b in beliefs):
                    continue
                self._fire(rule, lhs_belief([b for b in beliefs if b is not None]))
                progressed = True

    def _fire(self, rule: Rule, belief: float) -> None:
        attr = rule.concluded_attribute
        before = self.frame_masses[attr]
        rule_mass = rule.mass_function()
        self._fired_set.add(rule.id)
        self.fired.append(rule.id)
        try:
            after = before.combine(rule_mass.attenuate(belief))
        except ConflictError:
            self._trace("conflict", rule=rule.id, frame=attr, lhs_belief=belief)
            return
        self.frame_masses[attr] = after
        self._trace(
            "fire",
            rule=rule.id,
            frame=attr,
            partition=self.partition,
            lhs_belief=belief,
            conclusions=[
                {"subset": list(s.members()), "mass": rule_mass.mass(s)}
                for s, _ in rule.conclusions
            ],
            before=mass_payload(before),
            after=mass_payload(after),
        )

    def getmaxh(self, frame: Frame | str) -> tuple[HypSubset, float] | None:
        """Leading singleton hypothesis of a frame, or None while vacuous."""
        attr = frame.attribute if isinstance(frame, Frame) else frame
        mass = self.frame_masses.get(attr)
        if mass is None:
            raise KbError(f"no mass function tracked for {attr!r}")
        return mass.max_singleton()

    def exitchk(self, frame: Frame | str) -> bool:
        """Has this frame reached a definite conclusion?"""
        attr = frame.attribute if isinstance(frame, Frame) else frame
        mass = self.frame_masses.get(attr)
        if mass is None:
            raise KbError(f"no mass function tracked for {attr!r}")
        if self.policy.hook is not None:
            return bool(self.policy.hook(self.kb.frame_of(attr), mass))
        leading = mass.max_singleton()
        return leading is not None and leading[1] >= self.policy.threshold

    def chooseq(self) -> tuple[str, Question | str | None]:
        """Select the next move for the active hypothesis space.

        Returns ("question", Question) for an askable candidate,
        ("descend", attribute) after pushing a nested focus for a verifiable
        one, or ("exhausted", None) when no candidate remains.
        """
        focus = self._stack[-1]
        leading = self.getmaxh(focus.attribute)
        target = leading[0] if leading is not None else focus.target
        space = self.network.spaces.get(focus.attribute)
        space_rules = set(space.rule_ids) if space is not None else set()
        for cand in candidates_for(
            self.network, target, satisfied=self._pattern_satisfied
        ):
            if cand.rule_id in self._fired_set:
                continue
            if target is None and cand.rule_id not in space_rules:
                continue  # cold start: stay within the active space
            attribute = cand.pattern.attribute
            if self._attribute_known(attribute) or attribute in self._asked_done:
                continue
            decl = self.kb.attributes[attribute]
            if decl.kind == ASKABLE:
                return "question", Question(
                    attribute=attribute,
                    text=decl.query_text or attribute,
                    values=decl.values,
                )
            # verifiable: descend into its hypothesis space if it lives in
            # this partition and has not already run dry
            if attribute in self._exhausted_frames:
                continue
            if self.network.level_node_for(attribute) is None:
                continue  # concluded in another partition; nothing to ask here
            frame = self.kb.frame_of(attribute)
            sub_target = frame.singleton(cand.pattern.value)
            if cand.pattern.negated:
                sub_target = sub_target.complement()
            self._stack.append(_Focus(attribute, sub_target, cand.rule_id))
            self._trace(
                "descend",
                attribute=attribute,
                target=list(sub_target.members()),
                rule=cand.rule_id,
            )
            return "descend", attribute
        return "exhausted", None

    def propagate_subspace(self) -> None:
        """Pop the active subspace and hand its winner to the parent frame.

        The winning hypothesis becomes established verifiable evidence with
        its Bel as belief; a subspace that ran dry below threshold still
        propagates its best value, flagged, rather than discarding it.
        """
        if len(self._stack) <= 1:
            raise EngineError("no nested hypothesis space to propagate from")
        focus = self._stack.pop()
        attr = focus.attribute
        leading = self.getmaxh(attr)
        if leading is None:
            self._exhausted_frames.add(attr)
            self._trace("propagate", attribute=attr, empty=True)
            return
        subset, bel = leading
        sub_threshold = not self.exitchk(attr)
        value = subset.members()[0]
        self._establish(attr, value, bel, SOURCE_PROPAGATED)
        self._trace(
            "propagate",
            attribute=attr,
            value=value,
            belief=bel,
            sub_threshold=sub_threshold,
        )

    def advance_partition(self) -> None:
        """Move to the next declared partition, or finish the session."""
        self._trace("partition-done", partition=self.partition)
        self._enter_next_partition()

    def _enter_next_partition(self) -> None:
        while True:
            self._cursor += 1
            if self._cursor >= len(self._order):
                self._finish()
                return
            net = self.networks[self.partition]
            goals = list(net.top_attributes)
            if goals:
                self._goals = goals
                self._goal_idx = 0
                self._stack = [_Focus(goals[0])]
                self._trace("partition", partition=self.partition, goals=goals)
                return

    def _finish(self) -> None:
        concluded_attrs = {c["attribute"] for c in self.conclusions}
        all_goals = [
            attr
            for p in self._order[: self._cursor]
            for attr in self.networks[p].top_attributes
        ]
        self.status = (
            CONCLUDED
            if all_goals and all(a in concluded_attrs for a in all_goals)
            else EXHAUSTED
        )
        self.pending = None
        self._stack = []
        self._trace("done", status=self.status)

    def _conclude_goal(self, attribute: str, met_threshold: bool) -> None:
        leading = self.getmaxh(attribute)
        if leading is None:
            self._trace("exhausted", attribute=attribute, vacuous=True)
        else:
            subset, bel = leading
            value = subset.members()[0]
            record = {
                "attribute": attribute,
                "value": value,
                "belief": bel,
                "met_threshold": met_threshold,
            }
            self.conclusions.append(record)
            self._establish(attribute, value, bel, SOURCE_PROPAGATED)
            self._trace("conclude", **record)
        self._goal_idx += 1
        if self._goal_idx < len(self._goals):
            self._stack = [_Focus(self._goals[self._goal_idx])]
        else:
            self.advance_partition()

    # --- the control loop ---------------------------------------------------

    def _advance(self) -> None:
        if self.status != AWAITING:
            return
        self.pending = None
        while True:
            self.deduce()
            if self.status != AWAITING:
                return
            focus = self._stack[-1]
            attr = focus.attribute
            if len(self._stack) > 1 and self._attribute_known(attr):
                # volunteered evidence already answers this descent; the
                # user's assertion wins over whatever the subspace derived
                self._stack.pop()
                self._trace("descend-satisfied", attribute=attr)
                continue
            passed = self.exitchk(attr)
            if passed:
                self._trace(
                    "exit",
                    attribute=attr,
                    belief=(self.getmaxh(attr) or (None, 0.0))[1],
                )
            if passed or attr in self._exhausted_frames:
                if len(self._stack) > 1:
                    self.propagate_subspace()
                else:
                    self._conclude_goal(attr, passed)
                    if self.status != AWAITING:
                        return
                continue
            question = self._select_startup_question()
            if question is not None:
                self.pending = question
                self._trace(
                    "question",
                    question_kind=question.kind,
                    attribute=question.attribute,
                    text=question.text,
                )
                return
            step, payload = self.chooseq()
            if step == "question":
                assert isinstance(payload, Question)
                self.pending = payload
                self._trace(
                    "question",
                    question_kind=ASK,
                    attribute=payload.attribute,
                    text=payload.text,
                )
                return
            if step == "descend":
                continue
            self._exhausted_frames.add(attr)
            self._trace("exhausted", attribute=attr)

    def _select_startup_question(self) -> Question | None:
        while self._initial_queue:
            attr = self._initial_queue[0]
            if self._attribute_known(attr) or attr in self._asked_done:
                self._initial_queue.pop(0)
                continue
            decl = self.kb.attributes[attr]
            return Question(attr, decl.query_text or attr, decl.values)
        if self._volunteer_pending:
            return Question(
                attribute=None,
                text="Enter any evidence relevant to this consultation.",
                kind=VOLUNTEER,
            )
        return None

    # --- user-facing input --------------------------------------------------

    def submit_answer(
        self, attribute: str, value: str, confidence: float = 1.0
    ) -> None:
        """Answer the pending directed question."""
        self._require_awaiting()
        if self.pending is None or self.pending.kind != ASK:
            raise EngineError("no directed question is pending")
        if attribute != self.pending.attribute:
            raise EngineError(
                f"pending question asks about {self.pending.attribute!r}, "
                f"not {attribute!r}"
            )
        if value == UNKNOWN:
            self._asked_done.add(attribute)
            self._trace("answer", attribute=attribute, response=UNKNOWN)
            self._advance()
            return
        if value == IRRELEVANT:
            self._volunteer_pending = True
            self._trace("answer", attribute=attribute, response=IRRELEVANT)
            self._advance()
            return
        decl = self.kb.attributes[attribute]
        if value not in decl.values:
            raise ValueError(f"{value!r} is not a value of {attribute!r}")
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence {confidence} outside [0, 1]")
        self._trace(
            "answer", attribute=attribute, value=value, confidence=confidence
        )
        self._establish(attribute, value, confidence, SOURCE_ANSWER)
        self._asked_done.add(attribute)
        self._advance()

    def volunteer(
        self, evidence: Iterable[tuple[str, str, float]] | Iterable
    ) -> None:
        """Establish user-offered evidence; an empty list declines to offer.

        Accepts (attribute, value) or (attribute, value, confidence) rows.
        """
        self._require_awaiting()
        rows = []
        for row in evidence:
            if len(row) == 2:
                attr, value = row
                confidence = 1.0
            else:
                attr, value, confidence = row
            decl = self.kb.attributes.get(attr)
            if decl is None:
                raise ValueError(f"unknown attribute {attr!r}")
            if value not in decl.values:
                raise ValueError(f"{value!r} is not a value of {attr!r}")
            if not 0.0 <= float(confidence) <= 1.0:
                raise ValueError(f"confidence {confidence} outside [0, 1]")
            rows.append((attr, value, float(confidence)))
        self._volunteer_pending = False
        if not rows:
            self._trace("volunteer", declined=True)
            self._advance()
            return
        self._trace(
            "volunteer",
            evidence=[
                {"attribute": a, "value": v, "confidence": c} for a, v, c in rows
            ],
        )
        for attr, value, confidence in rows:
            self._establish(attr, value, confidence, SOURCE_VOLUNTEERED)
        self._advance()

    # --- reporting ------------------------------------------------------------

    def report(self) -> dict:
        """Structured consultation report (schema 1)."""
        frames = {}
        for attr in self.frame_masses:
            mf = self.frame_masses[attr]
            frame = self.kb.frame_of(attr)
            frames[attr] = {
                "masses": mass_payload(mf),
                "ignorance": mf.theta_mass,
                "singletons": [
                    {
                        "value": v,
                        "bel": mf.bel(frame.singleton(v)),
                        "pl": mf.pl(frame.singleton(v)),
                    }
                    for v in frame.values
                ],
            }
        return {
            "schema": 1,
            "status": self.status,
            "threshold": self.policy.threshold,
            "partitions": list(self._order[: min(self._cursor + 1, len(self._order))]),
            "conclusions": list(self.conclusions),
            "frames": frames,
            "fired": list(self.fired),
            "established": [
                {
                    "attribute": ev.attribute,
                    "value": ev.value,
                    "belief": ev.belief,
                    "source": ev.source,
                }
                for ev in self.established.values()
            ],
            "trace": [event.as_dict() for event in self.trace],
        }


def start_session(
    kb: KnowledgeBase,
    policy: ExitPolicy | None = None,
    initial_evidence: Iterable[tuple[str, str, float]] | None = None,
) -> Session:
    """Open a consultation on a validated knowledge base."""
    return Session(kb, policy=policy, initial_evidence=initial_evidence)


def report_text(report: dict) -> str:
    """Human-readable rendering of a consultation report."""
    lines = ["=== consultation report ===", f"status: {report['status']}"]
    if report["conclusions"]:
        lines.append("conclusions:")
        for c in report["conclusions"]:
            flag = "" if c["met_threshold"] else "  [below threshold]"
            lines.append(
                f"  {c['attribute']} = {c['value']}"
                f"  (belief {c['belief']:.3f}){flag}"
            )
    else:
        lines.append("conclusions: none")
    for attr, entry in report["frames"].items():
        lines.append(f"frame {attr}:")
        for row in entry["masses"]:
            label = "{" + ", ".join(row["subset"]) + "}"
            lines.append(f"  m{label} = {row['mass']:.3f}")
        lines.append(f"  ignorance m(frame) = {entry['ignorance']:.3f}")
        for s in entry["singletons"]:
            lines.append(
                f"  {s['value']}: Bel {s['bel']:.3f}  Pl {s['pl']:.3f}"
            )
    lines.append(
        "fired rules: " + (", ".join(report["fired"]) if report["fired"] else "none")
    )
    lines.append(f"trace events: {len(report['trace'])}")
    return "\n".join(lines) + "\n"

"""Diagnostic expert-system shell built on Dempster-Shafer evidence theory."""

from importlib import resources

from .evidence import (
    ConflictError,
    Frame,
    FrameMismatchError,
    HypSubset,
    MassFunction,
    negate_subset,
)
from .kb import (
    AttributeDecl,
    Diagnostic,
    EvidencePattern,
    KbError,
    KnowledgeBase,
    Rule,
    lhs_belief,
    parse_kb,
    serialize_kb,
    validate_kb,
)
from .network import (
    Candidate,
    CompileError,
    HypothesisSpace,
    NetworkNode,
    RuleNetwork,
    WeightedLink,
    candidates_for,
    compile_network,
    emit_graph,
    subspace_of,
)
from .engine import (
    EngineError,
    EstablishedEvidence,
    ExitPolicy,
    Question,
    Session,
    TraceEvent,
    report_text,
    start_session,
)
from .editor import editor_session
from .script import Directive, ScriptError, parse_script, run_script

__all__ = [
    "AttributeDecl",
    "Candidate",
    "CompileError",
    "ConflictError",
    "Diagnostic",
    "Directive",
    "EngineError",
    "EstablishedEvidence",
    "EvidencePattern",
    "ExitPolicy",
    "Frame",
    "FrameMismatchError",
    "HypSubset",
    "HypothesisSpace",
    "KbError",
    "KnowledgeBase",
    "MassFunction",
    "NetworkNode",
    "Question",
    "Rule",
    "RuleNetwork",
    "ScriptError",
    "Session",
    "TraceEvent",
    "WeightedLink",
    "candidates_for",
    "compile_network",
    "demo_kb_path",
    "editor_session",
    "emit_graph",
    "lhs_belief",
    "load_demo_kb",
    "negate_subset",
    "parse_kb",
    "parse_script",
    "report_text",
    "run_script",
    "serialize_kb",
    "start_session",
    "subspace_of",
    "validate_kb",
]

__version__ = "0.1.0"


def demo_kb_path() -> str:
    """Filesystem path of the bundled hydrocarbon-play demo knowledge base."""
    return str(resources.files(__name__) / "data" / "play_site.kb")


def load_demo_kb() -> KnowledgeBase:
    """Parse and return the bundled demo knowledge base."""
    text = (resources.files(__name__) / "data" / "play_site.kb").read_text("utf-8")
    return parse_kb(text)

"""Extraction pipeline: phases, context, registry, and the runner.

Extractors run in five phases: parse, node, flow, annotation, finalize.
Within a phase extractors are order-independent: model mutations are
commutative merges and no extractor reads state written by a same-phase
peer.  Later phases may read anything earlier ones produced.  One failing
extractor never aborts the run; the failure lands in the report.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from ..model import Dfd, TraceEntry, normalize_name
from ..parsers import ComposeService, DockerfileInfo, PropertyEntry, PropertyMap, relaxed_key
from ..rules import RuleSet, load_rules
from ..search import FileIndex, Match, resolve_env_var

PHASES = ("parse", "node", "flow", "annotation", "finalize")


def trace_from(m: Match) -> TraceEntry:
    """TraceEntry for a search match, snippet taken from the matched span."""
    s, e = m.span
    return TraceEntry(m.file, m.line, m.span, m.line_text[s:e])


@dataclass
class ServiceRoot:
    """One buildable service directory discovered in the workspace."""

    name: str  # display name, e.g. "notification-service"
    canonical: str
    root: str  # repository-relative directory, "" for the repo root
    trace: TraceEntry
    has_java: bool = False
    properties: PropertyMap = field(default_factory=PropertyMap)
    compose_name: str | None = None


@dataclass
class Report:
    warnings: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)
    suppressed_self_flows: list[str] = field(default_factory=list)
    integrity: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def ok(self) -> bool:
        return not self.failures and not self.integrity


class Context:
    """Shared state flowing through the pipeline."""

    def __init__(self, index: FileIndex, rules: RuleSet, raw: bool = False) -> None:
        self.index = index
        self.rules = rules
        self.raw = raw  # search original text even where comments are masked
        self.dfd = Dfd()
        self.report = Report()
        # filled by the parse phase
        self.services: dict[str, ServiceRoot] = {}
        self.compose_services: list[ComposeService] = []
        self.dockerfiles: dict[str, DockerfileInfo] = {}
        # cross-phase hints
        self.datastores: list[tuple[str, str, str, TraceEntry]] = []  # owner, db, kind, trace
        self.lb_flow_hints: list[tuple[str, str]] = []

    def owner_of(self, path: str) -> ServiceRoot | None:
        """The service whose directory contains the path (deepest wins)."""
        best: ServiceRoot | None = None
        best_len = -1
        for svc in self.services.values():
            root = svc.root
            if root == "":
                if best_len < 0:
                    best, best_len = svc, 0
            elif path == root or path.startswith(root + "/"):
                if len(root) > best_len:
                    best, best_len = svc, len(root)
        return best

    def service_named(self, raw_name: str) -> ServiceRoot | None:
        try:
            return self.services.get(normalize_name(raw_name))
        except ValueError:
            return None


class Extractor:
    """Base class; subclasses set name and phase and implement run()."""

    name = "extractor"
    phase = "node"

    def run(self, ctx: Context) -> None:
        raise NotImplementedError


REGISTRY: list[Extractor] = []


def register(cls):
    """Class decorator adding one instance to the default pipeline."""
    if cls.phase not in PHASES:
        raise ValueError("extractor %s has unknown phase %r" % (cls.name, cls.phase))
    REGISTRY.append(cls())
    return cls


def default_extractors() -> list[Extractor]:
    from . import _load_all  # noqa: PLC0415

    _load_all()
    return list(REGISTRY)


def run_pipeline(
    index: FileIndex,
    rules: RuleSet | None = None,
    extractors: list[Extractor] | None = None,
    raw: bool = False,
) -> tuple[Dfd, Report]:
    """Run the extraction pipeline over an index and return (dfd, report).

    extractors may be any permutation of the defaults; they are grouped by
    phase and phases always run in their canonical order.
    """
    if rules is None:
        rules = load_rules()
    if extractors is None:
        extractors = default_extractors()
    ctx = Context(index, rules, raw=raw)
    ctx.report.warnings.extend(index.warnings)
    for epoch, phase in enumerate(PHASES):
        ctx.dfd.traces.epoch = epoch
        for ex in [e for e in extractors if e.phase == phase]:
            started = time.perf_counter()
            try:
                ex.run(ctx)
            except Exception as exc:  # noqa: BLE001
                ctx.report.failures.append((ex.name, repr(exc)))
            ctx.report.timings[ex.name] = time.perf_counter() - started
    ctx.report.suppressed_self_flows = list(ctx.dfd.suppressed_self_flows)
    ctx.report.integrity = ctx.dfd.validate()
    return ctx.dfd, ctx.report


# ============================================================================
# Placeholder resolution
# ============================================================================

_PLACEHOLDER = re.compile(r"\$\{([^}:{]+)(?::([^}{]*))?\}")


def resolve_text(
    ctx: Context, svc: ServiceRoot | None, text: str, origin_file: str
) -> tuple[str | None, TraceEntry | None]:
    """Substitute ${NAME} / ${NAME:default} placeholders in a config value.

    Resolution order per placeholder: the owning service's merged
    properties (covers compose environment bindings), the nearest .env
    file, then the inline default.  Returns (None, None) when any
    placeholder stays unresolved.  The trace points at the resolving entry
    when the whole value was a single placeholder.
    """
    text = text.strip()
    trace: TraceEntry | None = None
    whole = _PLACEHOLDER.fullmatch(text)

    def lookup(name: str, default: str | None) -> tuple[str | None, TraceEntry | None]:
        keys = [relaxed_key(name)]
        low = name.strip().lower()
        if low not in keys:
            keys.append(low)
        if svc is not None:
            for key in keys:
                e = svc.properties.get(key)
                if e is not None and "${" not in e.value and e.value.strip():
                    return e.value.strip(), e.trace()
        env_val = resolve_env_var(ctx.index, "${%s}" % name, origin_file)
        if env_val:
            return env_val, None
        if default is not None:
            return default.strip(), None
        return None, None

    out = []
    last = 0
    for m in _PLACEHOLDER.finditer(text):
        value, vtrace = lookup(m.group(1), m.group(2))
        if value is None:
            return None, None
        out.append(text[last : m.start()])
        out.append(value)
        last = m.end()
        if whole is not None and vtrace is not None:
            trace = vtrace
    out.append(text[last:])
    return "".join(out), trace


def resolve_entry(
    ctx: Context, svc: ServiceRoot | None, entry: PropertyEntry
) -> tuple[str | None, TraceEntry]:
    """Resolve one property entry's value; trace follows the resolution."""
    value, trace = resolve_text(ctx, svc, entry.value, entry.file)
    return value, trace or entry.trace()

"""Structured-file parsers with per-value source locations.

Everything here parses one indexed file into plain data plus TraceEntry
locations so extracted facts stay traceable to a file, line, and span.
YAML goes through the composer (not the loader) to keep line/column marks.
"""
from __future__ import annotations

import posixpath
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import yaml

from .model import TraceEntry
from .search import IndexedFile


class ParserError(Exception):
    """A file could not be parsed; carries the offending path."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__("%s: %s" % (path, reason))
        self.path = path


# ============================================================================
# Property entries (YAML and .properties)
# ============================================================================


@dataclass
class PropertyEntry:
    key: str  # dotted, lowercased; sequence elements carry [i]
    value: str
    file: str
    line: int  # 1-based, location of the value
    span: tuple[int, int]
    snippet: str
    profile: str | None = None

    def trace(self) -> TraceEntry:
        return TraceEntry(self.file, self.line, self.span, self.snippet)


class PropertyMap:
    """Merged configuration entries with suffix-tolerant lookup."""

    def __init__(self, entries=()) -> None:
        self.entries: list[PropertyEntry] = list(entries)

    def add(self, entries) -> None:
        self.entries.extend(entries)

    @staticmethod
    def _canon(key: str) -> str:
        # relaxed binding: server.ssl.key-store == server.ssl.keyStore
        return key.lower().replace("-", "")

    def find(self, dotted: str) -> list[PropertyEntry]:
        """Entries matching a dotted key exactly or by dotted suffix.

        Hyphens are ignored (relaxed binding) and both suffix directions
        are tolerated: a query spring.rabbitmq.host matches an entry
        rabbitmq.host and the other way round, which bridges environment
        variable bindings of typical deployments.
        """
        want = self._canon(dotted)
        keyed = [(self._canon(e.key), e) for e in self.entries]
        out = [e for k, e in keyed if k == want]
        if out:
            return out
        out = [e for k, e in keyed if k.endswith("." + want)]
        if out:
            return out
        return [e for k, e in keyed if want.endswith("." + k)]

    def get(self, dotted: str) -> PropertyEntry | None:
        found = self.find(dotted)
        if not found:
            return None
        unprofiled = [e for e in found if e.profile is None]
        return (unprofiled or found)[0]

    def value(self, dotted: str, default: str | None = None) -> str | None:
        e = self.get(dotted)
        return e.value if e is not None else default

    def find_prefix(self, prefix: str) -> list[PropertyEntry]:
        prefix = prefix.lower()
        return [
            e
            for e in self.entries
            if e.key == prefix or e.key.startswith(prefix + ".") or e.key.startswith(prefix + "[")
        ]

    def __len__(self) -> int:
        return len(self.entries)


# ----------------------------------------------------------------------------
# YAML
# ----------------------------------------------------------------------------


def _scalar_location(node, lines: list[str]) -> tuple[int, tuple[int, int], str]:
    line = node.start_mark.line + 1
    start = node.start_mark.column
    if node.end_mark.line == node.start_mark.line:
        end = node.end_mark.column
    else:
        end = len(lines[line - 1].rstrip()) if line - 1 < len(lines) else start
    if end <= start:
        end = start + 1
    raw = lines[line - 1] if line - 1 < len(lines) else ""
    return line, (start, end), raw[start:end]


def _flatten_yaml(node, prefix: str, lines: list[str], entries: list[PropertyEntry]) -> None:
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key_text = str(getattr(k, "value", ""))
            if key_text == "<<":
                _flatten_yaml(v, prefix, lines, entries)
                continue
            dotted = "%s.%s" % (prefix, key_text.lower()) if prefix else key_text.lower()
            _flatten_yaml(v, dotted, lines, entries)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _flatten_yaml(v, "%s[%d]" % (prefix, i), lines, entries)
    elif isinstance(node, yaml.ScalarNode):
        if not prefix:
            return
        line, span, snippet = _scalar_location(node, lines)
        entries.append(
            PropertyEntry(
                key=prefix,
                value=str(node.value),
                file="",
                line=line,
                span=span,
                snippet=snippet,
            )
        )


_PROFILE_KEYS = ("spring.profiles", "spring.config.activate.on-profile")


def parse_yaml_properties(file: IndexedFile) -> list[PropertyEntry]:
    """Flatten a (possibly multi-document) YAML file into dotted entries.

    Documents selecting a Spring profile keep all their entries, marked
    with that profile name.
    """
    entries: list[PropertyEntry] = []
    try:
        docs = list(yaml.compose_all(file.text))
    except yaml.YAMLError as exc:
        raise ParserError(file.path, "yaml: %s" % exc) from exc
    for doc in docs:
        if doc is None:
            continue
        doc_entries: list[PropertyEntry] = []
        _flatten_yaml(doc, "", file.lines, doc_entries)
        profile = None
        for e in doc_entries:
            if e.key in _PROFILE_KEYS:
                profile = e.value
                break
        for e in doc_entries:
            e.file = file.path
            e.profile = profile
        entries.extend(doc_entries)
    return entries


# ----------------------------------------------------------------------------
# .properties
# ----------------------------------------------------------------------------


def parse_properties_file(file: IndexedFile) -> list[PropertyEntry]:
    """Parse key=value (or key:value) lines, honoring \\ continuations."""
    entries: list[PropertyEntry] = []
    lines = file.lines
    i = 0
    while i < len(lines):
        raw = lines[i]
        stripped = raw.strip()
        if not stripped or stripped[0] in "#!":
            i += 1
            continue
        sep = len(stripped)
        for ch in "=:":
            idx = stripped.find(ch)
            if idx != -1 and idx < sep:
                sep = idx
        if sep == len(stripped):
            i += 1
            continue
        key = stripped[:sep].strip().lower()
        value = stripped[sep + 1 :].strip()
        # locate the value inside the original line for the span
        vstart = raw.find(stripped) + sep + 1
        while vstart < len(raw) and raw[vstart] in " \t":
            vstart += 1
        vend = len(raw.rstrip())
        if vend <= vstart:
            vstart, vend = 0, max(len(raw.rstrip()), 1)
        line_no = i + 1
        snippet = raw[vstart:vend]
        while value.endswith("\\") and i + 1 < len(lines):
            value = value[:-1].strip()
            i += 1
            value += lines[i].strip()
        if key:
            entries.append(
                PropertyEntry(key, value, file.path, line_no, (vstart, vend), snippet)
            )
        i += 1
    return entries


def relaxed_key(env_key: str) -> str:
    """SPRING_CLOUD_CONFIG_URI -> spring.cloud.config.uri."""
    return env_key.strip().lower().replace("__", ".").replace("_", ".")


# ============================================================================
# docker-compose
# ============================================================================


@dataclass
class ComposeService:
    name: str
    trace: TraceEntry
    image: str | None = None
    image_trace: TraceEntry | None = None
    build_context: str | None = None
    ports: list[tuple[int, TraceEntry]] = field(default_factory=list)
    environment: list[tuple[str, str, TraceEntry]] = field(default_factory=list)
    depends_on: list[str] = field(default_factory=list)
    links: list[str] = field(default_factory=list)


def _mapping_get(node: yaml.MappingNode, key: str):
    for k, v in node.value:
        if str(getattr(k, "value", "")) == key:
            return v
    return None


def _scalar(node) -> str | None:
    if isinstance(node, yaml.ScalarNode):
        return str(node.value)
    return None


def _container_port(spec: str) -> int | None:
    spec = spec.strip().strip("\"'")
    spec = spec.split("/")[0]
    parts = spec.split(":")
    candidate = parts[-1]
    try:
        return int(candidate)
    except ValueError:
        return None


def parse_compose(file: IndexedFile) -> list[ComposeService]:
    """Parse a docker-compose file into service declarations."""
    try:
        root = yaml.compose(file.text)
    except yaml.YAMLError as exc:
        raise ParserError(file.path, "yaml: %s" % exc) from exc
    if not isinstance(root, yaml.MappingNode):
        return []
    services_node = _mapping_get(root, "services")
    if not isinstance(services_node, yaml.MappingNode):
        # v1 files put services at the top level
        services_node = yaml.MappingNode(
            root.tag,
            [
                (k, v)
                for k, v in root.value
                if isinstance(v, yaml.MappingNode)
                and str(getattr(k, "value", "")) not in ("networks", "volumes", "version")
            ],
        )
    services: list[ComposeService] = []
    for k, v in services_node.value:
        name = str(getattr(k, "value", "")).strip()
        if not name or not isinstance(v, yaml.MappingNode):
            continue
        line, span, snippet = _scalar_location(k, file.lines)
        svc = ComposeService(name=name, trace=TraceEntry(file.path, line, span, snippet))
        img = _mapping_get(v, "image")
        if isinstance(img, yaml.ScalarNode):
            il, isp, isn = _scalar_location(img, file.lines)
            svc.image = str(img.value).strip()
            svc.image_trace = TraceEntry(file.path, il, isp, isn)
        build = _mapping_get(v, "build")
        if isinstance(build, yaml.ScalarNode):
            svc.build_context = str(build.value).strip()
        elif isinstance(build, yaml.MappingNode):
            ctx = _mapping_get(build, "context")
            if isinstance(ctx, yaml.ScalarNode):
                svc.build_context = str(ctx.value).strip()
        ports = _mapping_get(v, "ports")
        if isinstance(ports, yaml.SequenceNode):
            for p in ports.value:
                if isinstance(p, yaml.ScalarNode):
                    port = _container_port(str(p.value))
                    if port is not None:
                        pl, psp, psn = _scalar_location(p, file.lines)
                        svc.ports.append((port, TraceEntry(file.path, pl, psp, psn)))
                elif isinstance(p, yaml.MappingNode):
                    tgt = _mapping_get(p, "target")
                    if isinstance(tgt, yaml.ScalarNode):
                        port = _container_port(str(tgt.value))
                        if port is not None:
                            pl, psp, psn = _scalar_location(tgt, file.lines)
                            svc.ports.append((port, TraceEntry(file.path, pl, psp, psn)))
        env = _mapping_get(v, "environment")
        if isinstance(env, yaml.SequenceNode):
            for item in env.value:
                text = _scalar(item)
                if text and "=" in text:
                    ekey, _, eval_ = text.partition("=")
                    el, esp, esn = _scalar_location(item, file.lines)
                    svc.environment.append(
                        (ekey.strip(), eval_.strip(), TraceEntry(file.path, el, esp, esn))
                    )
        elif isinstance(env, yaml.MappingNode):
            for ek, ev in env.value:
                ekey = str(getattr(ek, "value", "")).strip()
                evalue = _scalar(ev)
                if ekey and evalue is not None:
                    el, esp, esn = _scalar_location(ev, file.lines)
                    svc.environment.append(
                        (ekey, evalue.strip(), TraceEntry(file.path, el, esp, esn))
                    )
        dep = _mapping_get(v, "depends_on")
        if isinstance(dep, yaml.SequenceNode):
            svc.depends_on = [str(d.value) for d in dep.value if isinstance(d, yaml.ScalarNode)]
        elif isinstance(dep, yaml.MappingNode):
            svc.depends_on = [str(getattr(dk, "value", "")) for dk, _ in dep.value]
        links = _mapping_get(v, "links")
        if isinstance(links, yaml.SequenceNode):
            svc.links = [
                str(l.value).partition(":")[0]
                for l in links.value
                if isinstance(l, yaml.ScalarNode)
            ]
        services.append(svc)
    return services


# ============================================================================
# Dockerfile
# ============================================================================


@dataclass
class DockerfileInfo:
    path: str
    base_image: str | None = None
    base_trace: TraceEntry | None = None
    exposed_ports: list[tuple[int, TraceEntry]] = field(default_factory=list)


def parse_dockerfile(file: IndexedFile) -> DockerfileInfo:
    info = DockerfileInfo(path=file.path)
    for i, raw in enumerate(file.lines):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        word = tokens[0].upper()
        if word == "FROM" and len(tokens) > 1:
            args = [t for t in tokens[1:] if not t.startswith("--")]
            if args:
                image = args[0]
                start = raw.find(image)
                info.base_image = image
                info.base_trace = TraceEntry(
                    file.path, i + 1, (start, start + len(image)), image
                )
        elif word == "EXPOSE":
            for tok in tokens[1:]:
                try:
                    port = int(tok.split("/")[0])
                except ValueError:
                    continue
                start = raw.find(tok)
                info.exposed_ports.append(
                    (port, TraceEntry(file.path, i + 1, (start, start + len(tok)), tok))
                )
    return info


# ============================================================================
# Build files (Maven / Gradle)
# ============================================================================


def parse_maven_modules(file: IndexedFile) -> list[str]:
    """Module directories declared by a pom.xml (namespace-agnostic)."""
    try:
        root = ET.fromstring(file.text)
    except ET.ParseError as exc:
        raise ParserError(file.path, "xml: %s" % exc) from exc
    modules = []
    for el in root.iter():
        if el.tag.rpartition("}")[2] == "module" and el.text:
            modules.append(el.text.strip())
    return [m for m in modules if m]


def parse_maven_artifact_id(file: IndexedFile) -> str | None:
    try:
        root = ET.fromstring(file.text)
    except ET.ParseError:
        return None
    for child in root:
        if child.tag.rpartition("}")[2] == "artifactId" and child.text:
            return child.text.strip()
    return None


_GRADLE_INCLUDE = re.compile(r"include\s*\(?\s*((?:['\"]:?[^'\"]+['\"]\s*,?\s*)+)\)?")
_GRADLE_PATH = re.compile(r"['\"](:?[^'\"]+)['\"]")


def parse_gradle_settings(file: IndexedFile) -> list[str]:
    """Project directories from settings.gradle include statements."""
    modules = []
    for m in _GRADLE_INCLUDE.finditer(file.text):
        for path in _GRADLE_PATH.findall(m.group(1)):
            modules.append(path.lstrip(":").replace(":", "/"))
    return modules


# ============================================================================
# Container image classification
# ============================================================================


@dataclass(frozen=True)
class ImageRule:
    pattern: str
    stereotype: str
    node_type: str


def load_image_catalog(lines) -> list[ImageRule]:
    rules = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError("bad image catalog line: %r" % raw)
        rules.append(ImageRule(parts[0].lower(), parts[1], parts[2]))
    return rules


def classify_image(image: str, rules: list[ImageRule]) -> ImageRule | None:
    """Classify a container image by its repository name.

    The tag is stripped and only the last path segment is compared; the
    longest matching pattern wins so more specific rules take precedence.
    """
    name = image.strip().lower()
    colon = name.rfind(":")
    if colon > name.rfind("/"):  # a colon after the last slash is a tag
        name = name[:colon]
    segment = posixpath.basename(name)
    best: ImageRule | None = None
    for rule in rules:
        if rule.pattern in segment:
            if best is None or len(rule.pattern) > len(best.pattern):
                best = rule
    return best

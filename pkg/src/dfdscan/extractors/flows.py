"""Flow phase: connections between nodes.

Each extractor here reads parse- and node-phase state only, creates flows
(materializing endpoint nodes where needed), and never looks at flows a
same-phase peer produced.
"""
from __future__ import annotations

import re
from urllib.parse import urlparse

from ..model import Flow, ModelError, Node
from ..search import find_keyword, resolve_cross_file
from .base import Context, Extractor, register, resolve_entry, resolve_text, trace_from

_LOCAL_HOSTS = frozenset({"localhost", "127.0.0.1", "0.0.0.0", "host.docker.internal"})


def _resolved_host(ctx: Context, svc, url_value: str, origin_file: str):
    """Resolve placeholders in a URL and return (hostname, trace_override)."""
    resolved, trace = resolve_text(ctx, svc, url_value, origin_file)
    if not resolved:
        return None, None
    if "://" not in resolved:
        resolved = "http://" + resolved
    host = urlparse(resolved).hostname
    return host, trace


def _joined_lines(file, start_line: int, count: int = 4) -> str:
    """A statement that may wrap across lines, re-joined for regexes."""
    lines = file.masked_lines[start_line - 1 : start_line - 1 + count]
    return " ".join(l.strip() for l in lines)


# ============================================================================
# HTTP clients
# ============================================================================

_FEIGN_NAME = re.compile(r"(?:name|value)\s*=\s*\"([^\"]+)\"")
_FEIGN_BARE = re.compile(r"@FeignClient\s*\(\s*\"([^\"]+)\"")
_FEIGN_URL = re.compile(r"url\s*=\s*\"([^\"]+)\"")
_FEIGN_IDENT = re.compile(r"(?:name|value)\s*=\s*([A-Za-z_][\w.]*)")
_STRING_DEF = re.compile(r"%s\s*=\s*\"([^\"]+)\"")


@register
class FeignFlows(Extractor):
    """Declarative HTTP clients: @FeignClient(name = "target")."""

    name = "feign_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for m in find_keyword(ctx.index, "@FeignClient", languages=("java",), raw=ctx.raw):
            owner = ctx.owner_of(m.file)
            if owner is None:
                continue
            file = ctx.index.by_path[m.file]
            stmt = _joined_lines(file, m.line)
            target = self._target_from(ctx, owner, m, stmt)
            if not target or target == owner.canonical:
                continue
            try:
                flow = Flow(
                    owner.name, target, ["restful_http", "feign_connection"]
                )
            except ModelError:
                continue
            ctx.dfd.upsert_flow(flow, trace_from(m))

    def _target_from(self, ctx: Context, owner, m, stmt: str) -> str | None:
        for rx in (_FEIGN_NAME, _FEIGN_BARE):
            hit = rx.search(stmt)
            if hit:
                value = hit.group(1)
                if "${" in value:
                    resolved, _ = resolve_text(ctx, owner, value, m.file)
                    return resolved
                return value
        hit = _FEIGN_URL.search(stmt)
        if hit:
            host, _ = _resolved_host(ctx, owner, hit.group(1), m.file)
            if host and host.lower() not in _LOCAL_HOSTS:
                return host
            return None
        hit = _FEIGN_IDENT.search(stmt)
        if hit:
            ident = hit.group(1)
            file = ctx.index.by_path[m.file]
            definition = re.search(
                _STRING_DEF.pattern % re.escape(ident.rpartition(".")[2]),
                file.masked_text,
            )
            if "." in ident:
                cross = resolve_cross_file(ctx.index, ident, m.file)
                if cross is not None and cross.value:
                    return cross.value
            if definition:
                return definition.group(1)
        return None


_URL_STOP = " \t\"'`)>,;"
_CLIENT_MARKERS = (
    "estTemplate",
    "ebClient",
    "HttpClient",
    "HttpGet",
    "HttpPost",
    "getForObject",
    "postForObject",
    "getForEntity",
    "postForEntity",
    ".exchange(",
    "OkHttp",
    "openConnection",
)
_SCHEMA_HOSTS = frozenset(
    {
        "www.w3.org",
        "maven.apache.org",
        "www.springframework.org",
        "java.sun.com",
        "schemas.xmlsoap.org",
        "xmlns.jcp.org",
    }
)


@register
class RestClientFlows(Extractor):
    """Programmatic HTTP calls with literal URLs."""

    name = "rest_client_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for m in find_keyword(ctx.index, "http", languages=("java",), raw=ctx.raw):
            line = m.line_text
            s = m.span[0]
            if not (line[s:].startswith("http://") or line[s:].startswith("https://")):
                continue
            if s > 0 and (line[s - 1].isalnum() or line[s - 1] in "_."):
                continue
            if not any(marker in line for marker in _CLIENT_MARKERS):
                continue
            owner = ctx.owner_of(m.file)
            if owner is None:
                continue
            end = s
            while end < len(line) and line[end] not in _URL_STOP:
                end += 1
            url = line[s:end]
            host, _ = _resolved_host(ctx, owner, url, m.file)
            if not host or host.lower() in _LOCAL_HOSTS:
                continue
            trace = trace_from(m)
            target_svc = ctx.service_named(host)
            if target_svc is not None:
                if target_svc.canonical == owner.canonical:
                    continue
                ctx.dfd.upsert_flow(
                    Flow(owner.name, target_svc.name, ["restful_http"]), trace
                )
            elif "." in host:
                if host.lower() in _SCHEMA_HOSTS:
                    continue
                site = Node(host, "external_entity", ["external_website"])
                ctx.dfd.upsert_node(site, trace)
                ctx.dfd.upsert_flow(Flow(owner.name, site.name, ["restful_http"]), trace)


# ============================================================================
# Platform connections from configuration
# ============================================================================


@register
class ConfigClientFlows(Extractor):
    """Configuration flowing from a config server to its clients."""

    name = "config_client_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for svc in ctx.services.values():
            entry = svc.properties.get("spring.cloud.config.uri")
            target = None
            trace = None
            if entry is not None:
                host, override = _resolved_host(ctx, svc, entry.value, entry.file)
                trace = override or entry.trace()
                if host and host.lower() not in _LOCAL_HOSTS:
                    target = host
                else:
                    target = self._config_server_name(ctx)
            else:
                disc = svc.properties.get("spring.cloud.config.discovery.service-id")
                if disc is not None:
                    value, trace = resolve_entry(ctx, svc, disc)
                    target = value
            if not target:
                continue
            try:
                flow = Flow(target, svc.name, ["restful_http"])
            except ModelError:
                continue
            ctx.dfd.upsert_flow(flow, trace)

    def _config_server_name(self, ctx: Context) -> str | None:
        owners = set()
        for m in find_keyword(
            ctx.index, "@EnableConfigServer", languages=("java",), raw=ctx.raw
        ):
            owner = ctx.owner_of(m.file)
            if owner is not None:
                owners.add(owner.name)
        if len(owners) == 1:
            return owners.pop()
        return None


@register
class DiscoveryFlows(Extractor):
    """Service registration with a discovery server."""

    name = "discovery_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        eureka_owner = self._eureka_server_name(ctx)
        for svc in ctx.services.values():
            entry = svc.properties.get("eureka.client.serviceurl.defaultzone")
            if entry is None:
                entry = svc.properties.get("eureka.client.service-url.defaultzone")
            if entry is None:
                continue
            host, override = _resolved_host(ctx, svc, entry.value, entry.file)
            trace = override or entry.trace()
            target = None
            if host and host.lower() not in _LOCAL_HOSTS:
                target = host
            elif eureka_owner is not None:
                target = eureka_owner
            if not target:
                continue
            registry = Node(target, "service", ["service_discovery"])
            registry = ctx.dfd.upsert_node(registry, trace)
            if registry.name == svc.canonical:
                continue
            ctx.dfd.upsert_flow(Flow(svc.name, target, ["restful_http"]), trace)

    def _eureka_server_name(self, ctx: Context) -> str | None:
        owners = set()
        for m in find_keyword(
            ctx.index, "@EnableEurekaServer", languages=("java",), raw=ctx.raw
        ):
            owner = ctx.owner_of(m.file)
            if owner is not None:
                owners.add(owner.name)
        if len(owners) == 1:
            return owners.pop()
        return None


# ============================================================================
# Message brokers
# ============================================================================

_RABBIT_PRODUCER = ("rabbitTemplate.convertAndSend", "amqpTemplate.convertAndSend", "@Output(")
_RABBIT_CONSUMER = ("@RabbitListener", "@RabbitHandler", "@StreamListener", "@Input(")
_KAFKA_PRODUCER = ("kafkaTemplate.send", "KafkaTemplate<")
_KAFKA_CONSUMER = ("@KafkaListener",)


@register
class BrokerFlows(Extractor):
    """Produce/consume connections through message brokers."""

    name = "broker_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        produced: dict[str, list] = {}
        consumed: dict[str, list] = {}

        def note(slot, m):
            owner = ctx.owner_of(m.file)
            if owner is not None:
                slot.setdefault(owner.canonical, []).append(trace_from(m))

        for kw in _RABBIT_PRODUCER + _KAFKA_PRODUCER:
            for m in find_keyword(ctx.index, kw, languages=("java",), raw=ctx.raw):
                note(produced, m)
        for kw in _RABBIT_CONSUMER + _KAFKA_CONSUMER:
            for m in find_keyword(ctx.index, kw, languages=("java",), raw=ctx.raw):
                note(consumed, m)

        for svc in ctx.services.values():
            kind, broker_name, host_trace = self._broker_of(ctx, svc)
            out_traces = list(produced.get(svc.canonical, []))
            in_traces = list(consumed.get(svc.canonical, []))
            bindings = svc.properties.find_prefix("spring.cloud.stream.bindings")
            out_bind = [e for e in bindings if ".output" in e.key or ".out" in e.key]
            in_bind = [e for e in bindings if ".input" in e.key or ".in." in e.key]
            if out_bind:
                out_traces.append(out_bind[0].trace())
            if in_bind:
                in_traces.append(in_bind[0].trace())
            if kind is None and (out_traces or in_traces):
                kind, broker_name = "rabbitmq", self._default_broker(ctx, "rabbitmq")
            if kind is None or broker_name is None:
                continue
            broker = Node(broker_name, "service", ["message_broker"])
            broker = ctx.dfd.upsert_node(broker, host_trace or svc.trace)
            if broker.name == svc.canonical:
                continue
            for trace in out_traces:
                ctx.dfd.upsert_flow(
                    Flow(svc.name, broker_name, ["message_producer_%s" % kind]), trace
                )
            for trace in in_traces:
                ctx.dfd.upsert_flow(
                    Flow(broker_name, svc.name, ["message_consumer_%s" % kind]), trace
                )
            if not out_traces and not in_traces and host_trace is not None:
                ctx.dfd.upsert_flow(Flow(svc.name, broker_name, []), host_trace)

    def _broker_of(self, ctx: Context, svc):
        entry = svc.properties.get("spring.rabbitmq.host")
        if entry is not None:
            host, trace = resolve_entry(ctx, svc, entry)
            name = host if host and host.lower() not in _LOCAL_HOSTS else self._default_broker(ctx, "rabbitmq")
            return "rabbitmq", name, trace
        entry = svc.properties.get("spring.kafka.bootstrap-servers")
        if entry is None:
            entry = svc.properties.get("spring.cloud.stream.kafka.binder.brokers")
        if entry is not None:
            value, trace = resolve_entry(ctx, svc, entry)
            host = (value or "").split(",")[0].split(":")[0].strip()
            name = host if host and host.lower() not in _LOCAL_HOSTS else self._default_broker(ctx, "kafka")
            return "kafka", name, trace
        return None, None, None

    def _default_broker(self, ctx: Context, kind: str) -> str:
        for comp in ctx.compose_services:
            if comp.image and kind in comp.image:
                return comp.name
        return kind


# ============================================================================
# Datastores, mail, and repositories
# ============================================================================


@register
class DatastoreFlows(Extractor):
    """Connections from services to the datastores they configure."""

    name = "datastore_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for owner, db, kind, trace in ctx.datastores:
            if owner == db:
                continue
            owner_svc = ctx.services.get(owner)
            sender = owner_svc.name if owner_svc else owner
            stereotypes = ["jdbc"] if kind == "jdbc" else []
            ctx.dfd.upsert_flow(Flow(sender, db, stereotypes), trace)


@register
class MailFlows(Extractor):
    """Outbound mail server connections."""

    name = "mail_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for svc in ctx.services.values():
            entry = svc.properties.get("spring.mail.host")
            trace = None
            if entry is not None:
                _, trace = resolve_entry(ctx, svc, entry)
            else:
                hits = [
                    m
                    for m in find_keyword(
                        ctx.index, "JavaMailSender", languages=("java",), raw=ctx.raw
                    )
                    if ctx.owner_of(m.file) is svc
                ]
                if hits:
                    trace = trace_from(hits[0])
            if trace is None:
                continue
            mail = Node("mail-server", "external_entity", ["mail_server"])
            ctx.dfd.upsert_node(mail, trace)
            ctx.dfd.upsert_flow(Flow(svc.name, "mail-server", []), trace)


@register
class ConfigRepoFlows(Extractor):
    """Configuration repositories feeding config servers."""

    name = "config_repo_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for svc in ctx.services.values():
            entry = svc.properties.get("spring.cloud.config.server.git.uri")
            if entry is None:
                continue
            value, trace = resolve_entry(ctx, svc, entry)
            if not value:
                continue
            repo = Node("github-repository", "external_entity", ["github_repository"])
            ctx.dfd.upsert_node(repo, trace)
            ctx.dfd.annotate(repo.name, tags={"URL": value}, trace=trace)
            ctx.dfd.upsert_flow(Flow("github-repository", svc.name, []), trace)


# ============================================================================
# Routing, auth, and observability
# ============================================================================


@register
class GatewayRouteFlows(Extractor):
    """Routes from gateway services to the targets they proxy."""

    name = "gateway_route_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for svc in ctx.services.values():
            self._zuul(ctx, svc)
            self._cloud_gateway(ctx, svc)

    def _zuul(self, ctx: Context, svc) -> None:
        routes: dict[str, dict] = {}
        for e in svc.properties.find_prefix("zuul.routes"):
            rest = e.key[len("zuul.routes.") :]
            route_id, _, attr = rest.partition(".")
            routes.setdefault(route_id, {})[attr] = e
        for route_id in sorted(routes):
            attrs = routes[route_id]
            target = None
            entry = None
            if "serviceid" in attrs:
                entry = attrs["serviceid"]
                target, trace = resolve_entry(ctx, svc, entry)
            elif "url" in attrs:
                entry = attrs["url"]
                target, trace = _resolved_host(ctx, svc, entry.value, entry.file)
                trace = trace or entry.trace()
            else:
                entry = next(iter(attrs.values()))
                trace = entry.trace()
                if ctx.service_named(route_id) is not None:
                    target = route_id
            if not target:
                continue
            try:
                flow = Flow(svc.name, target, ["restful_http"])
            except ModelError:
                continue
            ctx.dfd.upsert_flow(flow, trace)

    def _cloud_gateway(self, ctx: Context, svc) -> None:
        for e in svc.properties.find_prefix("spring.cloud.gateway.routes"):
            if not e.key.endswith(".uri"):
                continue
            value, trace = resolve_entry(ctx, svc, e)
            if not value:
                continue
            lb = value.startswith("lb://")
            host = value[5:].split("/")[0] if lb else urlparse(value).hostname
            if not host or host.lower() in _LOCAL_HOSTS:
                continue
            try:
                flow = Flow(svc.name, host, ["restful_http"])
            except ModelError:
                continue
            merged = ctx.dfd.upsert_flow(flow, trace)
            if lb and merged is not None:
                ctx.lb_flow_hints.append(merged.key)


@register
class OAuthFlows(Extractor):
    """Token traffic between services and their authorization server."""

    name = "oauth_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        auth_owner = self._auth_server_name(ctx)
        for svc in ctx.services.values():
            entry = None
            for key in (
                "security.oauth2.client.access-token-uri",
                "security.oauth2.resource.user-info-uri",
                "spring.security.oauth2.client.provider.token-uri",
            ):
                entry = svc.properties.get(key)
                if entry is not None:
                    break
            if entry is None:
                continue
            host, override = _resolved_host(ctx, svc, entry.value, entry.file)
            trace = override or entry.trace()
            target = None
            if host and host.lower() not in _LOCAL_HOSTS:
                target = host
            elif auth_owner is not None:
                target = auth_owner
            if not target:
                continue
            try:
                flow = Flow(svc.name, target, ["restful_http", "auth_provider"])
            except ModelError:
                continue
            ctx.dfd.upsert_flow(flow, trace)

    def _auth_server_name(self, ctx: Context) -> str | None:
        owners = set()
        for m in find_keyword(
            ctx.index, "@EnableAuthorizationServer", languages=("java",), raw=ctx.raw
        ):
            owner = ctx.owner_of(m.file)
            if owner is not None:
                owners.add(owner.name)
        if len(owners) == 1:
            return owners.pop()
        return None


@register
class TracingFlows(Extractor):
    """Trace shipping to a distributed tracing server."""

    name = "tracing_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for svc in ctx.services.values():
            entry = svc.properties.get("spring.zipkin.base-url")
            if entry is None:
                entry = svc.properties.get("spring.zipkin.baseurl")
            if entry is None:
                continue
            host, override = _resolved_host(ctx, svc, entry.value, entry.file)
            trace = override or entry.trace()
            if not host or host.lower() in _LOCAL_HOSTS:
                continue
            tracer = Node(host, "service", ["tracing_server"])
            tracer = ctx.dfd.upsert_node(tracer, trace)
            if tracer.name == svc.canonical:
                continue
            ctx.dfd.upsert_flow(Flow(svc.name, host, ["restful_http"]), trace)


@register
class MonitoringFlows(Extractor):
    """Metric aggregation: turbine clusters and admin clients.

    A turbine app list that names the turbine service itself would create a
    self-flow; those are emitted with allow_self and end up suppressed and
    counted rather than drawn.
    """

    name = "monitoring_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for svc in ctx.services.values():
            for key in ("turbine.app-config", "turbine.appconfig"):
                entry = svc.properties.get(key)
                if entry is not None:
                    value, trace = resolve_entry(ctx, svc, entry)
                    for app in (value or "").split(","):
                        app = app.strip()
                        if not app:
                            continue
                        flow = Flow(app, svc.name, ["restful_http"], allow_self=True)
                        ctx.dfd.upsert_flow(flow, trace)
                    break
            entry = svc.properties.get("spring.boot.admin.url")
            if entry is None:
                entry = svc.properties.get("spring.boot.admin.client.url")
            if entry is None:
                continue
            host, override = _resolved_host(ctx, svc, entry.value, entry.file)
            trace = override or entry.trace()
            if not host or host.lower() in _LOCAL_HOSTS:
                continue
            try:
                flow = Flow(svc.name, host, ["restful_http"])
            except ModelError:
                continue
            ctx.dfd.upsert_flow(flow, trace)


@register
class ImplicitUserFlows(Extractor):
    """The human user entering the system through its gateways."""

    name = "implicit_user_flows"
    phase = "flow"

    def run(self, ctx: Context) -> None:
        for node in ctx.dfd.sorted_nodes():
            if "gateway" not in node.stereotypes or node.node_type != "service":
                continue
            rec = ctx.dfd.traces.get(node.name)
            if rec is None:
                continue
            trace = rec.primary
            user = Node("user", "external_entity", ["user"])
            ctx.dfd.upsert_node(user, trace)
            ctx.dfd.upsert_flow(Flow("user", node.name, ["restful_http"]), trace)
            ctx.dfd.upsert_flow(Flow(node.name, "user", ["restful_http"]), trace)

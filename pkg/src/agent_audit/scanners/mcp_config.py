"""Structured scanner for MCP server configuration files.

Every check walks the parsed document, never raw text; the original text
is consulted only to anchor findings to line numbers. Nine config layouts
are recognized by filename (and directory hints where needed). A file
that matches an unambiguous MCP filename but does not parse yields a
parse-failure finding rather than a crash or silence.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import posixpath
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import yaml

from .. import catalog
from ..distance import levenshtein
from ..model import Finding, Modulation, SourceSpan

_DATA = catalog.load_data("mcp.json")
_PHRASES = catalog.load_data("phrases.json")

_DANGEROUS_PATHS = set(_DATA["dangerous_paths"])
_WRITE_FLAGS = set(_DATA["write_flags"])
_WRITE_CONFIG_KEYS: dict[str, Any] = _DATA["write_config_keys"]
_TRAVERSAL = _DATA["path_traversal_markers"]
_WILDCARDS = set(_DATA["wildcard_markers"])
_SENSITIVE_ENV_RE = re.compile(_DATA["sensitive_env_regex"])
_SAFE_ENV_KEYS = set(_DATA["safe_env_keys"])
_REMOTE_TRANSPORTS = set(_DATA["remote_transport_types"])
_AUTH_ENV_RE = re.compile(_DATA["auth_env_regex"])
_AUTH_CONFIG_KEYS = set(_DATA["auth_config_keys"])
_RISKY_COMMANDS = set(_DATA["risky_command_keywords"])
_RISKY_ARGS = _DATA["risky_arg_keywords"]
_SHELL_META_RE = re.compile(_DATA["shell_metachar_regex"])
_PACKAGE_RUNNERS = set(_DATA["package_runners"])
_VERSION_PIN_RE = re.compile(_DATA["version_pin_regex"])
_SERVER_THRESHOLD = _DATA["server_count_threshold"]
_NEAR_MAX = _DATA["near_collision_max_distance"]
_NEAR_MIN_LEN = _DATA["near_collision_min_length"]

_POISON_SETS = {
    "poison-instruction-override": [re.compile(p, re.IGNORECASE) for p in _PHRASES["instruction_override"]],
    "poison-exfil-url": [re.compile(p, re.IGNORECASE) for p in _PHRASES["exfil_url"]],
    "poison-cross-tool": [re.compile(p, re.IGNORECASE) for p in _PHRASES["cross_tool"]],
}

_TOOL_LIST_KEYS = ("tools", "alwaysAllow", "allowedTools", "autoApprove", "allowlist")
_DESCRIPTION_KEYS = ("description", "instructions", "about", "notes")

SCANNER_NAME = "mcp-config"

# Filenames that are *only* ever MCP configs; a parse failure there is a
# finding. settings.json and workspace files are shared with other tools.
_AMBIGUOUS_FILENAMES = {"settings.json"}


@dataclass
class ServerSpec:
    """One server entry, normalized."""

    name: str
    command: str = ""
    args: list[str] = field(default_factory=list)
    env: dict[str, Any] = field(default_factory=dict)
    transport: str = ""
    url: str = ""
    raw: dict[str, Any] = field(default_factory=dict)


def match_format(path: str) -> Optional[dict[str, Any]]:
    """The first format spec whose filename (and dir hint) matches."""
    base = posixpath.basename(path)
    parts = set(path.replace("\\", "/").split("/"))
    for spec in _DATA["formats"]:
        hinted = spec.get("dir_hints")
        if hinted and not any(h in parts for h in hinted):
            continue
        for pattern in spec["filenames"]:
            if fnmatch.fnmatch(base, pattern):
                return spec
    return None


def is_mcp_path(path: str) -> bool:
    return match_format(path) is not None


def _find_servers(document: Any, server_keys: list[str], nested: bool) -> Optional[dict]:
    if not isinstance(document, dict):
        return None
    for key in server_keys:
        value = document.get(key)
        if isinstance(value, dict):
            return value
    if nested:
        for value in document.values():
            found = _find_servers(value, server_keys, nested)
            if found is not None:
                return found
    return None


def parse_servers(path: str, text: str) -> tuple[Optional[dict], Optional[str]]:
    """(servers dict or None, parse error or None) for one file."""
    spec = match_format(path)
    if spec is None:
        return None, None
    try:
        if path.endswith((".yaml", ".yml")):
            document = yaml.safe_load(text)
        else:
            document = json.loads(text)
    except (ValueError, yaml.YAMLError) as exc:
        base = posixpath.basename(path)
        if base in _AMBIGUOUS_FILENAMES or base.endswith(".code-workspace"):
            return None, None
        return None, str(exc).splitlines()[0]
    servers = _find_servers(document, spec["server_keys"], spec.get("nested", False))
    return servers, None


def normalize_server(name: str, entry: Any) -> ServerSpec:
    if not isinstance(entry, dict):
        return ServerSpec(name=name, raw={"_malformed": entry})
    args = entry.get("args")
    env = entry.get("env")
    return ServerSpec(
        name=name,
        command=entry.get("command") if isinstance(entry.get("command"), str) else "",
        args=[str(a) for a in args] if isinstance(args, list) else [],
        env=dict(env) if isinstance(env, dict) else {},
        transport=str(entry.get("type") or entry.get("transport") or ""),
        url=str(entry.get("url") or entry.get("serverUrl") or ""),
        raw=entry,
    )


class _LineIndex:
    """Anchors findings: first line at or after a start line containing a
    token. Falls back to the start line."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def find(self, token: str, start: int = 1) -> int:
        for offset, line in enumerate(self.lines[start - 1:], start=start):
            if token in line:
                return offset
        return start

    def server_line(self, name: str) -> int:
        quoted = f'"{name}"'
        for no, line in enumerate(self.lines, start=1):
            if quoted in line or line.strip().startswith(f"{name}:"):
                return no
        return 1


def canonical_digest(server: ServerSpec, tool_descriptions: Iterable[str] = ()) -> str:
    """Stable content hash for baseline comparison."""
    payload = {
        "name": server.name,
        "command": server.command,
        "args": list(server.args),
        "env_keys": sorted(server.env.keys()),
        "tool_descriptions": sorted(tool_descriptions),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def package_ref(server: ServerSpec) -> Optional[str]:
    """The package a runner command launches, e.g. @scope/name@1.2.0."""
    command = posixpath.basename(server.command or "")
    if command not in _PACKAGE_RUNNERS:
        return None
    for arg in server.args:
        if arg.startswith("-"):
            continue
        return arg
    return None


def _strip_version(package: str) -> str:
    if package.startswith("@"):
        scope_rest = package[1:]
        if "@" in scope_rest:
            return "@" + scope_rest.split("@", 1)[0]
        return package
    return package.split("@", 1)[0]


def _is_trusted(ref: str, trust_list: Iterable[str]) -> bool:
    base = _strip_version(ref)
    for trusted in trust_list:
        if base == trusted or ref == trusted:
            return True
        if trusted.startswith("@") and "/" not in trusted and base.startswith(trusted + "/"):
            return True
    return False


def _pathlike(token: str) -> bool:
    return (
        token.startswith(("/", "~", "$HOME", "${HOME}"))
        or re.match(r"^[A-Za-z]:[\\/]", token) is not None
        or any(marker in token for marker in _TRAVERSAL)
        or token in _WILDCARDS
    )


def _dangerous_path(token: str) -> bool:
    if token in _WILDCARDS or any(marker in token for marker in _TRAVERSAL):
        return True
    cleaned = token.rstrip("/\\") or token
    return token in _DANGEROUS_PATHS or cleaned in _DANGEROUS_PATHS


class _McpScan:
    def __init__(self, path: str, text: str, config: Any = None):
        self.path = path
        self.text = text
        self.config = config
        self.index = _LineIndex(text)
        self.findings: list[Finding] = []

    def emit(
        self,
        pattern_id: str,
        line: int,
        message: str,
        modulations: Optional[list[Modulation]] = None,
        notes: Optional[list[str]] = None,
    ) -> None:
        rule = catalog.rule_for_pattern(pattern_id)
        snippet = ""
        if 1 <= line <= len(self.index.lines):
            snippet = self.index.lines[line - 1].strip()[:160]
        self.findings.append(
            Finding(
                rule_id=rule.rule_id,
                message=message,
                span=SourceSpan(self.path, line, line),
                scanner=SCANNER_NAME,
                pattern_id=pattern_id,
                base_confidence=rule.base_confidence,
                modulations=list(modulations or []),
                snippet=snippet,
                notes=list(notes or []),
            )
        )

    def run(self) -> list[Finding]:
        servers_raw, parse_error = parse_servers(self.path, self.text)
        if parse_error is not None:
            self.emit(
                "mcp-parse-failure",
                1,
                f"MCP configuration could not be parsed: {parse_error}",
            )
            return self.findings
        if not isinstance(servers_raw, dict):
            return self.findings

        servers = [normalize_server(str(n), e) for n, e in servers_raw.items()]

        if len(servers) > _SERVER_THRESHOLD:
            self.emit(
                "mcp-excessive-servers",
                1,
                f"{len(servers)} MCP servers configured (threshold {_SERVER_THRESHOLD}); "
                "each one widens the agent's reach",
            )

        for server in servers:
            start = self.index.server_line(server.name)
            self.check_schema(server, start)
            self.check_filesystem_scope(server, start)
            self.check_source_trust(server, start)
            self.check_env(server, start)
            self.check_stdio_profile(server, start)
            self.check_remote_auth(server, start)
            self.check_arg_injection(server, start)
            self.check_wildcard_allowlist(server, start)
            self.check_poison_text(server, start)

        self.check_shadowing(servers)
        self.check_baseline(servers)
        return self.findings

    # -- per-server checks ---------------------------------------------------

    def check_schema(self, server: ServerSpec, start: int) -> None:
        raw = server.raw
        problems = []
        if "_malformed" in raw:
            problems.append("entry is not an object")
        else:
            if not server.command and not server.url:
                problems.append("neither command nor url present")
            if "args" in raw and not isinstance(raw["args"], list):
                problems.append("args is not a list")
            if "env" in raw and not isinstance(raw["env"], dict):
                problems.append("env is not a mapping")
            if "command" in raw and not isinstance(raw["command"], str):
                problems.append("command is not a string")
        for problem in problems:
            self.emit(
                "mcp-schema-violation",
                start,
                f"server {server.name!r}: {problem}",
            )

    def check_filesystem_scope(self, server: ServerSpec, start: int) -> None:
        write_enabled = any(arg in _WRITE_FLAGS for arg in server.args)
        for key, marker in _WRITE_CONFIG_KEYS.items():
            if server.raw.get(key) == marker:
                write_enabled = True

        granted = [a for a in server.args if _pathlike(a)]
        granted += [
            str(v) for v in server.env.values()
            if isinstance(v, str) and v.startswith(("/", "~")) and _pathlike(v)
        ]
        dangerous = [p for p in granted if _dangerous_path(p)]
        if not dangerous:
            return
        anchor = self.index.find(dangerous[0], start)
        if write_enabled:
            self.emit(
                "mcp-fs-write-root",
                anchor,
                f"server {server.name!r} gets write access at {dangerous[0]!r}",
                notes=[f"granted paths: {', '.join(granted)}"],
            )
        else:
            self.emit(
                "mcp-fs-root-access",
                anchor,
                f"server {server.name!r} is rooted at {dangerous[0]!r}",
                notes=[f"granted paths: {', '.join(granted)}"],
            )

    def check_source_trust(self, server: ServerSpec, start: int) -> None:
        trust_list = getattr(self.config, "trust_list", None) or []
        ref = package_ref(server)
        if ref is not None:
            if _is_trusted(ref, trust_list):
                return
            anchor = self.index.find(ref, start)
            pinned = _VERSION_PIN_RE.search(ref) is not None
            modulations = []
            notes = []
            if pinned:
                modulations.append(
                    Modulation(
                        "pinned_version_trust", "multiply",
                        catalog.mechanism_value("pinned_version_trust"),
                    )
                )
                notes.append("version is pinned; the package is at least immutable")
            else:
                self.emit(
                    "mcp-unpinned-version",
                    anchor,
                    f"package {ref!r} floats to whatever version the registry serves next",
                )
            self.emit(
                "mcp-unverified-source",
                anchor,
                f"server package {ref!r} is not on the trust list",
                modulations=modulations,
                notes=notes,
            )
        elif server.url:
            host = re.sub(r"^[a-z+]+://", "", server.url).split("/")[0].split(":")[0]
            if host and not any(host == t or host.endswith("." + t) for t in trust_list):
                anchor = self.index.find(server.url, start)
                self.emit(
                    "mcp-unverified-source",
                    anchor,
                    f"remote server host {host!r} is not on the trust list",
                )

    def check_env(self, server: ServerSpec, start: int) -> None:
        for key, value in server.env.items():
            if not isinstance(value, str):
                continue
            reference = (
                value == ""
                or value.startswith("$")
                or (value.startswith("${") and value.endswith("}"))
                or value.startswith("%")
            )
            sensitive_name = (
                _SENSITIVE_ENV_RE.search(key) is not None and key not in _SAFE_ENV_KEYS
            )
            anchor = self.index.find(f'"{key}"', start)
            if sensitive_name and not reference:
                looks_secret = len(value) >= 8 and not value.isdigit()
                if looks_secret:
                    self.emit(
                        "mcp-secret-env-value",
                        anchor,
                        f"credential for {key!r} is written into the config itself",
                    )
                else:
                    self.emit(
                        "mcp-sensitive-env-name",
                        anchor,
                        f"sensitive variable {key!r} carries a literal value",
                    )

    def check_stdio_profile(self, server: ServerSpec, start: int) -> None:
        command = posixpath.basename(server.command or "")
        if command not in _RISKY_COMMANDS:
            return
        haystack = " ".join(server.args + [server.name]).lower()
        hits = [kw for kw in _RISKY_ARGS if kw in haystack]
        if not hits:
            return
        anchor = self.index.find(server.command, start)
        self.emit(
            "mcp-stdio-no-sandbox",
            anchor,
            f"server {server.name!r} launches an interpreter ({command}) with "
            f"{'/'.join(hits)} capability and no sandbox",
        )

    def check_remote_auth(self, server: ServerSpec, start: int) -> None:
        remote = server.transport.lower() in _REMOTE_TRANSPORTS or bool(server.url)
        if not remote or not server.url:
            if not (remote and server.transport.lower() in _REMOTE_TRANSPORTS):
                return
        has_auth = any(_AUTH_ENV_RE.search(k) for k in server.env)
        has_auth = has_auth or any(k in _AUTH_CONFIG_KEYS for k in server.raw)
        if has_auth:
            return
        anchor = self.index.find(server.url, start) if server.url else start
        modulations = []
        host = re.sub(r"^[a-z+]+://", "", server.url).split("/")[0].split(":")[0] if server.url else ""
        if host in ("localhost", "127.0.0.1", "::1"):
            modulations.append(
                Modulation(
                    "localhost_discount", "multiply",
                    catalog.mechanism_value("localhost_discount"),
                )
            )
        self.emit(
            "mcp-http-no-auth",
            anchor,
            f"remote server {server.name!r} is reached without any authentication",
            modulations=modulations,
        )

    def check_arg_injection(self, server: ServerSpec, start: int) -> None:
        for arg in server.args:
            if _SHELL_META_RE.search(arg):
                anchor = self.index.find(arg[:24], start)
                self.emit(
                    "mcp-arg-injection",
                    anchor,
                    f"server {server.name!r} argument embeds shell syntax: {arg[:60]!r}",
                )
                return

    def check_wildcard_allowlist(self, server: ServerSpec, start: int) -> None:
        for key in _TOOL_LIST_KEYS:
            value = server.raw.get(key)
            if isinstance(value, list) and any(v in _WILDCARDS for v in value):
                anchor = self.index.find(f'"{key}"', start)
                self.emit(
                    "mcp-wildcard-allowlist",
                    anchor,
                    f"server {server.name!r} {key} contains a wildcard; every tool "
                    "is pre-approved",
                )

    def check_poison_text(self, server: ServerSpec, start: int) -> None:
        texts = []
        for key in _DESCRIPTION_KEYS:
            value = server.raw.get(key)
            if isinstance(value, str):
                texts.append(value)
        for pattern_id, regexes in _POISON_SETS.items():
            for text_value in texts:
                if any(rx.search(text_value) for rx in regexes):
                    self.emit(
                        pattern_id,
                        start,
                        f"server {server.name!r} description carries "
                        f"{pattern_id.removeprefix('poison-').replace('-', ' ')} phrasing",
                    )
                    break

    # -- cross-server checks ---------------------------------------------------

    def check_shadowing(self, servers: list[ServerSpec]) -> None:
        named: list[tuple[str, str]] = []
        for server in servers:
            named.append((server.name, server.name))
            for key in _TOOL_LIST_KEYS:
                value = server.raw.get(key)
                if isinstance(value, list):
                    for item in value:
                        if isinstance(item, str) and item not in _WILDCARDS:
                            named.append((server.name, item))
                        elif isinstance(item, dict) and isinstance(item.get("name"), str):
                            named.append((server.name, item["name"]))

        seen_pairs = set()
        for i, (owner_a, name_a) in enumerate(named):
            for owner_b, name_b in named[i + 1:]:
                if owner_a == owner_b:
                    continue
                pair = tuple(sorted((name_a, name_b)))
                if pair in seen_pairs:
                    continue
                d = levenshtein(name_a, name_b)
                if d == 0:
                    seen_pairs.add(pair)
                    self.emit(
                        "mcp-shadow-exact",
                        self.index.find(name_b),
                        f"{name_b!r} is declared by both {owner_a!r} and {owner_b!r}; "
                        "one call can be routed to the other's implementation",
                    )
                elif 1 <= d <= _NEAR_MAX and min(len(name_a), len(name_b)) >= _NEAR_MIN_LEN:
                    seen_pairs.add(pair)
                    self.emit(
                        "mcp-shadow-near",
                        self.index.find(name_b),
                        f"{name_b!r} ({owner_b!r}) is edit distance {d} from "
                        f"{name_a!r} ({owner_a!r})",
                        modulations=[
                            Modulation(
                                "near_collision_discount", "multiply",
                                catalog.mechanism_value("near_collision_discount"),
                            )
                        ],
                    )

    def check_baseline(self, servers: list[ServerSpec]) -> None:
        baseline_path = getattr(self.config, "baseline", None)
        if not baseline_path:
            return
        try:
            with open(baseline_path, encoding="utf-8") as handle:
                baseline = json.load(handle)
        except (OSError, ValueError):
            self.emit(
                "mcp-baseline-drift", 1,
                f"baseline {baseline_path!r} could not be read for comparison",
            )
            return
        entries = baseline.get("servers", baseline)
        current = {s.name: canonical_digest(s) for s in servers}
        for name, digest in current.items():
            key = f"{self.path}::{name}"
            expected = entries.get(key, entries.get(name))
            if expected is None:
                self.emit(
                    "mcp-baseline-drift",
                    self.index.server_line(name),
                    f"server {name!r} is not in the approved baseline",
                )
            elif expected != digest:
                self.emit(
                    "mcp-baseline-drift",
                    self.index.server_line(name),
                    f"server {name!r} changed since the baseline was recorded",
                    notes=[f"expected {expected[:12]}..., found {digest[:12]}..."],
                )
        for key in entries:
            name = key.split("::", 1)[1] if "::" in key else key
            file_scoped = "::" in key and not key.startswith(f"{self.path}::")
            if file_scoped or name in current:
                continue
            self.emit(
                "mcp-baseline-removed",
                1,
                f"baseline server {name!r} is gone from this configuration",
            )


def scan(path: str, text: str, config: Any = None) -> list[Finding]:
    """Scan one MCP configuration file (no-op for unrecognized names)."""
    return _McpScan(path, text, config).run()

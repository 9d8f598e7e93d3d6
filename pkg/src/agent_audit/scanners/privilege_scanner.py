"""Privilege and supply-chain checks for code and deployment artifacts.

Python sources get AST detectors (unsandboxed spawns, credential-store
access, privilege escalation calls). Scripts, sudoers files, service
units, and container definitions get line-pattern checks that never fire
inside comment lines.
"""

from __future__ import annotations

import ast
import fnmatch
import re
from typing import Any, Iterable, Optional

from .. import catalog
from ..distance import levenshtein
from ..model import Finding, Modulation, SourceSpan
from . import taint

_DATA = catalog.load_data("privilege.json")
_PY = catalog.load_data("python.json")

_LINE_PATTERNS = [
    {
        "pattern_id": spec["pattern_id"],
        "regex": re.compile(spec["regex"]),
        "artifact_kinds": set(spec["artifact_kinds"]),
        "message": spec["message"],
    }
    for spec in _DATA["line_patterns"]
]

_SPAWN_COMMANDS = set(_DATA["spawn_commands"])
_PIP_INSTALL_RE = re.compile(_DATA["pip_install_regex"])
_POPULAR_PACKAGES = _DATA["popular_packages"]
_SAFE_COMMANDS = set(_DATA["safe_commands"])
_SANDBOX_WRAPPERS = set(_DATA["sandbox_wrappers"])
_BUILD_GLOBS = _DATA["build_context_globs"]
_COMMENT_PREFIXES = tuple(_DATA["comment_prefixes"])

_CRED_CALLABLES = set(_PY["credential_store_callables"])
_CRED_PATH_RE = re.compile(_PY["credential_store_path_regex"])

_SUBPROCESS_FUNCTIONS = set(_PY["sinks"]["PROCESS_EXEC"]["subprocess_functions"])
_OS_SPAWNS = set(_PY["sinks"]["PROCESS_EXEC"]["names"])
_SETUID_CALLS = {"os.setuid", "os.seteuid", "os.setgid", "os.setegid", "os.setreuid"}

_SCRIPT_SUFFIXES = (".sh", ".bash", ".zsh", ".ksh")
_CONFIG_SUFFIXES = (".yml", ".yaml", ".toml", ".json", ".cfg", ".ini", ".conf", ".env")

SCANNER_NAME = "privilege"


def artifact_kind(path: str, text: str) -> str:
    """sudoers | service | container | script | config | python | other."""
    for kind, globs in _DATA["artifact_recognizers"].items():
        if any(fnmatch.fnmatch(path, g) for g in globs):
            return kind
    if path.endswith(".py"):
        return "python"
    if path.endswith(_SCRIPT_SUFFIXES):
        return "script"
    first_line = text.split("\n", 1)[0] if text else ""
    if first_line.startswith("#!"):
        return "script"
    if path.endswith(_CONFIG_SUFFIXES):
        return "config"
    return "other"


def is_build_path(path: str) -> bool:
    return any(fnmatch.fnmatch(path, g) for g in _BUILD_GLOBS)


def _emit(
    findings: list[Finding],
    path: str,
    pattern_id: str,
    line: int,
    message: str,
    snippet: str,
    modulations: Optional[list[Modulation]] = None,
    notes: Optional[Iterable[str]] = None,
    col: Optional[int] = None,
) -> None:
    rule = catalog.rule_for_pattern(pattern_id)
    findings.append(
        Finding(
            rule_id=rule.rule_id,
            message=message,
            span=SourceSpan(path, line, line, col_start=col),
            scanner=SCANNER_NAME,
            pattern_id=pattern_id,
            base_confidence=rule.base_confidence,
            modulations=list(modulations or []),
            snippet=snippet.strip()[:160],
            notes=list(notes or []),
        )
    )


# ---------------------------------------------------------------------------
# Line-pattern half (scripts and deployment artifacts)
# ---------------------------------------------------------------------------

def _scan_lines(path: str, text: str, kind: str) -> list[Finding]:
    findings: list[Finding] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.lstrip()
        if stripped.startswith(_COMMENT_PREFIXES):
            continue
        for spec in _LINE_PATTERNS:
            if kind not in spec["artifact_kinds"]:
                continue
            match = spec["regex"].search(line)
            if match is None:
                continue
            message = spec["message"].replace("{snippet}", match.group(0).strip())
            _emit(
                findings, path, spec["pattern_id"], line_no, message, line,
                col=match.start(),
            )
        if kind in ("script", "container"):
            findings.extend(_check_pip_install(path, line_no, line))
    return findings


def _check_pip_install(path: str, line_no: int, line: str) -> list[Finding]:
    findings: list[Finding] = []
    match = _PIP_INSTALL_RE.search(line)
    if match is None:
        return findings
    tokens = match.group(1).split()
    requirements = []
    skip_next = False
    for token in tokens:
        if skip_next:
            skip_next = False
            continue
        if token in ("-r", "--requirement", "-c", "--constraint", "--index-url", "--extra-index-url"):
            skip_next = True
            continue
        if token.startswith("-"):
            continue
        requirements.append(token)

    unpinned = [r for r in requirements if "==" not in r and not r.startswith("git+")]
    if unpinned:
        _emit(
            findings, path, "unpinned-dependency-install", line_no,
            f"dependencies installed without version pins: {', '.join(unpinned)}",
            line,
        )
    for req in requirements:
        name = re.split(r"[=<>!\[@]", req, 1)[0].lower()
        if not name or name in _POPULAR_PACKAGES:
            continue
        for popular in _POPULAR_PACKAGES:
            d = levenshtein(name, popular)
            if 1 <= d <= 2 and len(name) >= 5:
                _emit(
                    findings, path, "typosquat-dependency", line_no,
                    f"package {name!r} is edit distance {d} from {popular!r}",
                    line,
                    notes=[f"possible typosquat of {popular}"],
                )
                break
    return findings


# ---------------------------------------------------------------------------
# AST half (Python sources)
# ---------------------------------------------------------------------------

def _first_command_token(call: ast.Call) -> Optional[str]:
    if not call.args:
        return None
    arg0 = call.args[0]
    if isinstance(arg0, ast.Constant) and isinstance(arg0.value, str):
        parts = arg0.value.split()
        return parts[0] if parts else None
    if isinstance(arg0, (ast.List, ast.Tuple)) and arg0.elts:
        first = arg0.elts[0]
        if isinstance(first, ast.Constant) and isinstance(first.value, str):
            return first.value
    return None


def _scan_python(path: str, text: str) -> list[Finding]:
    findings: list[Finding] = []
    tree = ast.parse(text)
    imports = taint.module_imports(tree)
    build_path = is_build_path(path)

    for node in ast.walk(tree):
        if isinstance(node, ast.Call):
            dotted = taint.dotted_path(node.func, imports)
            is_spawn = dotted in _OS_SPAWNS or (
                dotted
                and dotted.startswith("subprocess.")
                and dotted.split(".", 1)[1] in _SUBPROCESS_FUNCTIONS
            )
            if is_spawn:
                token = _first_command_token(node)
                if token in _SANDBOX_WRAPPERS:
                    continue
                modulations = []
                notes = []
                if token is not None and token in _SAFE_COMMANDS:
                    modulations.append(
                        Modulation(
                            "safe_command", "multiply",
                            catalog.mechanism_value("safe_command"),
                        )
                    )
                    notes.append(f"command {token!r} is a known development tool")
                if build_path:
                    modulations.append(
                        Modulation(
                            "build_script_context", "multiply",
                            catalog.mechanism_value("build_script_context"),
                        )
                    )
                    notes.append("file is a build or CI script")
                what = token or "a dynamic command"
                _emit(
                    findings, path, "subprocess-unsandboxed", node.lineno,
                    f"process spawned without sandboxing ({what})",
                    _line_of(text, node.lineno),
                    modulations=modulations, notes=notes, col=node.col_offset,
                )
            if dotted in _CRED_CALLABLES:
                _emit(
                    findings, path, "credential-store-access", node.lineno,
                    f"system credential store read via {dotted}()",
                    _line_of(text, node.lineno), col=node.col_offset,
                )
            if dotted in _SETUID_CALLS:
                _emit(
                    findings, path, "setuid-daemon", node.lineno,
                    f"process changes its own uid/gid via {dotted}()",
                    _line_of(text, node.lineno), col=node.col_offset,
                )
        if isinstance(node, ast.Constant) and isinstance(node.value, str):
            if _CRED_PATH_RE.search(node.value):
                _emit(
                    findings, path, "credential-store-access", node.lineno,
                    f"credential store path referenced: {node.value[:60]!r}",
                    _line_of(text, node.lineno), col=node.col_offset,
                )
    return findings


def _line_of(text: str, line_no: int) -> str:
    lines = text.splitlines()
    if 1 <= line_no <= len(lines):
        return lines[line_no - 1]
    return ""


def scan(path: str, text: str, config: Any = None) -> list[Finding]:
    """Scan one file; routing depends on what kind of artifact it is."""
    kind = artifact_kind(path, text)
    if kind == "python":
        return _scan_python(path, text)
    if kind == "other":
        return []
    return _scan_lines(path, text, kind)

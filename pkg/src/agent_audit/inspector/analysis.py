"""Turns live tools/list responses into findings.

Works on what servers actually advertise at runtime, which can differ
from anything checked into the repository: descriptions are matched
against the shared poisoning phrase sets, and tool names are compared
across servers to catch exact and near-miss shadowing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from ..catalog import load_data, mechanism_value, rule_for_pattern
from ..distance import levenshtein
from ..model import Finding, Modulation, SourceSpan
from .client import ToolInfo

SCANNER_NAME = "inspector"

_PHRASES = load_data("phrases.json")
_MCP = load_data("mcp.json")
_NEAR_MAX = _MCP["near_collision_max_distance"]
_NEAR_MIN_LEN = _MCP["near_collision_min_length"]


class PoisonKind(str, Enum):
    INSTRUCTION_OVERRIDE = "INSTRUCTION_OVERRIDE"
    EXFIL_URL = "EXFIL_URL"
    CROSS_TOOL_MANIPULATION = "CROSS_TOOL_MANIPULATION"


@dataclass(frozen=True)
class PoisonIndicator:
    kind: PoisonKind
    matched_text: str
    offset: int


_KIND_PHRASES = {
    PoisonKind.INSTRUCTION_OVERRIDE: "instruction_override",
    PoisonKind.EXFIL_URL: "exfil_url",
    PoisonKind.CROSS_TOOL_MANIPULATION: "cross_tool",
}
_KIND_PATTERN_ID = {
    PoisonKind.INSTRUCTION_OVERRIDE: "poison-instruction-override",
    PoisonKind.EXFIL_URL: "poison-exfil-url",
    PoisonKind.CROSS_TOOL_MANIPULATION: "poison-cross-tool",
}
_POISON_RES = {
    kind: [re.compile(p, re.IGNORECASE) for p in _PHRASES[family]]
    for kind, family in _KIND_PHRASES.items()
}


@dataclass(frozen=True)
class NamedTool:
    """A tool name attributed to its owning server, with a line anchor."""

    owner: str
    name: str
    line: int = 1


def analyze_description(description: str) -> list[PoisonIndicator]:
    """At most one indicator per poison kind, earliest match wins."""
    indicators: list[PoisonIndicator] = []
    for kind in PoisonKind:
        best: Optional[re.Match] = None
        for pattern in _POISON_RES[kind]:
            match = pattern.search(description)
            if match and (best is None or match.start() < best.start()):
                best = match
        if best is not None:
            indicators.append(
                PoisonIndicator(kind=kind, matched_text=best.group(0), offset=best.start())
            )
    return indicators


def _emit(
    pattern_id: str,
    origin: str,
    line: int,
    message: str,
    snippet: str = "",
    modulations: Iterable[Modulation] = (),
    notes: Iterable[str] = (),
) -> Finding:
    rule = rule_for_pattern(pattern_id)
    return Finding(
        rule_id=rule.rule_id,
        message=message,
        span=SourceSpan(origin, line, line),
        scanner=SCANNER_NAME,
        pattern_id=pattern_id,
        base_confidence=rule.base_confidence,
        modulations=list(modulations),
        snippet=snippet,
        notes=list(notes),
    )


def poison_findings(tools: list[ToolInfo], server_name: str, origin: str) -> list[Finding]:
    findings: list[Finding] = []
    for index, tool in enumerate(tools, start=1):
        for indicator in analyze_description(tool.description or ""):
            kind = indicator.kind.value.replace("_", " ").lower()
            findings.append(
                _emit(
                    _KIND_PATTERN_ID[indicator.kind],
                    origin,
                    index,
                    f"live description of tool {tool.name!r} on {server_name!r} "
                    f"carries {kind} phrasing",
                    snippet=indicator.matched_text[:160],
                    notes=[
                        f"tool {tool.name!r}, listing position {index}, "
                        f"description offset {indicator.offset}"
                    ],
                )
            )
    return findings


def detect_shadowing(named: list[NamedTool], origin: str) -> list[Finding]:
    """Pairwise cross-owner name comparison; symmetric in input order."""
    findings: list[Finding] = []
    seen: set[tuple[str, str]] = set()
    ordered = sorted(named, key=lambda t: (t.owner, t.name, t.line))
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if a.owner == b.owner:
                continue
            pair = tuple(sorted((a.name, b.name)))
            if pair in seen:
                continue
            d = levenshtein(a.name, b.name)
            if d == 0:
                seen.add(pair)
                findings.append(
                    _emit(
                        "mcp-shadow-exact",
                        origin,
                        max(a.line, b.line),
                        f"tool {a.name!r} is advertised by both {a.owner!r} and "
                        f"{b.owner!r}; one call can be routed to the other's "
                        "implementation",
                    )
                )
            elif 1 <= d <= _NEAR_MAX and min(len(a.name), len(b.name)) >= _NEAR_MIN_LEN:
                seen.add(pair)
                findings.append(
                    _emit(
                        "mcp-shadow-near",
                        origin,
                        max(a.line, b.line),
                        f"tool {a.name!r} ({a.owner!r}) is {d} edit(s) from "
                        f"{b.name!r} ({b.owner!r}); lookalike names invite "
                        "silent substitution",
                        modulations=[
                            Modulation(
                                "near_collision_discount",
                                "multiply",
                                mechanism_value("near_collision_discount"),
                            )
                        ],
                        notes=[f"edit distance {d}"],
                    )
                )
    return findings

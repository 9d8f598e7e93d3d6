"""Core data model: findings, confidence tiers, and modulation trails.

Every scanner produces findings through this module so that tier
assignment and confidence arithmetic behave identically everywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional

# Tier thresholds are inclusive lower bounds, compared exactly (no epsilon).
BLOCK_THRESHOLD = 0.92
WARN_THRESHOLD = 0.60
INFO_THRESHOLD = 0.30


class Tier(str, enum.Enum):
    BLOCK = "BLOCK"
    WARN = "WARN"
    INFO = "INFO"
    SUPPRESSED = "SUPPRESSED"


class Severity(str, enum.Enum):
    """Rule severity, independent of per-finding confidence."""

    CRITICAL = "critical"
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


def tier_of(confidence: float) -> Tier:
    """Map a confidence value in [0, 1] to its reporting tier."""
    if not 0.0 <= confidence <= 1.0:
        raise ValueError(f"confidence out of range [0, 1]: {confidence!r}")
    if confidence >= BLOCK_THRESHOLD:
        return Tier.BLOCK
    if confidence >= WARN_THRESHOLD:
        return Tier.WARN
    if confidence >= INFO_THRESHOLD:
        return Tier.INFO
    return Tier.SUPPRESSED


class InvalidModulationError(ValueError):
    """Raised for modulation factors that cannot be applied."""


@dataclass(frozen=True)
class Modulation:
    """One confidence adjustment: a named mechanism and its factor.

    kind is "multiply" (factor must be > 0) or "add" (delta, any sign).
    A mechanism contributes at most one entry to a finding's trail.
    """

    mechanism: str
    kind: str
    value: float

    def __post_init__(self) -> None:
        if self.kind not in ("multiply", "add"):
            raise InvalidModulationError(f"unknown modulation kind: {self.kind!r}")
        if self.kind == "multiply" and self.value <= 0:
            raise InvalidModulationError(
                f"multiplicative factor must be positive, got {self.value!r}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {"mechanism": self.mechanism, "kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Modulation":
        return cls(mechanism=data["mechanism"], kind=data["kind"], value=data["value"])


def apply_modulation(confidence: float, modulation: Modulation) -> float:
    """Apply one modulation and clamp the result into [0, 1]."""
    if modulation.kind == "multiply":
        result = confidence * modulation.value
    else:
        result = confidence + modulation.value
    return min(1.0, max(0.0, result))


def replay_modulations(base: float, modulations: list[Modulation]) -> float:
    """Recompute a final confidence from a base value and a trail."""
    confidence = base
    for modulation in modulations:
        confidence = apply_modulation(confidence, modulation)
    return confidence


@dataclass(frozen=True)
class SourceSpan:
    """Location of a finding inside one file.

    file_path is relative to the scan root, with forward slashes.
    Lines are 1-based and inclusive; columns are 0-based when known.
    """

    file_path: str
    line_start: int
    line_end: int
    col_start: Optional[int] = None
    col_end: Optional[int] = None

    def __post_init__(self) -> None:
        if self.line_start < 1 or self.line_end < self.line_start:
            raise ValueError(
                f"invalid span lines: {self.line_start}..{self.line_end}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "file_path": self.file_path,
            "line_start": self.line_start,
            "line_end": self.line_end,
            "col_start": self.col_start,
            "col_end": self.col_end,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SourceSpan":
        return cls(
            file_path=data["file_path"],
            line_start=data["line_start"],
            line_end=data["line_end"],
            col_start=data.get("col_start"),
            col_end=data.get("col_end"),
        )


@dataclass(frozen=True)
class Rule:
    """A catalog entry describing one class of issue."""

    rule_id: str
    asi_category: str
    title: str
    description: str
    severity: Severity
    base_confidence: float
    remediation: str
    provenance: str = "core"

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "asi_category": self.asi_category,
            "title": self.title,
            "description": self.description,
            "severity": self.severity.value,
            "base_confidence": self.base_confidence,
            "remediation": self.remediation,
            "provenance": self.provenance,
        }


@dataclass
class Finding:
    """One scanner result after rule mapping.

    confidence must always equal base_confidence with the modulation
    trail replayed on top; mutate only through apply() so the invariant
    cannot drift.
    """

    rule_id: str
    message: str
    span: SourceSpan
    scanner: str
    pattern_id: str
    base_confidence: float
    # Why the base differs from the catalog value, e.g. "tool-boundary".
    base_source: str = "rule-default"
    confidence: float = -1.0
    modulations: list[Modulation] = field(default_factory=list)
    snippet: str = ""
    notes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.confidence < 0:
            self.confidence = replay_modulations(self.base_confidence, self.modulations)

    @property
    def tier(self) -> Tier:
        return tier_of(self.confidence)

    def apply(self, modulation: Modulation) -> None:
        """Append one modulation, keeping confidence consistent."""
        if any(m.mechanism == modulation.mechanism for m in self.modulations):
            raise InvalidModulationError(
                f"mechanism applied twice: {modulation.mechanism!r}"
            )
        self.modulations.append(modulation)
        self.confidence = apply_modulation(self.confidence, modulation)

    def replayed_confidence(self) -> float:
        return replay_modulations(self.base_confidence, self.modulations)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "message": self.message,
            "span": self.span.to_dict(),
            "scanner": self.scanner,
            "pattern_id": self.pattern_id,
            "base_confidence": self.base_confidence,
            "base_source": self.base_source,
            "confidence": self.confidence,
            "tier": self.tier.value,
            "modulations": [m.to_dict() for m in self.modulations],
            "snippet": self.snippet,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Finding":
        return cls(
            rule_id=data["rule_id"],
            message=data["message"],
            span=SourceSpan.from_dict(data["span"]),
            scanner=data["scanner"],
            pattern_id=data["pattern_id"],
            base_confidence=data["base_confidence"],
            base_source=data.get("base_source", "rule-default"),
            confidence=data["confidence"],
            modulations=[Modulation.from_dict(m) for m in data.get("modulations", [])],
            snippet=data.get("snippet", ""),
            notes=list(data.get("notes", [])),
        )

    def sort_key(self) -> tuple:
        return (self.span.file_path, self.span.line_start, self.rule_id)


@dataclass
class Diagnostic:
    """A non-finding problem encountered during a scan (kept out of results)."""

    file_path: str
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"file_path": self.file_path, "message": self.message}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Diagnostic":
        return cls(file_path=data["file_path"], message=data["message"])


@dataclass
class ScanReport:
    """Full result of scanning one root."""

    root: str
    findings: list[Finding] = field(default_factory=list)
    files_scanned: int = 0
    files_skipped: int = 0
    duration_seconds: float = 0.0
    diagnostics: list[Diagnostic] = field(default_factory=list)
    tool_version: str = "0.1.0"

    def by_tier(self, tier: Tier) -> list[Finding]:
        return [f for f in self.findings if f.tier is tier]

    def actionable(self) -> list[Finding]:
        """Findings at any tier above SUPPRESSED."""
        return [f for f in self.findings if f.tier is not Tier.SUPPRESSED]

    def tier_counts(self) -> dict[str, int]:
        counts = {tier.value: 0 for tier in Tier}
        for finding in self.findings:
            counts[finding.tier.value] += 1
        return counts

    def to_dict(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "findings": [f.to_dict() for f in self.findings],
            "files_scanned": self.files_scanned,
            "files_skipped": self.files_skipped,
            "duration_seconds": self.duration_seconds,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "tool_version": self.tool_version,
            "tier_counts": self.tier_counts(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScanReport":
        return cls(
            root=data["root"],
            findings=[Finding.from_dict(f) for f in data["findings"]],
            files_scanned=data["files_scanned"],
            files_skipped=data["files_skipped"],
            duration_seconds=data["duration_seconds"],
            diagnostics=[Diagnostic.from_dict(d) for d in data.get("diagnostics", [])],
            tool_version=data.get("tool_version", "0.1.0"),
        )

"""Finding lifecycle: suppression, merge groups, dedup, canonical order.

Dedup key is (file path, start line, dedup class) where the dedup class
is the finding's merge-group id when its rule belongs to one and the
rule id otherwise. Within a merged set the survivor is the member rule
listed first in the group definition; its confidence is lifted to the
set's maximum through the modulation trail so replay stays exact.
"""

from __future__ import annotations

import fnmatch
from typing import Any, Iterable, Optional

from . import catalog
from .model import Finding, Modulation

# Paths under these globs are framework internals or vendored code, not
# first-party agent code.
FRAMEWORK_PATH_GLOBS = [
    "*/site-packages/*",
    "*/dist-packages/*",
    "*/node_modules/*",
    "*/vendor/*",
    "*/vendored/*",
    "*/third_party/*",
    "*/.venv/*",
]


def _dedup_key(finding: Finding) -> tuple[str, int, str]:
    return (
        finding.span.file_path,
        finding.span.line_start,
        catalog.dedup_class(finding.rule_id),
    )


def _survivor_order(finding: Finding) -> tuple:
    """Lower sorts first: group priority, then confidence (desc), then
    stable tie-breakers."""
    return (
        catalog.survivor_priority(finding.rule_id),
        -finding.confidence,
        finding.rule_id,
        finding.pattern_id,
        finding.span.line_end,
    )


def _merge_set(findings: list[Finding]) -> Finding:
    ordered = sorted(findings, key=_survivor_order)
    survivor = ordered[0]
    peak = max(f.confidence for f in ordered)
    if peak > survivor.confidence:
        # Never reached with the shipped groups (survivor bases dominate),
        # but keeps the replay invariant if a future group breaks that.
        survivor.apply(
            Modulation("merge-floor", "add", peak - survivor.confidence)
        )
    for other in ordered[1:]:
        if other is survivor:
            continue
        note = f"merged {other.rule_id} ({other.pattern_id}) from {other.scanner} scanner"
        if other.rule_id == survivor.rule_id:
            note = f"merged duplicate {other.pattern_id} from {other.scanner} scanner"
        if note not in survivor.notes:
            survivor.notes.append(note)
        for extra in other.notes:
            if extra not in survivor.notes:
                survivor.notes.append(extra)
    return survivor


def deduplicate(findings: Iterable[Finding]) -> list[Finding]:
    """Collapse same-line duplicates and merge-group members.

    Idempotent and insensitive to input order: the output is always in
    canonical (file, line, rule) order with one finding per dedup key.
    """
    groups: dict[tuple[str, int, str], list[Finding]] = {}
    for finding in findings:
        groups.setdefault(_dedup_key(finding), []).append(finding)
    merged = [_merge_set(group) for group in groups.values()]
    merged.sort(key=lambda f: f.sort_key())
    return merged


def apply_path_context(findings: Iterable[Finding]) -> list[Finding]:
    """Downweight findings in vendored or framework-internal paths."""
    out = []
    factor = catalog.mechanism_value("framework_path_suppression")
    for finding in findings:
        path = finding.span.file_path
        if any(fnmatch.fnmatch(path, glob) for glob in FRAMEWORK_PATH_GLOBS):
            if not any(
                m.mechanism == "framework_path_suppression"
                for m in finding.modulations
            ):
                finding.apply(
                    Modulation("framework_path_suppression", "multiply", factor)
                )
        out.append(finding)
    return out


def finalize(
    findings: Iterable[Finding], config: Optional[Any] = None
) -> list[Finding]:
    """Full post-processing: config suppressions, path context, merge,
    dedup, canonical sort."""
    suppressed_rules = set(getattr(config, "suppress", None) or [])
    kept = [f for f in findings if f.rule_id not in suppressed_rules]
    kept = apply_path_context(kept)
    return deduplicate(kept)

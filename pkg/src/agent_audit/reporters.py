"""Report rendering: terminal, JSON, Markdown, SARIF 2.1.0.

The JSON form is the lossless interchange format: rendering and parsing
a report preserves every finding field, and rendering is deterministic
(stable key order, no timestamps beyond what the report carries).
Machine formats keep SUPPRESSED findings; human formats count them but
do not list them.
"""

from __future__ import annotations

import io
import json
from typing import Optional

from rich.console import Console
from rich.table import Table

from . import __version__
from .model import Finding, ScanReport, Tier

NO_FINDINGS_LINE = "No actionable findings."

_TIER_LEVELS = {
    Tier.BLOCK: "error",
    Tier.WARN: "warning",
    Tier.INFO: "note",
    Tier.SUPPRESSED: "none",
}

_TIER_STYLES = {
    Tier.BLOCK: "bold red",
    Tier.WARN: "yellow",
    Tier.INFO: "cyan",
    Tier.SUPPRESSED: "dim",
}


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def render_json(report: ScanReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> ScanReport:
    return ScanReport.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# SARIF 2.1.0
# ---------------------------------------------------------------------------

def sarif_dict(report: ScanReport) -> dict:
    from . import catalog

    rule_ids = sorted({f.rule_id for f in report.findings})
    rule_index = {rule_id: i for i, rule_id in enumerate(rule_ids)}
    rules = []
    for rule_id in rule_ids:
        rule = catalog.rule_catalog()[rule_id]
        rules.append(
            {
                "id": rule.rule_id,
                "name": rule.title.replace(" ", ""),
                "shortDescription": {"text": rule.title},
                "fullDescription": {"text": rule.description},
                "help": {"text": rule.remediation},
                "properties": {
                    "category": rule.asi_category,
                    "severity": rule.severity.value,
                },
            }
        )

    results = []
    for finding in report.findings:
        region: dict = {
            "startLine": finding.span.line_start,
            "endLine": finding.span.line_end,
        }
        if finding.span.col_start is not None:
            region["startColumn"] = finding.span.col_start + 1
        result = {
            "ruleId": finding.rule_id,
            "ruleIndex": rule_index[finding.rule_id],
            "level": _TIER_LEVELS[finding.tier],
            "message": {"text": finding.message},
            "locations": [
                {
                    "physicalLocation": {
                        "artifactLocation": {
                            "uri": finding.span.file_path.replace("\\", "/"),
                            "uriBaseId": "SRCROOT",
                        },
                        "region": region,
                    }
                }
            ],
            "properties": {
                "confidence": finding.confidence,
                "tier": finding.tier.value,
                "baseConfidence": finding.base_confidence,
                "baseSource": finding.base_source,
                "scanner": finding.scanner,
                "patternId": finding.pattern_id,
                "modulations": [m.to_dict() for m in finding.modulations],
            },
        }
        if finding.tier is Tier.SUPPRESSED:
            result["suppressions"] = [{"kind": "external"}]
        results.append(result)

    return {
        "$schema": "https://json.schemastore.org/sarif-2.1.0.json",
        "version": "2.1.0",
        "runs": [
            {
                "tool": {
                    "driver": {
                        "name": "agent-audit",
                        "version": report.tool_version or __version__,
                        "rules": rules,
                    }
                },
                "originalUriBaseIds": {"SRCROOT": {"uri": "file:///"}},
                "results": results,
            }
        ],
    }


def render_sarif(report: ScanReport) -> str:
    return json.dumps(sarif_dict(report), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Markdown
# ---------------------------------------------------------------------------

def render_markdown(report: ScanReport) -> str:
    lines = ["# agent-audit report", ""]
    lines.append(f"Scanned `{report.root}`: {report.files_scanned} files, "
                 f"{report.files_skipped} skipped, "
                 f"{report.duration_seconds:.2f}s.")
    lines.append("")
    counts = report.tier_counts()
    lines.append("| tier | findings |")
    lines.append("| --- | --- |")
    for tier in (Tier.BLOCK, Tier.WARN, Tier.INFO, Tier.SUPPRESSED):
        lines.append(f"| {tier.value} | {counts[tier.value]} |")
    lines.append("")

    actionable = report.actionable()
    if not actionable:
        lines.append(NO_FINDINGS_LINE)
        lines.append("")
        return "\n".join(lines)

    for tier in (Tier.BLOCK, Tier.WARN, Tier.INFO):
        members = report.by_tier(tier)
        if not members:
            continue
        lines.append(f"## {tier.value}")
        lines.append("")
        for finding in members:
            anchor = f"{finding.span.file_path}:{finding.span.line_start}"
            lines.append(f"### {finding.rule_id} at `{anchor}`")
            lines.append("")
            lines.append(finding.message)
            lines.append("")
            lines.append(f"- confidence: {finding.confidence:.2f}")
            lines.append(f"- scanner: {finding.scanner} ({finding.pattern_id})")
            if finding.modulations:
                trail = ", ".join(
                    f"{m.mechanism} {'x' if m.kind == 'multiply' else '+'}{m.value}"
                    for m in finding.modulations
                )
                lines.append(f"- modulations: {trail}")
            if finding.snippet:
                lines.append(f"- `{finding.snippet}`")
            lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Terminal
# ---------------------------------------------------------------------------

def render_terminal(
    report: ScanReport,
    console: Optional[Console] = None,
    verbose: bool = False,
) -> Console:
    console = console or Console()
    actionable = report.actionable()
    suppressed = len(report.findings) - len(actionable)

    if not actionable:
        console.print(NO_FINDINGS_LINE)
    else:
        table = Table(title="agent-audit findings", show_lines=False)
        table.add_column("tier")
        table.add_column("rule")
        table.add_column("location")
        table.add_column("confidence", justify="right")
        table.add_column("message", overflow="fold")
        for finding in actionable:
            table.add_row(
                f"[{_TIER_STYLES[finding.tier]}]{finding.tier.value}[/]",
                finding.rule_id,
                f"{finding.span.file_path}:{finding.span.line_start}",
                f"{finding.confidence:.2f}",
                finding.message,
            )
        console.print(table)
        if verbose:
            for finding in actionable:
                if finding.modulations or finding.notes:
                    console.print(
                        f"[dim]{finding.rule_id} {finding.span.file_path}:"
                        f"{finding.span.line_start}[/dim]"
                    )
                    for modulation in finding.modulations:
                        sign = "x" if modulation.kind == "multiply" else "+"
                        console.print(f"  modulation: {modulation.mechanism} {sign}{modulation.value}")
                    for note in finding.notes:
                        console.print(f"  note: {note}")

    counts = report.tier_counts()
    summary = (
        f"{counts['BLOCK']} block / {counts['WARN']} warn / {counts['INFO']} info"
        + (f" ({suppressed} suppressed)" if suppressed else "")
    )
    console.print(
        f"{report.files_scanned} files scanned, {report.files_skipped} skipped "
        f"in {report.duration_seconds:.2f}s: {summary}"
    )
    return console


def render(report: ScanReport, fmt: str, verbose: bool = False) -> str:
    """Render to a string in any machine format (or markdown/terminal)."""
    if fmt == "json":
        return render_json(report)
    if fmt == "sarif":
        return render_sarif(report)
    if fmt == "markdown":
        return render_markdown(report)
    if fmt == "terminal":
        # Recording console with a null sink; caller decides where the
        # text goes, so nothing is echoed during rendering.
        console = Console(record=True, width=118, file=io.StringIO())
        render_terminal(report, console=console, verbose=verbose)
        return console.export_text()
    raise ValueError(f"unknown format: {fmt!r}")


def findings_reach(findings: list[Finding], gate: str) -> bool:
    """True when any finding sits at or above the gate tier."""
    order = {"info": (Tier.BLOCK, Tier.WARN, Tier.INFO),
             "warn": (Tier.BLOCK, Tier.WARN),
             "block": (Tier.BLOCK,)}
    if gate == "high":
        gate = "block"
    if gate not in order:
        raise ValueError(f"unknown gate: {gate!r}")
    return any(f.tier in order[gate] for f in findings)

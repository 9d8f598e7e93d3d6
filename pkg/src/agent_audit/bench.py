"""Benchmark harness: score scan output against an annotated corpus.

A corpus is a directory of sample projects. Each sample carries an
oracle.json manifest listing the planted vulnerabilities; the harness
scans every sample with its own local config, greedily pairs findings
with oracle entries by file suffix and line, and reports precision,
recall, and F1 plus per-set recall.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .catalog import rule_catalog
from .config import load_config
from .model import Finding, Tier
from .pipeline import scan_root

MANIFEST_NAME = "oracle.json"

# Rules with an ASI category are agent-specific; CROSS-CUTTING rules
# (credentials, TLS, and similar) are also within reach of generic SAST.
_GENERIC_CATEGORY = "CROSS-CUTTING"


class CorpusError(Exception):
    """Malformed corpus: duplicate oracle ids or unreadable manifest."""


@dataclass(frozen=True)
class OracleEntry:
    sample_id: str
    vuln_id: str
    file_suffix: str
    line: int
    set_name: str
    expected_rule_class: Optional[str] = None

    def matches_location(self, finding: Finding, tolerance: int) -> bool:
        path = finding.span.file_path.replace("\\", "/")
        suffix = self.file_suffix.replace("\\", "/")
        if not (path == suffix or path.endswith("/" + suffix)):
            return False
        return abs(finding.span.line_start - self.line) <= tolerance

    def matches_rule(self, finding: Finding) -> bool:
        if not self.expected_rule_class:
            return True
        return finding.rule_id == self.expected_rule_class or finding.rule_id.startswith(
            self.expected_rule_class
        )


@dataclass
class EvalResult:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_set_recall: dict[str, float] = field(default_factory=dict)
    exclusive_detections: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) else 0.0


@dataclass
class SampleResult:
    sample_id: str
    tp: int
    fp: int
    fn: int
    matched: list[tuple[OracleEntry, Finding]]
    missed: list[OracleEntry]
    extra: list[Finding]


@dataclass
class BenchReport:
    result: EvalResult
    samples: list[SampleResult]
    diagnostics: list[str]


def load_manifest(path: Path, sample_id: str) -> list[OracleEntry]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CorpusError(f"{path}: unreadable manifest: {exc}") from exc
    records = raw.get("entries") if isinstance(raw, dict) else raw
    if not isinstance(records, list):
        raise CorpusError(f"{path}: manifest must hold a list of entries")
    entries: list[OracleEntry] = []
    seen: set[tuple[str, str]] = set()
    for record in records:
        entry = OracleEntry(
            sample_id=sample_id,
            vuln_id=str(record["vuln_id"]),
            file_suffix=str(record["file"]),
            line=int(record["line"]),
            set_name=str(record.get("set", "A")),
            expected_rule_class=record.get("rule"),
        )
        if entry.line < 1:
            raise CorpusError(f"{path}: {entry.vuln_id}: line must be >= 1")
        key = (entry.sample_id, entry.vuln_id)
        if key in seen:
            raise CorpusError(f"{path}: duplicate vuln id {entry.vuln_id!r}")
        seen.add(key)
        entries.append(entry)
    return entries


def _is_agent_specific(finding: Finding) -> bool:
    return rule_catalog()[finding.rule_id].asi_category != _GENERIC_CATEGORY


def match_oracle(
    findings: list[Finding],
    oracle: list[OracleEntry],
    line_tolerance: int = 0,
    strict_rules: bool = False,
) -> tuple[list[tuple[OracleEntry, Finding]], list[OracleEntry], list[Finding]]:
    """Greedy pairing, strongest findings first; each side used at most once.

    Returns (matched pairs, unmatched entries, unmatched findings).
    """
    ordered = sorted(findings, key=lambda f: (-f.confidence,) + f.sort_key())
    open_entries = list(oracle)
    matched: list[tuple[OracleEntry, Finding]] = []
    extra: list[Finding] = []
    for finding in ordered:
        candidates = [
            (abs(finding.span.line_start - e.line), i, e)
            for i, e in enumerate(open_entries)
            if e.matches_location(finding, line_tolerance)
            and (not strict_rules or e.matches_rule(finding))
        ]
        if not candidates:
            extra.append(finding)
            continue
        candidates.sort(key=lambda c: (c[0], c[1]))
        _, index, entry = candidates[0]
        open_entries.pop(index)
        matched.append((entry, finding))
    return matched, open_entries, extra


def evaluate(
    matched: list[tuple[OracleEntry, Finding]],
    missed: list[OracleEntry],
    extra: list[Finding],
) -> EvalResult:
    result = EvalResult(tp=len(matched), fp=len(extra), fn=len(missed))
    totals: dict[str, int] = {}
    hits: dict[str, int] = {}
    for entry, _ in matched:
        totals[entry.set_name] = totals.get(entry.set_name, 0) + 1
        hits[entry.set_name] = hits.get(entry.set_name, 0) + 1
    for entry in missed:
        totals[entry.set_name] = totals.get(entry.set_name, 0) + 1
    result.per_set_recall = {
        name: (hits.get(name, 0) / total if total else 0.0)
        for name, total in sorted(totals.items())
    }
    result.exclusive_detections = sum(
        1 for _, finding in matched if _is_agent_specific(finding)
    )
    return result


def run_benchmark(
    corpus_dir: Path,
    line_tolerance: int = 0,
    strict_rules: bool = False,
) -> BenchReport:
    corpus_dir = Path(corpus_dir)
    samples: list[SampleResult] = []
    diagnostics: list[str] = []
    all_matched: list[tuple[OracleEntry, Finding]] = []
    all_missed: list[OracleEntry] = []
    all_extra: list[Finding] = []

    for sample_dir in sorted(p for p in corpus_dir.iterdir() if p.is_dir()):
        manifest = sample_dir / MANIFEST_NAME
        if not manifest.is_file():
            diagnostics.append(f"{sample_dir.name}: no {MANIFEST_NAME}, skipped")
            continue
        oracle = load_manifest(manifest, sample_dir.name)
        config = load_config(sample_dir, environ={})
        report = scan_root(sample_dir, config)
        actionable = [f for f in report.findings if f.tier is not Tier.SUPPRESSED]
        matched, missed, extra = match_oracle(
            actionable, oracle, line_tolerance=line_tolerance, strict_rules=strict_rules
        )
        samples.append(
            SampleResult(
                sample_id=sample_dir.name,
                tp=len(matched),
                fp=len(extra),
                fn=len(missed),
                matched=matched,
                missed=missed,
                extra=extra,
            )
        )
        all_matched.extend(matched)
        all_missed.extend(missed)
        all_extra.extend(extra)

    return BenchReport(
        result=evaluate(all_matched, all_missed, all_extra),
        samples=samples,
        diagnostics=diagnostics,
    )


def bench_to_dict(report: BenchReport) -> dict:
    result = report.result
    return {
        "tp": result.tp,
        "fp": result.fp,
        "fn": result.fn,
        "precision": result.precision,
        "recall": result.recall,
        "f1": result.f1,
        "per_set_recall": result.per_set_recall,
        "exclusive_detections": result.exclusive_detections,
        "samples": [
            {
                "sample": s.sample_id,
                "tp": s.tp,
                "fp": s.fp,
                "fn": s.fn,
                "missed": [e.vuln_id for e in s.missed],
                "extra": [
                    {"rule": f.rule_id, "file": f.span.file_path, "line": f.span.line_start}
                    for f in s.extra
                ],
            }
            for s in report.samples
        ],
        "diagnostics": report.diagnostics,
    }


def render_bench_json(report: BenchReport) -> str:
    return json.dumps(bench_to_dict(report), indent=2, sort_keys=True) + "\n"


def render_bench_markdown(report: BenchReport) -> str:
    result = report.result
    lines = [
        "# Benchmark results",
        "",
        f"- Precision: {result.precision * 100:.2f}%",
        f"- Recall: {result.recall * 100:.2f}%",
        f"- F1: {result.f1:.3f}",
        f"- Exclusive detections: {result.exclusive_detections}",
        "",
        "| Set | Recall |",
        "| --- | --- |",
    ]
    for name, recall in result.per_set_recall.items():
        lines.append(f"| {name} | {recall * 100:.2f}% |")
    lines += ["", "| Sample | TP | FP | FN |", "| --- | --- | --- | --- |"]
    for sample in report.samples:
        lines.append(f"| {sample.sample_id} | {sample.tp} | {sample.fp} | {sample.fn} |")
    for sample in report.samples:
        for entry in sample.missed:
            lines.append(f"- missed: {sample.sample_id}/{entry.vuln_id} ({entry.file_suffix}:{entry.line})")
        for finding in sample.extra:
            lines.append(
                f"- extra: {sample.sample_id} {finding.rule_id} "
                f"({finding.span.file_path}:{finding.span.line_start})"
            )
    for note in report.diagnostics:
        lines.append(f"- note: {note}")
    return "\n".join(lines) + "\n"

"""Output formats: JSON round-trip, SARIF schema validity, markdown, gating."""

import json

import jsonschema
import pytest

from agent_audit.catalog import load_data
from agent_audit.model import Diagnostic, Finding, Modulation, ScanReport, SourceSpan
from agent_audit.reporters import (
    NO_FINDINGS_LINE,
    findings_reach,
    render,
    render_json,
    render_markdown,
    render_sarif,
    report_from_json,
    sarif_dict,
)

SARIF_SCHEMA = load_data("sarif-2.1.0-schema.json")


def finding(rule_id="AGENT-034", line=7, base=0.95, modulations=(), col=4,
            pattern="tool-input-dangerous-flow", source="rule-default"):
    return Finding(
        rule_id=rule_id,
        message=f"{rule_id} fires here",
        span=SourceSpan("src/agent.py", line, line, col_start=col),
        scanner="python",
        pattern_id=pattern,
        base_confidence=base,
        base_source=source,
        modulations=list(modulations),
        snippet="eval(x)",
        notes=["note one"],
    )


def report(findings=(), diagnostics=()):
    return ScanReport(
        root="demo",
        findings=list(findings),
        files_scanned=3,
        files_skipped=1,
        duration_seconds=0.125,
        diagnostics=list(diagnostics),
        tool_version="0.1.0",
    )


SAMPLE = report(
    findings=[
        finding(),
        finding("AGENT-001", line=2, base=0.85, pattern="secret-api-key-prefix"),
        finding(
            "AGENT-005", line=30, base=0.90,
            modulations=[Modulation("sanitization", "multiply", 0.20)],
            pattern="taint-eval", source="tool-boundary",
        ),
    ],
    diagnostics=[Diagnostic("broken.py", "python: file skipped, not parseable (x)")],
)


class TestJson:
    def test_round_trip_is_lossless(self):
        text = render_json(SAMPLE)
        restored = report_from_json(text)
        assert restored.to_dict() == SAMPLE.to_dict()
        assert render_json(restored) == text

    def test_deterministic(self):
        assert render_json(SAMPLE) == render_json(SAMPLE)

    def test_suppressed_findings_kept(self):
        text = render_json(SAMPLE)
        parsed = json.loads(text)
        tiers = [f["tier"] for f in parsed["findings"]]
        assert "SUPPRESSED" in tiers

    def test_modulation_trail_serialized(self):
        parsed = json.loads(render_json(SAMPLE))
        trails = [f["modulations"] for f in parsed["findings"]]
        assert [{"mechanism": "sanitization", "kind": "multiply", "value": 0.20}] in trails


class TestSarif:
    def test_schema_valid(self):
        jsonschema.validate(sarif_dict(SAMPLE), SARIF_SCHEMA)

    def test_schema_valid_when_empty(self):
        jsonschema.validate(sarif_dict(report()), SARIF_SCHEMA)

    def test_rule_index_consistent(self):
        doc = sarif_dict(SAMPLE)
        rules = doc["runs"][0]["tool"]["driver"]["rules"]
        for result in doc["runs"][0]["results"]:
            assert rules[result["ruleIndex"]]["id"] == result["ruleId"]

    def test_levels_follow_tiers(self):
        doc = sarif_dict(SAMPLE)
        by_rule = {r["ruleId"]: r for r in doc["runs"][0]["results"]}
        assert by_rule["AGENT-034"]["level"] == "error"      # 0.95 BLOCK
        assert by_rule["AGENT-001"]["level"] == "warning"    # 0.85 WARN
        assert by_rule["AGENT-005"]["level"] == "none"       # 0.18 SUPPRESSED

    def test_suppressed_results_marked_external(self):
        doc = sarif_dict(SAMPLE)
        suppressed = [r for r in doc["runs"][0]["results"] if r["level"] == "none"]
        assert suppressed
        for result in suppressed:
            assert result["suppressions"] == [{"kind": "external"}]
        active = [r for r in doc["runs"][0]["results"] if r["level"] != "none"]
        for result in active:
            assert "suppressions" not in result

    def test_columns_are_one_based(self):
        doc = sarif_dict(SAMPLE)
        region = doc["runs"][0]["results"][0]["locations"][0][
            "physicalLocation"]["region"]
        assert region["startColumn"] == 5  # col_start 4, SARIF is 1-based

    def test_confidence_carried_in_properties(self):
        doc = sarif_dict(SAMPLE)
        for result in doc["runs"][0]["results"]:
            properties = result["properties"]
            assert 0.0 <= properties["confidence"] <= 1.0
            assert properties["tier"] in ("BLOCK", "WARN", "INFO", "SUPPRESSED")
            assert "modulations" in properties

    def test_render_sarif_parses(self):
        parsed = json.loads(render_sarif(SAMPLE))
        assert parsed["version"] == "2.1.0"


class TestMarkdown:
    def test_sections_by_tier(self):
        text = render_markdown(SAMPLE)
        assert "## BLOCK" in text and "## WARN" in text
        # suppressed findings are counted but not listed
        assert "## SUPPRESSED" not in text
        assert "AGENT-005" not in text

    def test_counts_table(self):
        text = render_markdown(SAMPLE)
        assert "| BLOCK | 1 |" in text
        assert "| SUPPRESSED | 1 |" in text

    def test_empty_report_message(self):
        text = render_markdown(report())
        assert NO_FINDINGS_LINE in text

    def test_modulation_trail_listed(self):
        lone = report(findings=[finding(
            "AGENT-055", base=0.85, pattern="mcp-shadow-near",
            modulations=[Modulation("near_collision_discount", "multiply", 0.70)],
        )])  # 0.595, INFO: stays listed
        text = render_markdown(lone)
        assert "near_collision_discount x0.7" in text


class TestTerminal:
    def test_no_findings_line(self):
        text = render(report(), "terminal")
        assert NO_FINDINGS_LINE in text

    def test_table_lists_actionable_only(self):
        text = render(SAMPLE, "terminal")
        assert "AGENT-034" in text and "AGENT-001" in text
        assert "AGENT-005" not in text
        assert "(1 suppressed)" in text

    def test_verbose_shows_trails(self):
        sample = report(findings=[finding(
            "AGENT-047", base=0.90, pattern="subprocess-unsandboxed",
            modulations=[Modulation("build_script_context", "multiply", 0.40)],
        )])  # 0.36, INFO: stays listed
        text = render(sample, "terminal", verbose=True)
        assert "build_script_context" in text

    def test_render_does_not_touch_real_stdout(self, capsys):
        render(SAMPLE, "terminal")
        captured = capsys.readouterr()
        assert captured.out == "" and captured.err == ""


class TestRenderDispatch:
    @pytest.mark.parametrize("fmt", ["json", "sarif", "markdown", "terminal"])
    def test_formats_return_text(self, fmt):
        assert render(SAMPLE, fmt)

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            render(SAMPLE, "xml")


class TestGate:
    BLOCK = finding()                                   # 0.95
    WARN = finding("AGENT-001", base=0.85)              # 0.85
    INFO = finding("AGENT-042", base=0.60,
                   modulations=[Modulation("near_collision_discount",
                                           "multiply", 0.70)])  # 0.42
    SUPPRESSED = finding("AGENT-005", base=0.90,
                         modulations=[Modulation("sanitization",
                                                 "multiply", 0.20)])  # 0.18

    def test_block_gate(self):
        assert findings_reach([self.BLOCK], "block")
        assert not findings_reach([self.WARN, self.INFO], "block")

    def test_warn_gate(self):
        assert findings_reach([self.WARN], "warn")
        assert not findings_reach([self.INFO], "warn")

    def test_info_gate(self):
        assert findings_reach([self.INFO], "info")
        assert not findings_reach([self.SUPPRESSED], "info")

    def test_high_is_an_alias_for_block(self):
        assert findings_reach([self.BLOCK], "high")
        assert not findings_reach([self.WARN], "high")

    def test_unknown_gate_rejected(self):
        with pytest.raises(ValueError):
            findings_reach([self.BLOCK], "medium")

    def test_empty_findings_never_reach(self):
        for gate in ("block", "warn", "info"):
            assert not findings_reach([], gate)

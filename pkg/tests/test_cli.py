"""CLI behavior: exit codes, stdout discipline, subcommand flows."""

import json
import sys
from pathlib import Path

import pytest

from agent_audit.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def write_vulnerable(tmp_path):
    (tmp_path / "agent.py").write_text(
        "from langchain.tools import tool\n"
        "\n"
        "@tool\n"
        "def calc(expr: str) -> str:\n"
        "    \"\"\"Eval.\"\"\"\n"
        "    return str(eval(expr))\n"
    )
    return tmp_path


def write_clean(tmp_path):
    (tmp_path / "mod.py").write_text("def add(a: int, b: int) -> int:\n    return a + b\n")
    return tmp_path


class TestTopLevel:
    def test_rules_listing(self, capsys):
        assert main(["--rules"]) == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l.startswith("AGENT-")]
        assert len(lines) == 57
        assert any("AGENT-034" in l for l in lines)

    def test_no_subcommand_shows_help(self, capsys):
        assert main([]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["--version"])
        assert exc_info.value.code == 0
        assert "agent-audit" in capsys.readouterr().out


class TestScan:
    def test_clean_tree_exits_zero(self, tmp_path, capsys):
        assert main(["scan", str(write_clean(tmp_path))]) == 0
        assert "No actionable findings" in capsys.readouterr().out

    def test_findings_without_gate_still_exit_zero(self, tmp_path):
        assert main(["scan", str(write_vulnerable(tmp_path))]) == 0

    def test_fail_on_block_exits_one(self, tmp_path):
        assert main(["scan", str(write_vulnerable(tmp_path)), "--fail-on", "block"]) == 1

    def test_fail_on_not_reached_exits_zero(self, tmp_path):
        assert main(["scan", str(write_clean(tmp_path)), "--fail-on", "info"]) == 0

    def test_missing_target_exits_two(self, tmp_path, capsys):
        assert main(["scan", str(tmp_path / "ghost")]) == 2
        assert "no such path" in capsys.readouterr().err

    def test_json_stdout_is_pure(self, tmp_path, capsys):
        assert main(["scan", str(write_vulnerable(tmp_path)), "--format", "json"]) == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)  # stdout parses as-is
        assert any(f["rule_id"] == "AGENT-034" for f in report["findings"])
        assert "block" in captured.err  # human summary moved to stderr

    def test_sarif_stdout_is_pure(self, tmp_path, capsys):
        assert main(["scan", str(write_vulnerable(tmp_path)), "--format", "sarif"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["version"] == "2.1.0"

    def test_suppress_flag(self, tmp_path, capsys):
        code = main([
            "scan", str(write_vulnerable(tmp_path)),
            "--suppress", "AGENT-034", "--suppress", "AGENT-016",
            "--format", "json", "--fail-on", "block",
        ])
        report = json.loads(capsys.readouterr().out)
        rules = {f["rule_id"] for f in report["findings"]}
        assert "AGENT-034" not in rules and "AGENT-016" not in rules
        assert code == 0

    def test_exclude_flag(self, tmp_path, capsys):
        write_vulnerable(tmp_path)
        code = main([
            "scan", str(tmp_path), "--exclude", "agent.py", "--format", "json",
        ])
        report = json.loads(capsys.readouterr().out)
        assert code == 0 and report["findings"] == []

    def test_bad_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["scan", ".", "--format", "csv"])
        assert exc_info.value.code == 2


class TestBaselineFlow:
    def test_capture_then_scan_reaches_fixed_point(self, tmp_path, capsys):
        root = write_vulnerable(tmp_path)
        baseline = tmp_path / "base.json"
        assert main(["baseline", str(root), "--output", str(baseline)]) == 0
        capsys.readouterr()

        doc = json.loads(baseline.read_text())
        assert doc["version"] == 1
        assert doc["findings"]  # the eval finding is recorded

        code = main([
            "scan", str(root), "--baseline", str(baseline), "--fail-on", "block",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "No actionable findings" in out

    def test_new_finding_breaks_the_gate(self, tmp_path, capsys):
        root = write_vulnerable(tmp_path)
        baseline = tmp_path / "base.json"
        main(["baseline", str(root), "--output", str(baseline)])
        capsys.readouterr()
        (root / "extra.py").write_text(
            "from langchain.tools import tool\n"
            "\n"
            "@tool\n"
            "def run(cmd: str) -> str:\n"
            "    \"\"\"Run.\"\"\"\n"
            "    return str(eval(cmd))\n"
        )
        code = main([
            "scan", str(root), "--baseline", str(baseline), "--fail-on", "block",
        ])
        assert code == 1

    def test_corrupt_baseline_exits_two(self, tmp_path, capsys):
        root = write_vulnerable(tmp_path)
        bad = tmp_path / "bad.json"
        bad.write_text("{truncated")
        assert main(["scan", str(root), "--baseline", str(bad)]) == 2
        assert "baseline" in capsys.readouterr().err


class TestInspect:
    ECHO = [sys.executable, str(FIXTURES / "echo_server.py")]

    def test_inspect_command_finds_poison(self, capsys):
        code = main(["inspect", "--format", "json", "--"] + self.ECHO)
        report = json.loads(capsys.readouterr().out)
        rules = {f["rule_id"] for f in report["findings"]}
        assert code == 0
        assert "AGENT-056" in rules

    def test_inspect_fail_on_gate(self):
        code = main(["inspect", "--fail-on", "warn", "--"] + self.ECHO)
        assert code == 1

    def test_timeout_exits_two(self, capsys):
        sleepy = [sys.executable, str(FIXTURES / "sleepy_server.py")]
        code = main(["inspect", "--timeout", "1", "--"] + sleepy)
        assert code == 2
        assert capsys.readouterr().err

    def test_requires_config_or_command(self, capsys):
        assert main(["inspect"]) == 2

    def test_config_and_command_conflict(self, tmp_path, capsys):
        config = tmp_path / ".mcp.json"
        config.write_text(json.dumps({"mcpServers": {}}))
        assert main(["inspect", "--config", str(config), "--", "echo"]) == 2

    def test_inspect_from_config_file(self, tmp_path, capsys):
        config = tmp_path / ".mcp.json"
        config.write_text(json.dumps({
            "mcpServers": {
                "echo": {"command": sys.executable,
                         "args": [str(FIXTURES / "echo_server.py")]},
            }
        }))
        code = main(["inspect", "--config", str(config), "--format", "json"])
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert any(f["rule_id"] == "AGENT-056" for f in report["findings"])


class TestBench:
    def make_corpus(self, tmp_path):
        sample = tmp_path / "01-sample"
        sample.mkdir()
        write_vulnerable(sample)
        (sample / "oracle.json").write_text(json.dumps([
            {"vuln_id": "V1", "file": "agent.py", "line": 6,
             "set": "A", "rule": "AGENT-034"},
        ]))
        return tmp_path

    def test_bench_json(self, tmp_path, capsys):
        corpus = self.make_corpus(tmp_path)
        assert main(["bench", str(corpus), "--format", "json"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["tp"] == 1 and result["fn"] == 0

    def test_bench_markdown_default(self, tmp_path, capsys):
        corpus = self.make_corpus(tmp_path)
        assert main(["bench", str(corpus)]) == 0
        assert "Precision" in capsys.readouterr().out

    def test_bad_corpus_exits_two(self, tmp_path, capsys):
        corpus = self.make_corpus(tmp_path)
        (corpus / "01-sample" / "oracle.json").write_text(json.dumps([
            {"vuln_id": "V1", "file": "a.py", "line": 1},
            {"vuln_id": "V1", "file": "a.py", "line": 1},
        ]))
        assert main(["bench", str(corpus)]) == 2
        assert capsys.readouterr().err

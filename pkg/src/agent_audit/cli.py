"""Command-line entry point.

Subcommands: scan (static analysis of a tree), inspect (live MCP server
tool listing, read-only), bench (corpus evaluation), and baseline
(capture a snapshot for incremental adoption).

Exit codes: 0 clean, 1 findings at or above the --fail-on gate, 2 for
operational errors (bad flags, unreadable config or baseline, spawn or
protocol failures).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .bench import CorpusError, render_bench_json, render_bench_markdown, run_benchmark
from .catalog import rule_catalog, validate_all
from .config import ConfigError, ScanConfig, load_config
from .engine import finalize
from .inspector.analysis import NamedTool, detect_shadowing, poison_findings
from .inspector.client import DEFAULT_TIMEOUT, InspectorError, inspect_server
from .model import ScanReport, Tier
from .pipeline import discover_files, read_text, scan_root
from .reporters import findings_reach, render
from .scanners.mcp_config import canonical_digest, is_mcp_path, normalize_server, parse_servers

BASELINE_DEFAULT = ".agent-audit-baseline.json"
_FORMATS = ("terminal", "json", "sarif", "markdown")
_GATES = ("block", "warn", "info", "high")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agent-audit",
        description="Static security scanner for LLM agent applications.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--rules", action="store_true", help="print the rule catalog and exit"
    )
    sub = parser.add_subparsers(dest="subcommand")

    scan = sub.add_parser("scan", help="scan a directory tree or file")
    scan.add_argument("target", nargs="?", default=".", help="path to scan")
    scan.add_argument("--format", "-f", choices=_FORMATS, default=None)
    scan.add_argument(
        "--fail-on",
        choices=_GATES,
        default=None,
        help="exit 1 when a finding reaches this tier ('high' means block)",
    )
    scan.add_argument("--baseline", default=None, help="baseline file; report only new findings")
    scan.add_argument(
        "--exclude", "-e", action="append", default=None, metavar="GLOB",
        help="glob to skip (repeatable)",
    )
    scan.add_argument(
        "--suppress", action="append", default=None, metavar="RULE",
        help="rule id to drop (repeatable)",
    )
    scan.add_argument("--verbose", "-v", action="store_true", default=None)

    inspect = sub.add_parser("inspect", help="list a live MCP server's tools (read-only)")
    inspect.add_argument("--config", default=None, help="MCP config file; inspect every stdio server in it")
    inspect.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    inspect.add_argument("--format", "-f", choices=_FORMATS, default="terminal")
    inspect.add_argument("--fail-on", choices=_GATES, default=None)
    inspect.add_argument("--verbose", "-v", action="store_true", default=False)
    inspect.add_argument(
        "command", nargs=argparse.REMAINDER,
        help="server command after --, e.g. inspect -- npx some-server",
    )

    bench = sub.add_parser("bench", help="score the scanner against an annotated corpus")
    bench.add_argument("corpus", help="corpus directory")
    bench.add_argument("--format", "-f", choices=("markdown", "json"), default="markdown")
    bench.add_argument("--line-tolerance", type=int, default=0)
    bench.add_argument("--strict-rules", action="store_true", default=False)

    baseline = sub.add_parser("baseline", help="capture a baseline snapshot of a tree")
    baseline.add_argument("target", nargs="?", default=".")
    baseline.add_argument("--output", "-o", default=BASELINE_DEFAULT)
    return parser


def _finding_key(finding) -> str:
    span = finding.span
    return f"{span.file_path}:{span.line_start}:{finding.rule_id}:{finding.pattern_id}"


def _print_rules() -> int:
    validate_all()
    for rule in sorted(rule_catalog().values(), key=lambda r: r.rule_id):
        print(
            f"{rule.rule_id}  {rule.asi_category:14s} {rule.severity.value:8s} "
            f"base={rule.base_confidence:.2f}  {rule.title}"
        )
    return 0


def _load_baseline(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"unreadable baseline {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"baseline {path} must hold a JSON object")
    return raw


def _emit_report(report: ScanReport, fmt: str, verbose: bool) -> None:
    rendered = render(report, fmt, verbose=verbose)
    sys.stdout.write(rendered)
    if fmt != "terminal":
        # Keep stdout machine-clean; the human summary goes to stderr.
        counts = report.tier_counts()
        summary = (
            f"{report.files_scanned} files scanned: "
            f"{counts.get('BLOCK', 0)} block / {counts.get('WARN', 0)} warn / "
            f"{counts.get('INFO', 0)} info"
        )
        print(summary, file=sys.stderr)


def _gate_exit(report: ScanReport, fail_on: Optional[str]) -> int:
    if fail_on and findings_reach(report.findings, fail_on):
        return 1
    return 0


def run_scan(args: argparse.Namespace) -> int:
    target = Path(args.target)
    if not target.exists():
        print(f"agent-audit: no such path: {args.target}", file=sys.stderr)
        return 2
    overrides = {
        "format": args.format,
        "fail_on": args.fail_on,
        "baseline": args.baseline,
        "exclusions": args.exclude,
        "suppress": args.suppress,
        "verbose": args.verbose,
    }
    config = load_config(target if target.is_dir() else target.parent, overrides=overrides)
    baseline_doc = _load_baseline(config.baseline) if config.baseline else None

    report = scan_root(target, config)
    if baseline_doc is not None:
        known = set(baseline_doc.get("findings", []))
        report.findings = [f for f in report.findings if _finding_key(f) not in known]

    _emit_report(report, config.format, bool(config.verbose))
    return _gate_exit(report, config.fail_on)


def _inspect_targets(args: argparse.Namespace) -> list[tuple[str, list[str], dict]]:
    """(server name, argv, env) triples to inspect."""
    command = list(args.command)
    if command and command[0] == "--":
        command = command[1:]
    if args.config and command:
        raise ConfigError("pass either --config or a server command, not both")
    if command:
        return [(Path(command[0]).name, command, {})]
    if not args.config:
        raise ConfigError("inspect needs --config FILE or a server command after --")
    path = Path(args.config)
    text = path.read_text(encoding="utf-8") if path.is_file() else None
    if text is None:
        raise ConfigError(f"unreadable MCP config: {args.config}")
    servers, error = parse_servers(str(path), text)
    if error or servers is None:
        raise ConfigError(f"{args.config}: {error or 'no servers found'}")
    targets = []
    for name, entry in servers.items():
        spec = normalize_server(name, entry)
        if not spec.command:
            continue
        targets.append((name, [spec.command, *spec.args], dict(spec.env)))
    if not targets:
        raise ConfigError(f"{args.config}: no stdio servers to inspect")
    return targets


def run_inspect(args: argparse.Namespace) -> int:
    try:
        targets = _inspect_targets(args)
    except ConfigError as exc:
        print(f"agent-audit: {exc}", file=sys.stderr)
        return 2

    findings = []
    named: list[NamedTool] = []
    errors: list[str] = []
    inspected = 0
    for name, argv, env in targets:
        origin = f"mcp:{name}"
        try:
            result = inspect_server(argv, timeout=args.timeout, env=env)
        except InspectorError as exc:
            errors.append(f"{name}: {exc.__class__.__name__}: {exc}")
            continue
        inspected += 1
        print(
            f"{name}: {len(result.tools)} tool(s): "
            + ", ".join(t.name for t in result.tools),
            file=sys.stderr,
        )
        findings.extend(poison_findings(result.tools, name, origin))
        named.extend(
            NamedTool(owner=name, name=t.name, line=i)
            for i, t in enumerate(result.tools, start=1)
        )
    if len(targets) > 1:
        findings.extend(detect_shadowing(named, "mcp:<live>"))

    report = ScanReport(
        root="<inspect>",
        findings=finalize(findings, ScanConfig()),
        files_scanned=inspected,
    )
    _emit_report(report, args.format, args.verbose)
    for line in errors:
        print(f"agent-audit: inspect error: {line}", file=sys.stderr)
    if errors:
        return 2
    return _gate_exit(report, args.fail_on)


def run_bench(args: argparse.Namespace) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        print(f"agent-audit: no such corpus directory: {args.corpus}", file=sys.stderr)
        return 2
    try:
        result = run_benchmark(
            corpus, line_tolerance=args.line_tolerance, strict_rules=args.strict_rules
        )
    except CorpusError as exc:
        print(f"agent-audit: {exc}", file=sys.stderr)
        return 2
    if args.format == "json":
        sys.stdout.write(render_bench_json(result))
    else:
        sys.stdout.write(render_bench_markdown(result))
    return 0


def run_baseline(args: argparse.Namespace) -> int:
    target = Path(args.target)
    if not target.exists():
        print(f"agent-audit: no such path: {args.target}", file=sys.stderr)
        return 2
    config = load_config(
        target if target.is_dir() else target.parent, overrides={"baseline": None}
    )
    config.baseline = None
    report = scan_root(target, config)

    servers: dict[str, str] = {}
    root = target if target.is_dir() else target.parent
    files, _ = discover_files(root, config)
    for path in files:
        rel = path.relative_to(root).as_posix()
        if not is_mcp_path(rel):
            continue
        text = read_text(path)
        if text is None:
            continue
        parsed, error = parse_servers(rel, text)
        if error or not parsed:
            continue
        for name, entry in parsed.items():
            servers[f"{rel}::{name}"] = canonical_digest(normalize_server(name, entry))

    document = {
        "version": 1,
        "findings": sorted(_finding_key(f) for f in report.findings),
        "servers": dict(sorted(servers.items())),
    }
    Path(args.output).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    print(
        f"baseline written to {args.output}: {len(report.findings)} finding(s), "
        f"{len(servers)} server digest(s)",
        file=sys.stderr,
    )
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.rules:
        return _print_rules()
    if not args.subcommand:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.subcommand == "scan":
            return run_scan(args)
        if args.subcommand == "inspect":
            return run_inspect(args)
        if args.subcommand == "bench":
            return run_bench(args)
        if args.subcommand == "baseline":
            return run_baseline(args)
    except ConfigError as exc:
        print(f"agent-audit: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled subcommand {args.subcommand!r}")


if __name__ == "__main__":
    sys.exit(main())

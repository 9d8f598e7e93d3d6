"""File discovery, classification, and scanner dispatch.

Walks are deterministic (lexicographic, no symlinks) so two scans of the
same tree produce byte-identical reports. A scanner crash on one file is
contained as a diagnostic; the rest of the scan continues.
"""

from __future__ import annotations

import enum
import fnmatch
import time
from pathlib import Path
from typing import Callable, Optional

from . import engine
from .config import ScanConfig
from .model import Diagnostic, Finding, ScanReport
from .scanners import mcp_config, privilege_scanner, python_scanner, secret_scanner

MAX_FILE_BYTES = 2 * 1024 * 1024

DEFAULT_EXCLUDED_DIRS = {
    ".git", ".hg", ".svn", "__pycache__", "node_modules", ".venv", "venv",
    ".tox", ".nox", ".mypy_cache", ".pytest_cache", ".ruff_cache",
    "dist", "build", ".eggs", "site-packages", ".idea", ".DS_Store",
}


class FileClass(enum.Enum):
    PYTHON_SOURCE = "python-source"
    CONFIG_JSON = "config-json"
    CONFIG_YAML = "config-yaml"
    CONFIG_TOML = "config-toml"
    CONFIG_OTHER = "config-other"
    SCRIPT = "script"
    MARKDOWN = "markdown"
    OTHER = "other"


_EXTENSION_CLASSES = {
    ".py": FileClass.PYTHON_SOURCE,
    ".pyw": FileClass.PYTHON_SOURCE,
    ".json": FileClass.CONFIG_JSON,
    ".yaml": FileClass.CONFIG_YAML,
    ".yml": FileClass.CONFIG_YAML,
    ".toml": FileClass.CONFIG_TOML,
    ".ini": FileClass.CONFIG_OTHER,
    ".cfg": FileClass.CONFIG_OTHER,
    ".conf": FileClass.CONFIG_OTHER,
    ".env": FileClass.CONFIG_OTHER,
    ".properties": FileClass.CONFIG_OTHER,
    ".sh": FileClass.SCRIPT,
    ".bash": FileClass.SCRIPT,
    ".zsh": FileClass.SCRIPT,
    ".ksh": FileClass.SCRIPT,
    ".md": FileClass.MARKDOWN,
    ".markdown": FileClass.MARKDOWN,
    ".mdx": FileClass.MARKDOWN,
    ".rst": FileClass.MARKDOWN,
}

_CONFIG_CLASSES = {
    FileClass.CONFIG_JSON,
    FileClass.CONFIG_YAML,
    FileClass.CONFIG_TOML,
    FileClass.CONFIG_OTHER,
}

Scanner = Callable[[str, str, Optional[ScanConfig]], list[Finding]]

_SCANNERS: dict[str, Scanner] = {
    "python": python_scanner.scan,
    "secret": secret_scanner.scan,
    "privilege": privilege_scanner.scan,
    "mcp-config": mcp_config.scan,
}


def classify_file(path: str, text: Optional[str] = None) -> FileClass:
    """Extension-based class; undecodable content is OTHER regardless."""
    suffix = Path(path).suffix.lower()
    file_class = _EXTENSION_CLASSES.get(suffix)
    if file_class is not None:
        return file_class
    # Extensionless files with a shebang are scripts (wrappers, hooks).
    if text is not None and text.startswith("#!"):
        return FileClass.SCRIPT
    name = Path(path).name
    if privilege_scanner.artifact_kind(path, text or "") in ("sudoers", "service", "container"):
        return FileClass.CONFIG_OTHER
    if name.lower().startswith((".env", "dockerfile")):
        return FileClass.CONFIG_OTHER
    return FileClass.OTHER


def scanners_for(path: str, file_class: FileClass, text: str) -> list[str]:
    """Scanner names to run for one file, in a fixed order."""
    names: list[str] = []
    if file_class is FileClass.PYTHON_SOURCE:
        names = ["python", "secret", "privilege"]
    elif file_class in _CONFIG_CLASSES:
        names = ["secret", "mcp-config"]
    elif file_class is FileClass.SCRIPT:
        names = ["privilege", "secret"]
    elif file_class is FileClass.MARKDOWN:
        names = ["secret"]
    # Deployment artifacts (sudoers, unit files, container definitions)
    # carry privilege semantics whatever their extension says.
    if "privilege" not in names:
        if privilege_scanner.artifact_kind(path, text) in ("sudoers", "service", "container"):
            names.append("privilege")
    return names


def _excluded(rel_path: str, extra_globs: list[str]) -> bool:
    parts = rel_path.split("/")
    if any(part in DEFAULT_EXCLUDED_DIRS or part.endswith(".egg-info") for part in parts):
        return True
    for glob in extra_globs:
        if fnmatch.fnmatch(rel_path, glob) or any(
            fnmatch.fnmatch(part, glob) for part in parts
        ):
            return True
    return False


def discover_files(root: Path, config: ScanConfig) -> tuple[list[Path], int]:
    """(files to scan, skipped count). Deterministic order, no symlinks."""
    if root.is_file():
        return [root], 0
    files: list[Path] = []
    skipped = 0
    stack = [root]
    while stack:
        directory = stack.pop()
        try:
            entries = sorted(directory.iterdir(), key=lambda p: p.name, reverse=True)
        except OSError:
            skipped += 1
            continue
        for entry in entries:
            if entry.is_symlink():
                skipped += 1
                continue
            rel = entry.relative_to(root).as_posix()
            if _excluded(rel, config.exclusions):
                continue
            if entry.is_dir():
                stack.append(entry)
            elif entry.is_file():
                files.append(entry)
    files.sort(key=lambda p: p.relative_to(root).as_posix())
    return files, skipped


def read_text(path: Path) -> Optional[str]:
    """File text, or None when binary, oversized, or undecodable."""
    try:
        if path.stat().st_size > MAX_FILE_BYTES:
            return None
        blob = path.read_bytes()
    except OSError:
        return None
    if b"\x00" in blob[:8192]:
        return None
    try:
        return blob.decode("utf-8-sig")
    except UnicodeDecodeError:
        return None


def scan_file(
    rel_path: str, text: str, config: ScanConfig
) -> tuple[list[Finding], list[Diagnostic]]:
    """Run every applicable scanner on one file, containing crashes."""
    file_class = classify_file(rel_path, text)
    findings: list[Finding] = []
    diagnostics: list[Diagnostic] = []
    for name in scanners_for(rel_path, file_class, text):
        try:
            findings.extend(_SCANNERS[name](rel_path, text, config))
        except SyntaxError as exc:
            diagnostics.append(
                Diagnostic(rel_path, f"{name}: file skipped, not parseable ({exc.msg})")
            )
        except Exception as exc:  # crash containment per file per scanner
            diagnostics.append(Diagnostic(rel_path, f"{name}: scanner error: {exc}"))
    return findings, diagnostics


def scan_root(root: str | Path, config: Optional[ScanConfig] = None) -> ScanReport:
    """Scan a directory tree (or single file) into a finished report."""
    config = config or ScanConfig(root=str(root))
    root_path = Path(root)
    started = time.monotonic()

    files, skipped = discover_files(root_path, config)
    all_findings: list[Finding] = []
    diagnostics: list[Diagnostic] = []
    scanned = 0

    base = root_path if root_path.is_dir() else root_path.parent
    for path in files:
        text = read_text(path)
        rel = path.relative_to(base).as_posix()
        if text is None:
            skipped += 1
            continue
        file_class = classify_file(rel, text)
        names = scanners_for(rel, file_class, text)
        if not names:
            skipped += 1
            continue
        scanned += 1
        findings, file_diagnostics = scan_file(rel, text, config)
        all_findings.extend(findings)
        diagnostics.extend(file_diagnostics)

    final = engine.finalize(all_findings, config)
    return ScanReport(
        root=str(root),
        findings=final,
        files_scanned=scanned,
        files_skipped=skipped,
        duration_seconds=time.monotonic() - started,
        diagnostics=sorted(diagnostics, key=lambda d: (d.file_path, d.message)),
    )

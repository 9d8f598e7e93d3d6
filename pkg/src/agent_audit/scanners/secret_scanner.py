"""Credential detection over source, config, script, and markdown files.

Pattern matching is line-based with first-match-per-span: once a pattern
claims a character range on a line, later patterns cannot re-claim any
part of it. Candidates then pass two hard gates (placeholder rejection
and a per-kind entropy floor) before any finding is produced; context
only modulates confidence after that.
"""

from __future__ import annotations

import base64
import binascii
import fnmatch
import json
import math
import re
from collections import Counter
from typing import Any, Optional

from .. import catalog
from ..model import Finding, Modulation, SourceSpan

_DATA = catalog.load_data("secrets.json")

_PATTERNS = [
    {
        "name": spec["name"],
        "family": spec["family"],
        "regex": re.compile(spec["regex"]),
        "group": spec["group"],
        "entropy_floor": spec.get("entropy_floor"),
    }
    for spec in _DATA["patterns"]
]

_FAMILY_KINDS: dict[str, str] = _DATA["family_kinds"]
_ENTROPY_FLOORS: dict[str, float] = _DATA["entropy_floors"]

_PLACEHOLDER_RES = [re.compile(p) for p in _DATA["placeholder_values"]]
_PLACEHOLDER_SUBSTRINGS = [s.lower() for s in _DATA["placeholder_substrings"]]
_FIELD_MARKERS = _DATA["field_context_markers"]
_TEST_GLOBS = _DATA["test_path_globs"]
_DOCS_GLOBS = _DATA["docs_path_globs"]

_FAMILY_PATTERN_IDS = {
    "api-key-prefix": "secret-api-key-prefix",
    "generic-token": "secret-generic-token",
    "jwt": "secret-jwt",
    "private-key": "secret-private-key",
    "connection-string": "secret-connection-string",
}

_MARKDOWN_SUFFIXES = (".md", ".markdown", ".mdx", ".rst")

# Cheap first stage: a line that cannot match any of the 46 patterns is
# dropped before the full loop runs. Every pattern's mandatory anchor text
# must appear in this alternation; a test walks pattern examples to keep
# it honest.
_QUICK_RE = re.compile(
    r"(?i)(sk-|sk_|rk_|gsk_|pplx-|xai-|AKIA|ASIA|ABIA|ACCA|aws|ghp_|github_pat_"
    r"|gho_|ghu_|ghs_|ghr_|glpat-|xox|slack\.com|AIza|service_account|hf_|pypi-"
    r"|npm_|SG\.|\bSK[0-9a-f]|key-|AccountKey|dop_v1_|dapi|shpat_|:AA|eyJ"
    r"|[MNO][A-Za-z0-9_\-]{23}\."
    r"|-----BEGIN|://|api[_-]?key|apikey|secret|access[_-]?token|auth[_-]?token"
    r"|client[_-]?secret|password|passwd|pwd|bearer|basic\s)"
)

SCANNER_NAME = "secret"


def shannon_entropy(value: str) -> float:
    """Shannon entropy of a string in bits per character.

    A uniform string over an alphabet of size k scores exactly log2(k).
    The empty string scores 0.
    """
    if not value:
        return 0.0
    counts = Counter(value)
    total = len(value)
    return -sum(
        (count / total) * math.log2(count / total) for count in counts.values()
    )


def is_placeholder(value: str) -> bool:
    """Hard gate: obviously non-secret stand-in values."""
    stripped = value.strip()
    for rx in _PLACEHOLDER_RES:
        if rx.match(stripped):
            return True
    lowered = stripped.lower()
    return any(sub in lowered for sub in _PLACEHOLDER_SUBSTRINGS)


def entropy_floor_for(pattern: dict[str, Any]) -> float:
    override = pattern.get("entropy_floor")
    if override is not None:
        return override
    kind = _FAMILY_KINDS[pattern["family"]]
    return _ENTROPY_FLOORS[kind]


def jwt_is_structural(token: str) -> bool:
    """True when the first segment base64url-decodes to a JSON object."""
    header = token.split(".", 1)[0]
    padded = header + "=" * (-len(header) % 4)
    try:
        decoded = base64.urlsafe_b64decode(padded)
        return isinstance(json.loads(decoded), dict)
    except (binascii.Error, ValueError, UnicodeDecodeError):
        return False


def _mask(secret: str) -> str:
    if len(secret) <= 8:
        return secret[:2] + "..."
    return secret[:6] + "..." + secret[-2:]


def _overlaps(span: tuple[int, int], claimed: list[tuple[int, int]]) -> bool:
    start, end = span
    return any(not (end <= s or start >= e) for s, e in claimed)


def path_modulations(path: str) -> list[Modulation]:
    mods = []
    if any(fnmatch.fnmatch(path, g) for g in _TEST_GLOBS):
        mods.append(
            Modulation("test_context", "multiply", catalog.mechanism_value("test_context"))
        )
    if any(fnmatch.fnmatch(path, g) for g in _DOCS_GLOBS):
        mods.append(
            Modulation("docs_context", "multiply", catalog.mechanism_value("docs_context"))
        )
    return mods


def scan(path: str, text: str, config: Any = None) -> list[Finding]:
    """Scan one file's text for credentials."""
    findings: list[Finding] = []
    markdown = path.lower().endswith(_MARKDOWN_SUFFIXES)
    base_path_mods = path_modulations(path)

    for line_no, line in enumerate(text.splitlines(), start=1):
        if len(line) > 2000:
            line = line[:2000]
        if _QUICK_RE.search(line) is None:
            continue
        claimed: list[tuple[int, int]] = []
        for pattern in _PATTERNS:
            for match in pattern["regex"].finditer(line):
                span = match.span(pattern["group"])
                if span[0] == span[1] or _overlaps(span, claimed):
                    continue
                secret = match.group(pattern["group"])
                if is_placeholder(secret):
                    continue
                entropy = shannon_entropy(secret)
                if entropy < entropy_floor_for(pattern):
                    continue
                if pattern["family"] == "jwt" and not jwt_is_structural(secret):
                    continue
                claimed.append(span)

                pattern_id = _FAMILY_PATTERN_IDS[pattern["family"]]
                notes = [f"matched {pattern['name']}", f"entropy {entropy:.2f} bits"]
                if markdown:
                    pattern_id = "secret-markdown-embedded"
                    notes.append("credential embedded in documentation file")

                modulations = [Modulation(m.mechanism, m.kind, m.value) for m in base_path_mods]
                if any(marker in line for marker in _FIELD_MARKERS):
                    modulations.append(
                        Modulation(
                            "framework_field_context",
                            "multiply",
                            catalog.mechanism_value("framework_field_context"),
                        )
                    )

                rule = catalog.rule_for_pattern(pattern_id)
                findings.append(
                    Finding(
                        rule_id=rule.rule_id,
                        message=(
                            f"{pattern['name'].replace('-', ' ')} detected "
                            f"({_mask(secret)})"
                        ),
                        span=SourceSpan(
                            file_path=path,
                            line_start=line_no,
                            line_end=line_no,
                            col_start=span[0],
                            col_end=span[1],
                        ),
                        scanner=SCANNER_NAME,
                        pattern_id=pattern_id,
                        base_confidence=rule.base_confidence,
                        modulations=modulations,
                        snippet=line.replace(secret, _mask(secret)).strip()[:160],
                        notes=notes,
                    )
                )
    return findings

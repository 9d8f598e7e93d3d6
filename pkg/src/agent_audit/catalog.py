"""Rule catalog, pattern-to-rule map, and confidence mechanism registry.

All of it is data (see data/), loaded once per process. The catalog is
validated on load: a scanner emitting a pattern id that maps nowhere, or
a rule no pattern can reach, is a packaging bug and fails immediately.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any

from .model import Rule, Severity

# Expected shape of the shipped catalog. The per-category counts follow the
# published rule-pack layout; CROSS-CUTTING rules sit outside the taxonomy.
EXPECTED_RULE_COUNT = 57
EXPECTED_PATTERN_COUNT = 73
EXPECTED_CATEGORY_COUNTS = {
    "ASI-01": 3,
    "ASI-02": 9,
    "ASI-03": 9,
    "ASI-04": 10,
    "ASI-05": 7,
    "ASI-06": 3,
    "ASI-07": 2,
    "ASI-08": 1,
    "ASI-09": 3,
    "ASI-10": 6,
    "CROSS-CUTTING": 4,
}


class CatalogError(RuntimeError):
    """Raised when the shipped catalog data is internally inconsistent."""


def load_data(name: str) -> Any:
    """Load one JSON data file shipped with the package."""
    ref = resources.files("agent_audit").joinpath("data").joinpath(name)
    with ref.open("r", encoding="utf-8") as handle:
        return json.load(handle)


@lru_cache(maxsize=1)
def rule_catalog() -> dict[str, Rule]:
    """All rules keyed by rule id, validated against the expected shape."""
    raw = load_data("rules.json")
    rules: dict[str, Rule] = {}
    for entry in raw["rules"]:
        rule = Rule(
            rule_id=entry["rule_id"],
            asi_category=entry["asi_category"],
            title=entry["title"],
            description=entry["description"],
            severity=Severity(entry["severity"]),
            base_confidence=entry["base_confidence"],
            remediation=entry["remediation"],
            provenance=entry["provenance"],
        )
        if rule.rule_id in rules:
            raise CatalogError(f"duplicate rule id {rule.rule_id}")
        if rule.asi_category not in raw["categories"]:
            raise CatalogError(f"{rule.rule_id}: unknown category {rule.asi_category}")
        if not 0.0 <= rule.base_confidence <= 1.0:
            raise CatalogError(f"{rule.rule_id}: base confidence out of range")
        rules[rule.rule_id] = rule
    validate_catalog(rules)
    return rules


@lru_cache(maxsize=1)
def pattern_to_rule() -> dict[str, str]:
    """Map from scanner pattern ids to rule ids (total and surjective)."""
    mapping: dict[str, str] = load_data("patterns.json")["pattern_map"]
    rules = rule_catalog()
    unknown = sorted(set(mapping.values()) - set(rules))
    if unknown:
        raise CatalogError(f"pattern_map targets unknown rules: {unknown}")
    uncovered = sorted(set(rules) - set(mapping.values()))
    if uncovered:
        raise CatalogError(f"rules unreachable from any pattern: {uncovered}")
    return mapping


@lru_cache(maxsize=1)
def merge_groups() -> dict[str, dict[str, Any]]:
    """Merge groups keyed by rule id.

    Each value carries the group id and the survivor priority (position in
    the members list; lower wins).
    """
    groups = load_data("patterns.json")["merge_groups"]
    rules = rule_catalog()
    by_rule: dict[str, dict[str, Any]] = {}
    for group in groups:
        for position, rule_id in enumerate(group["members"]):
            if rule_id not in rules:
                raise CatalogError(
                    f"merge group {group['group_id']} names unknown rule {rule_id}"
                )
            if rule_id in by_rule:
                raise CatalogError(f"rule {rule_id} is in two merge groups")
            by_rule[rule_id] = {
                "group_id": group["group_id"],
                "priority": position,
            }
    return by_rule


@lru_cache(maxsize=1)
def mechanisms() -> dict[str, dict[str, Any]]:
    """The confidence modulation mechanism registry."""
    return load_data("patterns.json")["mechanisms"]


def mechanism_value(name: str) -> float:
    return float(mechanisms()[name]["value"])


def rule_for_pattern(pattern_id: str) -> Rule:
    mapping = pattern_to_rule()
    if pattern_id not in mapping:
        raise CatalogError(f"pattern id not in catalog: {pattern_id}")
    return rule_catalog()[mapping[pattern_id]]


def dedup_class(rule_id: str) -> str:
    """Dedup key component: merge-group id when grouped, else the rule id."""
    group = merge_groups().get(rule_id)
    return group["group_id"] if group else rule_id


def survivor_priority(rule_id: str) -> int:
    group = merge_groups().get(rule_id)
    return group["priority"] if group else 0

def category_counts(rules: dict[str, Rule]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for rule in rules.values():
        counts[rule.asi_category] = counts.get(rule.asi_category, 0) + 1
    return counts


def validate_catalog(rules: dict[str, Rule]) -> None:
    if len(rules) != EXPECTED_RULE_COUNT:
        raise CatalogError(
            f"expected {EXPECTED_RULE_COUNT} rules, catalog has {len(rules)}"
        )
    counts = category_counts(rules)
    if counts != EXPECTED_CATEGORY_COUNTS:
        raise CatalogError(
            f"category distribution mismatch: {counts} != {EXPECTED_CATEGORY_COUNTS}"
        )


def validate_all() -> None:
    """Force-load and cross-check every catalog; used by tests and --rules."""
    rules = rule_catalog()
    mapping = pattern_to_rule()
    if len(mapping) != EXPECTED_PATTERN_COUNT:
        raise CatalogError(
            f"expected {EXPECTED_PATTERN_COUNT} pattern ids, map has {len(mapping)}"
        )
    merge_groups()
    registry = mechanisms()
    for required in (
        "tool_boundary_base",
        "framework_path_suppression",
        "test_context",
        "sanitization",
        "safe_command",
        "build_script_context",
    ):
        if required not in registry:
            raise CatalogError(f"mechanism registry missing {required}")
    # Base confidences of taint rules must equal the ordinary-function base,
    # because the scanner swaps in the boundary base explicitly.
    ordinary = mechanism_value("ordinary_function_base")
    for rule_id in ("AGENT-005", "AGENT-006", "AGENT-007"):
        if rules[rule_id].base_confidence != ordinary:
            raise CatalogError(
                f"{rule_id} base must match ordinary_function_base {ordinary}"
            )

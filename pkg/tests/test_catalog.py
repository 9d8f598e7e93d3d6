"""Catalog integrity: counts, category distribution, pattern mapping."""

import pytest

from agent_audit.catalog import (
    EXPECTED_CATEGORY_COUNTS,
    EXPECTED_PATTERN_COUNT,
    EXPECTED_RULE_COUNT,
    CatalogError,
    category_counts,
    dedup_class,
    mechanism_value,
    mechanisms,
    merge_groups,
    pattern_to_rule,
    rule_catalog,
    rule_for_pattern,
    survivor_priority,
    validate_all,
)


def test_validate_all_passes():
    validate_all()


def test_rule_count_is_57():
    assert len(rule_catalog()) == EXPECTED_RULE_COUNT == 57


def test_category_distribution():
    counts = category_counts(rule_catalog())
    assert counts == EXPECTED_CATEGORY_COUNTS
    assert counts["CROSS-CUTTING"] == 4
    assert sum(v for k, v in counts.items() if k != "CROSS-CUTTING") == 53
    # The three named maxima anchor the distribution.
    assert counts["ASI-04"] == 10
    assert counts["ASI-02"] == 9
    assert counts["ASI-03"] == 9


def test_every_pattern_maps_to_exactly_one_rule():
    mapping = pattern_to_rule()
    assert len(mapping) == EXPECTED_PATTERN_COUNT == 73
    rules = rule_catalog()
    for pattern_id, rule_id in mapping.items():
        assert rule_id in rules, f"{pattern_id} -> unknown {rule_id}"


def test_every_rule_reachable_from_some_pattern():
    covered = set(pattern_to_rule().values())
    assert covered == set(rule_catalog())


def test_rule_ids_well_formed_and_bases_in_range():
    for rule_id, rule in rule_catalog().items():
        assert rule_id.startswith("AGENT-") and len(rule_id) == 9
        assert 0.0 < rule.base_confidence <= 1.0
        assert rule.provenance in ("core", "extrapolated")
        assert rule.title and rule.remediation


def test_merge_groups_reference_known_rules():
    rules = rule_catalog()
    membership = merge_groups()
    assert set(membership) <= set(rules)
    by_group: dict[str, list[str]] = {}
    for rule_id, entry in membership.items():
        by_group.setdefault(entry["group_id"], []).append(rule_id)
    assert set(by_group) == {"prompt-injection", "tool-dangerous-op", "credential-exposure"}
    for group_id, members in by_group.items():
        assert len(members) >= 2, group_id


def test_dedup_class_and_survivor_priority():
    # Grouped rules share a dedup class; ungrouped rules stand alone.
    assert dedup_class("AGENT-034") == dedup_class("AGENT-047")
    assert dedup_class("AGENT-027") == dedup_class("AGENT-010")
    assert dedup_class("AGENT-001") == dedup_class("AGENT-031")
    assert dedup_class("AGENT-029") != dedup_class("AGENT-030")
    # Survivor order follows member position: more specific first.
    assert survivor_priority("AGENT-027") < survivor_priority("AGENT-010")
    assert survivor_priority("AGENT-034") < survivor_priority("AGENT-047")


def test_mechanism_registry():
    registry = mechanisms()
    assert len(registry) >= 6
    for name in (
        "tool_boundary_base",
        "framework_path_suppression",
        "test_context",
        "sanitization",
        "safe_command",
        "build_script_context",
    ):
        assert name in registry
    assert mechanism_value("sanitization") == pytest.approx(0.20)
    assert mechanism_value("tool_boundary_base") == pytest.approx(0.90)


def test_unknown_pattern_rejected():
    with pytest.raises(CatalogError):
        rule_for_pattern("no-such-pattern")

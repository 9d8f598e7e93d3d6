"""Levenshtein edit distance, two-row dynamic programming.

Used for dependency typosquat checks and MCP tool-name shadowing. Kept
dependency-free and small enough to verify against the textbook
recursion in tests.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning a into b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    current = [0] * (len(b) + 1)
    for i, char_a in enumerate(a, start=1):
        current[0] = i
        for j, char_b in enumerate(b, start=1):
            cost = 0 if char_a == char_b else 1
            current[j] = min(
                previous[j] + 1,      # deletion
                current[j - 1] + 1,   # insertion
                previous[j - 1] + cost,
            )
        previous, current = current, previous
    return previous[len(b)]

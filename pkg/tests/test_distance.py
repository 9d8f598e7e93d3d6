"""Edit distance against a recursive oracle plus metric axioms."""

import random
from functools import lru_cache

from hypothesis import given, strategies as st

from agent_audit.distance import levenshtein


def oracle(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        cost = 0 if a[i - 1] == b[j - 1] else 1
        return min(go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + cost)

    return go(len(a), len(b))


def test_known_values():
    assert levenshtein("read_file", "read_file") == 0
    assert levenshtein("read_file", "read_fi1e") == 1
    assert levenshtein("", "abc") == 3
    assert levenshtein("abc", "") == 3
    assert levenshtein("read_file", "write_file") == 4
    assert levenshtein("kitten", "sitting") == 3


def test_thousand_random_pairs_match_oracle():
    rng = random.Random(0xD15)
    alphabet = "ab_c1"
    checked = 0
    for _ in range(1000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 10)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 10)))
        assert levenshtein(a, b) == oracle(a, b), (a, b)
        checked += 1
    assert checked == 1000


short = st.text(alphabet="abc_1", max_size=8)


@given(short, short)
def test_symmetry(a, b):
    assert levenshtein(a, b) == levenshtein(b, a)


@given(short, short)
def test_identity_of_indiscernibles(a, b):
    assert (levenshtein(a, b) == 0) == (a == b)


@given(short, short, short)
def test_triangle_inequality(a, b, c):
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


@given(short, short)
def test_bounded_by_longer_string(a, b):
    assert levenshtein(a, b) <= max(len(a), len(b))

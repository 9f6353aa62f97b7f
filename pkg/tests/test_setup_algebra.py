from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regrad.errors import DuplicateSlitError, SetupSyntaxError, TooFewSlits
from regrad.setup_algebra import (
    Atom,
    Configuration,
    Join,
    association_trees,
    association_variants,
    canonicalize,
    fold,
    leaves,
    parse_setup,
    render,
)

a, a1, a2 = Atom("a"), Atom("a'"), Atom("a''")


@pytest.mark.parametrize(
    "text, tree",
    [
        ("a v a'", Join(a, a1)),
        ("(a v a') v a''", Join(Join(a, a1), a2)),
        ("a v (a' v a'')", Join(a, Join(a1, a2))),
        ("a v a' v a''", Join(Join(a, a1), a2)),
        ("  a   ∨a'  ", Join(a, a1)),
        ("((a))", a),
        ("(a)v(a')", Join(a, a1)),
    ],
)
def test_parse(text, tree):
    assert parse_setup(text) == tree


@pytest.mark.parametrize("text, pos", [("a v", 3), ("(a v b", 6), ("a b", 2), ("v a", 0), ("a + b", 2), ("", 0)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(SetupSyntaxError) as e:
        parse_setup(text)
    assert e.value.pos == pos
    assert e.value.expected


def test_duplicate_slit_rejected():
    with pytest.raises(DuplicateSlitError):
        parse_setup("a v (b v a)")


def test_canonicalize_examples():
    assert canonicalize(Join(Join(a, a1), a2)) == Configuration(("a", "a'", "a''"))
    assert canonicalize(Join(a, Join(a1, a2))) == Configuration(("a", "a'", "a''"))
    assert canonicalize(a) == Configuration(("a",))


def test_configuration_invariants():
    with pytest.raises(ValueError):
        Configuration(())
    with pytest.raises(ValueError):
        Configuration(("b", "a"))
    with pytest.raises(DuplicateSlitError):
        Configuration.of(["a", "a"])


def test_three_slit_variants_are_the_two_bracketings():
    assert association_variants(["a", "a'", "a''"]) == [(Join(Join(a, a1), a2), Join(a, Join(a1, a2)))]


@pytest.mark.parametrize("n", range(1, 8))
def test_tree_count_is_catalan(n):
    labels = [f"s{i}" for i in range(n)]
    trees = association_trees(labels)
    assert len(trees) == comb(2 * (n - 1), n - 1) // n
    assert len(set(trees)) == len(trees)
    assert all(leaves(t) == labels for t in trees)


def test_four_slits_five_trees_ten_pairs():
    assert len(association_trees("abcd")) == 5
    assert len(association_variants("abcd")) == 10


def test_too_few_slits():
    with pytest.raises(TooFewSlits):
        association_variants(["a", "a'"])


labels = st.lists(st.from_regex(r"[a-z][a-z0-9']{0,2}", fullmatch=True).filter(lambda s: s != "v"),
                  min_size=1, max_size=6, unique=True)


@st.composite
def trees(draw):
    names = draw(labels)
    pool = [Atom(n) for n in names]
    while len(pool) > 1:
        i = draw(st.integers(0, len(pool) - 2))
        pool[i:i + 2] = [Join(pool[i], pool[i + 1])]
    return pool[0]


def _swap(t, path):
    if isinstance(t, Atom):
        return t
    if path and path[0]:
        return Join(_swap(t.right, path[1:]), _swap(t.left, path[1:]))
    return Join(_swap(t.left, path[1:]), _swap(t.right, path[1:]))


@given(trees())
def test_render_parse_roundtrip(t):
    assert parse_setup(render(t)) == t
    assert parse_setup(render(t, "∨")) == t


@given(trees(), st.lists(st.booleans(), max_size=6))
def test_canonicalize_ignores_child_order(t, path):
    assert canonicalize(_swap(t, path)) == canonicalize(t)


@settings(max_examples=50)
@given(labels.filter(lambda x: len(x) >= 3))
def test_variants_share_configuration(names):
    for t1, t2 in association_variants(names):
        assert canonicalize(t1) == canonicalize(t2) == Configuration.of(names)


def test_fold_evaluates_bracketing():
    t = parse_setup("(a v b) v c")
    assert fold(t, {"a": "1", "b": "2", "c": "3"}.get, lambda x, y: f"({x}{y})") == "((12)3)"

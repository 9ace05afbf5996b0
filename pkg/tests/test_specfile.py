from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from jamison.errors import ParseError, ValidationError
from jamison.groups import GroupDescriptor
from jamison.sequences import AllElements, DoubleExponential, Geometric, Polynomial, SequenceSpec
from jamison.specfile import Policy, ProblemSpec, emit_spec, parse_spec, parse_spec_text

FIXTURES = sorted((Path(__file__).parent / "fixtures").glob("*.toml"))


def test_minimal_spec():
    s = parse_spec_text('[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n')
    assert s.task == "verdict" and isinstance(s.sequence.body, AllElements)


def test_family_shorthand():
    s = parse_spec_text('[group]\nfree_rank = 1\n[sequence]\nfamily = "double_exp base=2"\n')
    assert s.sequence.body == DoubleExponential(2)
    s = parse_spec_text('sequence = "polynomial coeffs=1,3"\n[group]\nfree_rank = 1\n')
    assert s.sequence.body == Polynomial((1, 3))


def test_torsion_order_one_reports_line_and_field():
    text = 'task = "verdict"\n[group]\nfree_rank = 1\ntorsion = [1]\n[sequence]\nfamily = "all"\n'
    with pytest.raises(ValidationError) as e:
        parse_spec_text(text)
    assert e.value.field == "group.torsion" and e.value.line == 4


def test_syntax_error_has_line():
    with pytest.raises(ParseError) as e:
        parse_spec_text('task = "verdict"\n[group\n')
    assert e.value.line == 2


@pytest.mark.parametrize(
    "text, field",
    [
        ('[group]\nfree_rank = 1\n[sequence]\nfamily = "spiral"\n', "sequence.family"),
        ('[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\nratio = 3\n', "sequence.ratio"),
        ('[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n[policy]\nK = 0\n', "policy.K"),
        ('[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n[policy]\nbogus = 1\n', "policy.bogus"),
        ('task = "tree"\n[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n', "task"),
        ('task = "repnorm"\n[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n', "characters"),
        ('task = "nope"\n[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n', "task"),
        ('[group]\nfree_rank = -1\n[sequence]\nfamily = "all"\n', "group.free_rank"),
        ('[group]\nfree_rank = 2\n[sequence]\nfamily = "explicit"\nterms = [[1]]\n', "sequence.terms[0]"),
    ],
)
def test_validation_errors(text, field):
    with pytest.raises(ValidationError) as e:
        parse_spec_text(text)
    assert e.value.field == field
    assert e.value.exit_code == 2


def test_field_line_points_at_key():
    text = '[group]\nfree_rank = 1\n[sequence]\nfamily = "all"\n[policy]\nq_max = 10\nK = -3\n'
    with pytest.raises(ValidationError) as e:
        parse_spec_text(text)
    assert e.value.line == 7


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
def test_round_trip_fixtures(path):
    s = parse_spec(path)
    again = parse_spec_text(emit_spec(s))
    assert again == s
    assert emit_spec(again) == emit_spec(s)


@given(
    st.sampled_from(["verdict", "epsilon", "oracle"]),
    st.integers(0, 2**31),
    st.integers(1, 3),
    st.lists(st.integers(2, 9), max_size=2),
    st.integers(1, 9),
    st.integers(2, 9),
)
def test_round_trip_generated(task, seed, rank, tors, c, r):
    G = GroupDescriptor(rank, tuple(tors))
    spec = ProblemSpec(G, SequenceSpec(G, Geometric(c, r), coordinate=rank - 1), task, Policy(q_max=17), seed)
    assert parse_spec_text(emit_spec(spec)) == spec

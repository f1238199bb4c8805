import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellstreams.core_streams import (
    AlignedSet,
    CorrelationValue,
    Provenance,
    SpinStream,
    StreamError,
    canonical_angle,
    check_identity3,
    check_identity4,
    correlation,
    eval_inequality3,
    eval_inequality4,
    negative_cosine_quadruple,
    negative_cosine_triple,
)

pm1 = st.sampled_from([1, -1])


@st.composite
def streams(draw, k, max_len=64):
    n = draw(st.integers(1, max_len))
    return [SpinStream(draw(st.lists(pm1, min_size=n, max_size=n)), label=lab)
            for lab in ("a", "a'", "b", "b'")[:k]]


def S(values, label="a"):
    return SpinStream(values, label=label)


class TestSpinStream:
    def test_rejects_non_spin_values(self):
        with pytest.raises(StreamError, match="index 1"):
            S([1, 0, -1])
        with pytest.raises(StreamError):
            S([1, 2])
        with pytest.raises(StreamError):
            S(["+1"])

    def test_rejects_empty(self):
        with pytest.raises(StreamError):
            S([])

    def test_is_immutable(self):
        s = S([1, -1, 1])
        with pytest.raises(ValueError):
            s.outcomes[0] = -1

    def test_angle_canonicalized(self):
        assert SpinStream([1], angle=-math.pi / 2).angle == pytest.approx(3 * math.pi / 2)
        assert SpinStream([1], angle=2 * math.pi).angle == 0.0
        assert canonical_angle(-0.0) == 0.0 and math.copysign(1, canonical_angle(-0.0)) == 1

    def test_label_aliases(self):
        assert S([1], "bp").label == "b'"
        with pytest.raises(StreamError):
            S([1], "c")


class TestCorrelation:
    def test_identical(self):
        x = S([1, -1, 1])
        c = correlation(x, x)
        assert c.value == 1 and c.exact_numerator == 3 and c.count == 3

    def test_negation(self):
        x = S([1, -1, 1])
        assert correlation(x, -x).value == -1

    def test_hand_example(self):
        c = correlation(S([1, 1, -1]), S([1, -1, -1]))
        assert c.exact_numerator == 1
        assert c.exact == Fraction(1, 3)

    def test_length_mismatch(self):
        with pytest.raises(StreamError):
            correlation(S([1, 1]), S([1]))

    def test_value_invariant(self):
        with pytest.raises(StreamError):
            CorrelationValue(5, 4)

    @given(streams(2))
    def test_symmetric_bounded_sign_flip(self, xy):
        x, y = xy
        c = correlation(x, y)
        assert c == correlation(y, x)
        assert -1 <= c.value <= 1
        assert correlation(-x, y).exact_numerator == -c.exact_numerator
        assert c.exact * c.count == c.exact_numerator


class TestIdentity3:
    def test_hand_example(self):
        v = check_identity3(S([1, 1, -1]), S([1, -1, -1], "b"), S([1, 1, 1], "b'"))
        assert (v.lhs_numerator, v.rhs_numerator, v.holds) == (0, 4, True)

    def test_all_equal_zero_slack(self):
        x = S([1, -1, -1, 1])
        v = check_identity3(x, x, x)
        assert (v.lhs_numerator, v.rhs_numerator, v.slack) == (0, 0, 0)

    def test_mismatch(self):
        with pytest.raises(StreamError):
            check_identity3(S([1]), S([1, 1]), S([1]))

    def test_uses_integers(self):
        v = check_identity3(S([1, -1]), S([1, 1]), S([-1, 1]))
        assert all(type(x) is int for x in (v.lhs_numerator, v.rhs_numerator, v.scale))
        assert isinstance(v.slack, Fraction)

    @given(streams(3))
    @settings(max_examples=300)
    def test_always_holds(self, abc):
        v = check_identity3(*abc)
        assert v.holds
        assert v.holds == (v.lhs_numerator <= v.rhs_numerator)

    def test_exhaustive_small_n(self):
        # Every triple of length-3 streams: 8**3 combinations.
        seqs = list(itertools.product((1, -1), repeat=3))
        for a, b, bp in itertools.product(seqs, repeat=3):
            assert check_identity3(S(a), S(b), S(bp)).holds


class TestIdentity4:
    def test_hand_example(self):
        v = check_identity4(S([1]), S([1], "a'"), S([1], "b"), S([-1], "b'"))
        assert (v.lhs_numerator, v.rhs_numerator, v.slack) == (2, 2, 0)

    def test_saturation(self):
        x = S([1, -1, 1, 1, -1])
        v = check_identity4(x, x, x, x)
        assert v.lhs_numerator == v.rhs_numerator == 10

    @given(streams(4))
    @settings(max_examples=300)
    def test_always_holds(self, s):
        assert check_identity4(*s).holds

    @pytest.mark.parametrize("b,bp", list(itertools.product((1, -1), repeat=2)))
    def test_pairwise_sum_lemma(self, b, bp):
        # Per-row factor behind the four-list bound.
        assert abs(b + bp) + abs(b - bp) == 2

    def test_per_row_factoring(self):
        # a(b' - b) == -a b (1 - b b'), so |a b' - a b| == 1 - b b' row by row.
        for a, b, bp in itertools.product((1, -1), repeat=3):
            assert a * bp - a * b == -a * b * (1 - b * bp)
            assert abs(a * bp - a * b) == abs(a * b) * abs(1 - b * bp) == 1 - b * bp


class TestInequalities:
    def test_perfect_triple(self):
        r = eval_inequality3(-1, -1, 1)
        assert (r.lhs, r.rhs, r.satisfied) == (0, 0, True)

    def test_violating_negative_cosine_triple(self):
        vals = negative_cosine_triple(0, math.radians(135), math.radians(270))
        assert vals == pytest.approx((math.sqrt(0.5), 0.0, math.sqrt(0.5)), abs=1e-12)
        r = eval_inequality3(*vals)
        assert not r.satisfied
        assert r.lhs == pytest.approx(0.70710678, abs=1e-8)
        assert r.rhs == pytest.approx(0.29289322, abs=1e-8)
        assert r.slack == pytest.approx(1 - math.sqrt(2), abs=1e-12)

    def test_satisfied_negative_cosine_triple(self):
        r = eval_inequality3(*negative_cosine_triple(0, math.radians(60), math.radians(120)))
        assert r.satisfied
        assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(1.5)

    def test_chsh(self):
        assert eval_inequality4(0, 0, 0, 0).satisfied
        vals = negative_cosine_quadruple(0, math.radians(90), math.radians(45), math.radians(315))
        r = eval_inequality4(*vals)
        assert r.lhs == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert not r.satisfied
        r = eval_inequality4(1, 1, 1, -1)
        assert r.lhs == 4 and not r.satisfied

    def test_epsilon_tolerance(self):
        assert eval_inequality3(0, 0.5, 0.5 + 5e-13).satisfied
        assert not eval_inequality3(0, 0.5, 0.5 + 1e-9).satisfied

    def test_range(self):
        with pytest.raises(ValueError):
            eval_inequality3(1.5, 0, 0)
        with pytest.raises(ValueError):
            eval_inequality4(0, 0, 0, -1.01)

    @given(streams(3))
    def test_empirical_triple_matches_identity(self, s):
        a, b, bp = s
        v = check_identity3(a, b, bp)
        r = eval_inequality3(correlation(a, b).value, correlation(a, bp).value, correlation(b, bp).value)
        assert r.satisfied
        assert r.slack == pytest.approx(float(v.slack), abs=1e-12)


class TestAlignedSet:
    def test_lengths_and_labels(self):
        a, b, bp = S([1, -1]), S([1, 1], "b"), S([-1, 1], "b'")
        al = AlignedSet([a, b, bp], Provenance.SIMULATED_JOINTLY)
        assert al.n == 2 and al.identity().holds
        with pytest.raises(StreamError):
            AlignedSet([a, b, S([1], "b'")], "simulated-jointly")
        with pytest.raises(StreamError):
            AlignedSet([a, b, b], "simulated-jointly")
        with pytest.raises(StreamError):
            AlignedSet([a, S([1, 1], "a'"), bp], "simulated-jointly")

    def test_mirror_triple(self):
        al = AlignedSet([S([1, -1]), S([1, 1], "a'"), S([-1, 1], "b")], "matched-from-runs")
        v = al.identity()
        assert v.holds and v.kind == "identity3"

    def test_correlation_keys(self):
        s = [S(np.ones(3, int), lab) for lab in ("b'", "a", "b", "a'")]
        al = AlignedSet(s, "cascade-retrodicted")
        assert list(al.correlations()) == ["aa'", "ab", "ab'", "a'b", "a'b'", "bb'"]

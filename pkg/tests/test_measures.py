import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from blassosep.errors import NonFiniteInput
from blassosep.measures import SparseMeasure, Spike, add, normalize, scale, tv_norm

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
pairs = st.lists(st.tuples(st.integers(-20, 20).map(lambda k: k / 4), finite), max_size=12)


def raw(ps):
    return SparseMeasure(tuple(Spike(p, a) for p, a in ps))


# -- examples ------------------------------------------------------------------

def test_tv_norm_of_empty_measure_is_zero():
    assert tv_norm(SparseMeasure()) == 0.0


def test_tv_norm_of_unit_dirac_is_one():
    assert tv_norm(SparseMeasure.from_pairs([(0.0, 1.0)])) == 1.0


def test_tv_norm_is_l1_norm_of_coefficients():
    assert tv_norm(SparseMeasure.from_pairs([(0.0, 2.0), (1.0, -3.0)])) == 5.0


def test_normalize_merges_equal_positions():
    out = normalize(raw([(1.0, 2.0), (1.0, 3.0)]))
    assert out == SparseMeasure((Spike(1.0, 5.0),))


def test_normalize_sorts_by_position():
    out = normalize(raw([(0.0, 1.0), (-1.0, 1.0)]))
    assert [s.position for s in out] == [-1.0, 0.0]


def test_normalize_drops_exact_cancellation():
    assert len(normalize(raw([(0.0, 1.0), (0.0, -1.0)]))) == 0


def test_near_duplicates_stay_distinct():
    out = normalize(raw([(1.0, 1.0), (math.nextafter(1.0, 2.0), 1.0)]))
    assert len(out) == 2


@pytest.mark.parametrize("bad", [(math.nan, 1.0), (0.0, math.inf), (-math.inf, 2.0)])
def test_non_finite_spike_rejected(bad):
    with pytest.raises(NonFiniteInput):
        Spike(*bad)
    with pytest.raises(NonFiniteInput):
        SparseMeasure.from_pairs([bad])


# -- properties ----------------------------------------------------------------

@given(pairs)
def test_tv_norm_is_sum_of_absolute_amplitudes(ps):
    m = SparseMeasure.from_pairs(ps)
    assert tv_norm(m) == pytest.approx(math.fsum(abs(s.amplitude) for s in m), abs=0)
    assert tv_norm(m) >= 0
    assert (tv_norm(m) == 0) == (len(m) == 0)


@given(pairs)
def test_normalize_is_canonical_and_idempotent(ps):
    m = normalize(raw(ps))
    assert m.is_canonical()
    assert normalize(m) == m


@given(pairs)
def test_normalize_never_increases_tv(ps):
    before = tv_norm(raw(ps))
    after = tv_norm(normalize(raw(ps)))
    assert after <= before * (1 + 1e-12) + 1e-12


@given(st.lists(st.tuples(st.integers(-50, 50).map(float), st.floats(0.01, 100)), max_size=10,
                unique_by=lambda t: t[0]))
def test_normalize_preserves_tv_without_cancellation(ps):
    assert tv_norm(normalize(raw(ps))) == pytest.approx(tv_norm(raw(ps)), rel=1e-15)


@given(pairs, st.floats(-100, 100, allow_nan=False))
def test_tv_norm_absolutely_homogeneous(ps, c):
    m = SparseMeasure.from_pairs(ps)
    assert tv_norm(scale(m, c)) == pytest.approx(abs(c) * tv_norm(m), rel=1e-12, abs=1e-300)


@given(pairs, pairs)
def test_tv_norm_triangle_inequality(p1, p2):
    a, b = SparseMeasure.from_pairs(p1), SparseMeasure.from_pairs(p2)
    assert tv_norm(add(a, b)) <= tv_norm(a) + tv_norm(b) + 1e-9


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=0, max_size=30))
def test_coefficients_on_integers_embed_into_l1(coefs):
    m = SparseMeasure.from_pairs([(float(k), c) for k, c in enumerate(coefs)])
    assert tv_norm(m) == math.fsum(abs(c) for c in coefs)


@given(pairs)
def test_operators_on_measures(ps):
    m = SparseMeasure.from_pairs(ps)
    assume(len(m) > 0)
    assert tv_norm(m + (-1.0) * m) == 0.0
    assert np.array_equal(m.positions, np.sort(m.positions))

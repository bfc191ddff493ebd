from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kwspot.model import build_a0, build_b0, count_params
from kwspot.scaling import (ScaleCandidate, SearchSpec, apply_scaling, enumerate_candidates,
                            round_half_up, scale_channels, scale_repeats)


def oracle_pairs(lo=25, hi=60, target=50, tol=3):
    """Integer oracle: alpha = a/100, beta = b/100, product * 10^6 = a * b^2 compared to thousandths."""
    return [(a, b) for b in range(lo, hi + 1) for a in range(lo, hi + 1)
            if (target - tol) * 1000 <= a * b * b <= (target + tol) * 1000]


def test_matches_integer_oracle():
    got = [(int(c.alpha * 100), int(c.beta * 100)) for c in enumerate_candidates()]
    assert got == oracle_pairs()
    assert len(got) == 77  # reported count is 75


def test_float_and_exact_agree():
    exact = {(c.alpha, c.beta) for c in enumerate_candidates()}
    floaty = {(Fraction(a, 100), Fraction(b, 100)) for b in range(25, 61) for a in range(25, 61)
              if 0.047 - 1e-12 <= (a / 100) * (b / 100) ** 2 <= 0.053 + 1e-12}
    assert exact == floaty


def test_boundary_pairs_inclusive():
    # no grid pair hits 0.047 or 0.053 exactly at step 0.01; a coarser tolerance does
    spec = SearchSpec(target="0.05", tol="0.002")
    prods = {c.product for c in enumerate_candidates(spec)}
    assert Fraction(48, 1000) in prods  # 0.30 * 0.40^2 = 0.048 sits exactly on the lower bound
    assert ScaleCandidate(Fraction(3, 10), Fraction(2, 5)).product == Fraction(48, 1000)


def test_examples():
    pairs = {(c.alpha, c.beta) for c in enumerate_candidates()}
    assert (Fraction("0.35"), Fraction("0.38")) in pairs
    assert ScaleCandidate(Fraction("0.35"), Fraction("0.38")).product == Fraction("0.05054")
    assert (Fraction("0.6"), Fraction("0.6")) not in pairs


def test_sorted_by_beta_then_alpha():
    c = enumerate_candidates()
    keys = [(x.beta, x.alpha) for x in c]
    assert keys == sorted(keys)


def test_spec_validation():
    with pytest.raises(ValueError):
        SearchSpec(range_lo="0.6", range_hi="0.25")
    with pytest.raises(ValueError):
        SearchSpec(step=0)
    with pytest.raises(ValueError):
        SearchSpec(tol="-0.1")
    assert SearchSpec(range_lo=0.25).range_lo == Fraction(1, 4)


def test_rounding():
    assert round_half_up(Fraction(5, 2)) == 3
    assert round_half_up(Fraction(3, 2)) == 2
    assert scale_channels(32, "0.5") == 16
    assert scale_channels(16, "0.25") == 8
    assert scale_channels(40, "0.5") == 24  # 20 -> 2.5 multiples, half rounds up
    assert scale_repeats(1, "0.25") == 1
    assert scale_repeats(4, "0.5") == 2
    assert scale_repeats(3, "0.5") == 2


def test_identity_scaling():
    for base in (build_a0(), build_b0()):
        assert apply_scaling(base, ScaleCandidate(Fraction(1), Fraction(1))) == base


@given(st.integers(25, 100), st.integers(25, 100), st.integers(25, 100))
def test_monotone_in_beta(b1, b2, a):
    lo, hi = sorted((b1, b2))
    base = build_b0()
    s1 = apply_scaling(base, ScaleCandidate(Fraction(a, 100), Fraction(lo, 100)))
    s2 = apply_scaling(base, ScaleCandidate(Fraction(a, 100), Fraction(hi, 100)))
    assert all(x.channels <= y.channels for x, y in zip(s1.stages, s2.stages))
    assert all(x.kernel == y.kernel and x.stride == y.stride and x.operator == y.operator
               for x, y in zip(s1.stages, base.stages))


def within_one_step(scaled, target, step=8):
    """True when dropping one scaled stage leaves every width within one rounding step of target."""
    return any(all(abs(x - y) <= step for x, y in zip(scaled[:i] + scaled[i + 1:], target))
               for i in range(len(scaled)))


def test_consistency_probe_against_a0():
    a0 = [s.channels for s in build_a0().stages]
    hits = [c for c in enumerate_candidates()
            if within_one_step([s.channels for s in apply_scaling(build_b0(), c).stages], a0)]
    assert hits
    probe = apply_scaling(build_b0(), ScaleCandidate(Fraction("0.55"), Fraction("0.30")))
    assert [s.channels for s in probe.stages] == [8, 8, 8, 16, 24, 32, 56, 96, 384]
    assert count_params(probe).total == 250670

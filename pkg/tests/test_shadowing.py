import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from linshadow.chains import validate_chain
from linshadow.core import Norm, NormKind, SeqVector
from linshadow.errors import DomainError, PseudoOrbitInvalid, UnsupportedCapability
from linshadow.operators import Diagonal, DirectSum, DoublingShiftFixedLine, Identity, PolyFunction, WeightedBackwardShift
from linshadow.shadowing import (HyperbolicSolver, RightInverseSolver, concat_chains_to_pseudo_orbit,
                                 connector_return_factory, doubling_shift_connect_chain, l1_defect,
                                 l1_nonshadowability_bound, l1_pseudo_orbit, l1_table, mixing_witness,
                                 random_pseudo_orbit, return_orbit_witness, right_inverse_connector,
                                 shadow_csv_rows, shadow_hyperbolic, shadow_right_inverse, solver_for,
                                 validate_pseudo_orbit)

from conftest import e, vectors

D = DoublingShiftFixedLine()
L1 = Norm(NormKind.ONE)


def forward_half(v, n):
    # S^n for S e_i = e_{i+1}/2, written out directly
    return SeqVector({i + n: c / 2 ** n for i, c in v.items()})


def series_shadow(points):
    z = points[0]
    for n in range(1, len(points)):
        z = z + forward_half(points[n] - D.apply(points[n - 1]), n)
    return z


def block_l1(v, cut):
    return max(sum(abs(c) for i, c in v.items() if i < cut), sum(abs(c) for i, c in v.items() if i >= cut))


def sup_error(T, z, points, cut=None):
    worst, cur = Fraction(0), z
    for n, x in enumerate(points):
        if n:
            cur = T.apply(cur)
        worst = max(worst, L1.gauge(cur - x) if cut is None else block_l1(cur - x, cut))
    return worst


def test_validate_pseudo_orbit_examples():
    orbit = D.orbit(e(3), 6)
    po = validate_pseudo_orbit(D, orbit, Fraction(1, 100))
    assert all(d == 0 for d in po.defects) and po.horizon == 6
    # non-strict: a jump of exactly delta is allowed
    validate_pseudo_orbit(D, [e(0), e(0) + e(2, Fraction(1, 8))], Fraction(1, 8))
    with pytest.raises(PseudoOrbitInvalid) as ei:
        validate_pseudo_orbit(D, [e(0), e(0), e(0) + e(2, Fraction(1, 4))], Fraction(1, 8))
    assert ei.value.index == 1


def test_chain_points_are_pseudo_orbit():
    c = validate_chain(Diagonal((), Fraction(1, 2)), [e(0), e(0, Fraction(3, 5))], Fraction(1, 5))
    validate_pseudo_orbit(Diagonal((), Fraction(1, 2)), c.points, c.epsilon)


def test_concat_examples():
    up, down = doubling_shift_connect_chain(e(1), Fraction(1, 4))
    po = concat_chains_to_pseudo_orbit([down], 3, D, tail_orbit_of=SeqVector.zero(), tail_steps=2)
    assert po.horizon == down.steps + 2
    po2 = concat_chains_to_pseudo_orbit([down, up], 5, D)
    assert po2.horizon == down.steps + 5 + up.steps
    assert max(po2.defects) < Fraction(1, 4)
    tail = concat_chains_to_pseudo_orbit([], 0, D, tail_orbit_of=e(2), tail_steps=4)
    assert tail.points == tuple(D.orbit(e(2), 4))
    with pytest.raises(DomainError):
        concat_chains_to_pseudo_orbit([up, up], 0, D)


def test_true_orbit_shadows_itself():
    po = validate_pseudo_orbit(D, D.orbit(e(0) + e(4), 10), Fraction(1, 8))
    cert = shadow_right_inverse(D, po)
    assert cert.shadow == po.points[0] and cert.max_error == 0


def test_single_jump_example():
    delta = Fraction(1, 8)
    jump = e(2, delta)
    pts = D.orbit(e(0), 3)
    pts.append(D.apply(pts[-1]) + jump)
    pts += D.orbit(pts[-1], 5)[1:]
    po = validate_pseudo_orbit(D, pts, delta)
    cert = shadow_right_inverse(D, po)
    assert cert.shadow == e(0) + forward_half(jump, 4)
    assert cert.max_error <= delta
    assert cert.max_error == sup_error(D, cert.shadow, pts)


@settings(max_examples=40)
@given(st.integers(0, 2**32), st.sampled_from([Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]),
       st.integers(1, 30))
def test_right_inverse_against_series_oracle(seed, delta, H):
    po = random_pseudo_orbit(D, delta, H, random.Random(seed))
    cert = RightInverseSolver(D).shadow(po)
    assert cert.shadow == series_shadow(po.points)
    assert cert.max_error == sup_error(D, cert.shadow, po.points)
    assert cert.max_error <= delta <= 2 * delta
    assert cert.ok


def test_modulus_and_bound():
    s = RightInverseSolver(D)
    assert s.modulus(Fraction(1, 4)) == Fraction(1, 4)
    assert s.bound(Fraction(1, 8)) == Fraction(1, 8)
    w = RightInverseSolver(WeightedBackwardShift((), 3))
    assert w.modulus(Fraction(1, 3)) == Fraction(2, 3)
    with pytest.raises(UnsupportedCapability):
        RightInverseSolver(Identity())


HYP = DirectSum(Diagonal((), Fraction(1, 2)), Diagonal((), 2), 1)


def test_hyperbolic_bounds():
    h = HyperbolicSolver(HYP)
    assert (h.c_s, h.c_u) == (Fraction(1, 2), Fraction(1, 2))
    delta = Fraction(1, 10)
    assert h._bounds(delta) == {"stable": Fraction(1, 5), "unstable": Fraction(1, 10)}
    assert h.modulus(Fraction(1, 5)) == Fraction(1, 10)


@settings(max_examples=30)
@given(st.integers(0, 2**32), st.integers(1, 25))
def test_hyperbolic_random(seed, H):
    delta = Fraction(1, 10)
    po = random_pseudo_orbit(HYP, delta, H, random.Random(seed), indices=range(3))
    cert = shadow_hyperbolic(HYP, po)
    assert cert.block_errors["stable"] <= Fraction(1, 5)
    assert cert.block_errors["unstable"] <= Fraction(1, 10)
    assert cert.max_error == sup_error(HYP, cert.shadow, po.points, cut=1)
    assert isinstance(solver_for(HYP), HyperbolicSolver)


def test_hyperbolic_true_orbit_and_single_block():
    po = validate_pseudo_orbit(HYP, HYP.orbit(e(0) + e(1), 6), Fraction(1, 10))
    assert shadow_hyperbolic(HYP, po).max_error == 0
    C = Diagonal((), Fraction(1, 2))
    rng = random.Random(3)
    po = random_pseudo_orbit(C, Fraction(1, 10), 20, rng)
    cert = shadow_hyperbolic(C, po)
    assert cert.shadow == po.points[0]
    assert cert.analytic_bound == Fraction(1, 5)
    with pytest.raises(UnsupportedCapability):
        HyperbolicSolver(Identity())


def test_connector_examples():
    up, down = doubling_shift_connect_chain(e(1), Fraction(1, 4))
    # orbit e1 -> 2e0, then a ramp with steps 2/m < 1/4
    assert down.points[1] == e(0, 2)
    assert down.steps == 1 + 9
    assert up.steps == 4
    assert up.defects[0] == Fraction(1, 8)
    z_up, z_down = doubling_shift_connect_chain(SeqVector.zero(), Fraction(1, 4))
    assert z_up.steps == z_down.steps == 1


@given(vectors(max_index=3, max_num=4))
def test_connector_fixed_line_value(t):
    _, down = doubling_shift_connect_chain(t, Fraction(1, 4))
    c = sum(v * 2 ** i for i, v in t.items())
    if c:
        assert e(0, c) in down.points


def test_mixing_witness_sequence():
    connect = right_inverse_connector(D)
    lam = Fraction(1, 10)
    times = []
    for k in range(4):
        w = mixing_witness(D, e(0), e(1), lam, k, connect)
        assert L1.dist_lt(w.z, e(0), lam)
        assert L1.dist_lt(D.power(w.z, w.hitting_time), e(1), lam)
        times.append(w.hitting_time)
    assert times == list(range(times[0], times[0] + 4))
    w0 = mixing_witness(D, SeqVector.zero(), SeqVector.zero(), lam, 5, connect)
    assert w0.z.is_zero()


def test_return_orbit_witness():
    f = connector_return_factory(D, right_inverse_connector(D))
    w = return_orbit_witness(D, e(0), Fraction(1, 4), f, 3)
    assert len(w.return_times) == 3 and all(d < Fraction(1, 4) for d in w.distances)
    x = e(0) + e(1)
    w2 = return_orbit_witness(D, x, Fraction(1, 4), f, 2)
    assert w2.return_times == (w2.loop_length, 2 * w2.loop_length)
    w0 = return_orbit_witness(D, SeqVector.zero(), Fraction(1, 4), f, 2)
    assert w0.z.is_zero() and all(d == 0 for d in w0.distances)


# -- L1[1/2, 1] ----------------------------------------------------------------

X = sympy.Symbol("x")


def test_l1_defect_oracle():
    delta = Fraction(1, 10)
    # x f_n - f_{n+1} = -delta, whose L1 norm over [1/2, 1] is delta/2
    exact = sympy.integrate(sympy.Rational(1, 10), (X, sympy.Rational(1, 2), 1))
    assert l1_defect(delta, 7) == Fraction(int(exact.p), int(exact.q)) == delta / 2
    assert l1_pseudo_orbit(delta, 2)[2] == PolyFunction((delta, delta))


@pytest.mark.parametrize("n", [1, 2, 5, 13])
def test_l1_bound_matches_norm_of_f(n):
    # for g = 0 the bound is exactly ||f_n||_1, integrated independently
    delta = Fraction(1, 10)
    f = sum(sympy.Rational(1, 10) * X ** k for k in range(n))
    exact = sympy.integrate(f, (X, sympy.Rational(1, 2), 1))
    assert l1_nonshadowability_bound(delta, n) == Fraction(int(exact.p), int(exact.q))
    assert l1_pseudo_orbit(delta, n)[n].l1_norm() == l1_nonshadowability_bound(delta, n)


def test_l1_bound_examples():
    assert l1_nonshadowability_bound(Fraction(1, 10), 1) == Fraction(1, 20)
    with pytest.raises(DomainError):
        l1_nonshadowability_bound(Fraction(1, 10), 0)
    rows = l1_table(Fraction(1, 10), 30)
    assert all(b2 > b1 for (_, b1), (_, b2) in zip(rows, rows[1:]))
    assert [b for _, b in rows] == [l1_nonshadowability_bound(Fraction(1, 10), n) for n in range(1, 31)]


def test_l1_bound_with_g_is_below_true_distance():
    # ||x^n g - f_n|| >= ||f_n|| - ||x^n g||, and the power term over-estimates ||x^n g||
    g = PolyFunction((1, 2))
    delta = Fraction(1, 10)
    for n in (1, 4, 9):
        xn_g = g
        for _ in range(n):
            xn_g = xn_g.multiply_by_x()
        assert xn_g.l1_norm() <= Fraction(2) * 2 * (1 - Fraction(1, 2 ** (n + 1))) / (n + 1)
        assert l1_nonshadowability_bound(delta, n, g) <= l1_pseudo_orbit(delta, n)[n].l1_norm() - xn_g.l1_norm()


def test_shadow_csv_rows():
    po = validate_pseudo_orbit(D, D.orbit(e(1), 2), Fraction(1, 8))
    rows = shadow_csv_rows(po, shadow_right_inverse(D, po))
    assert rows[0] == ("step", "point", "defect", "shadow_error")
    assert rows[2] == ("1", "{0:2/1}", "0/1", "0/1")

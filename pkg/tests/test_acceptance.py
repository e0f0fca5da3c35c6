"""The nine acceptance criteria, each at its stated tolerance and time budget."""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from conftest import ACCEPTANCE
from linshadow.chains import (contraction_no_return_certificate, isometry_return_chain, projection_chain,
                              validate_chain)
from linshadow.cli import execute, normalize
from linshadow.core import Norm, NormKind, SeqVector
from linshadow.errors import ChainInvalid
from linshadow.fhc import build_schedule, chain_through, construct_fhc_vector, gamma_pseudo_orbit, verify_schedule
from linshadow.operators import Diagonal, DirectSum, DoublingShiftFixedLine, Identity, PolyFunction, RationalRotation
from linshadow.shadowing import (RightInverseSolver, l1_defect, l1_table, mixing_witness, random_pseudo_orbit,
                                 right_inverse_connector)

D = DoublingShiftFixedLine()
L1 = Norm(NormKind.ONE)


@contextmanager
def criterion(n, title, budget=None):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        within = budget is None or dt < budget
        status = "PASS" if ok and within else "FAIL"
        limit = f" (budget {budget:g} s)" if budget else ""
        line = f"criterion {n}: {status}  {title}  [{dt:.2f} s{limit}]"
        ACCEPTANCE[n] = line
        print(line)
    assert within, f"criterion {n} took {dt:.2f} s, budget {budget} s"


def e(i, c=1):
    return SeqVector.basis(i, coeff=c)


def test_criterion_1_isometry_return_chain():
    with criterion(1, "isometry return chain, rotation (3/5, 4/5), n = 9", 1):
        R = RationalRotation(Fraction(3, 5), Fraction(4, 5))
        c = isometry_return_chain(R, e(0), Fraction(1, 4), NormKind.TWO)
        assert len(c.points) == 10
        assert c.points[0] == c.points[-1] == e(0)
        norm = Norm(NormKind.TWO)
        for i in range(9):
            d = R.apply(c.points[i]) - c.points[i + 1]
            assert norm.le(d, Fraction(2, 9))
            assert norm.lt(d, Fraction(1, 4))


def test_criterion_2_contraction_no_return():
    with criterion(2, "contraction no-return, 10^4 random valid chains", 30):
        cert = contraction_no_return_certificate(Diagonal((), Fraction(1, 2)), e(0), Fraction(1, 10))
        assert cert.eps == Fraction(1, 5)
        rep = cert.search(trials=10_000, seed=0, max_length=12)
        assert rep.trials == 10_000 and len(rep.rows) == 10_000
        assert rep.violations == 0
        for _, N, end, bound, ok in rep.rows:
            assert ok and end < 1 and end <= bound and N <= 12


def test_criterion_3_right_inverse_shadowing():
    with criterion(3, "right-inverse shadowing, 3 x 10^3 pseudo orbits, H = 50", 60):
        solver = RightInverseSolver(D)
        rng = random.Random(2024)
        for delta in (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)):
            for _ in range(1000):
                po = random_pseudo_orbit(D, delta, 50, rng)
                cert = solver.shadow(po)
                assert cert.max_error <= delta
                assert cert.max_error <= 2 * delta


def test_criterion_4_mixing_witness():
    with criterion(4, "mixing witnesses for k = 0..20", 30):
        connect = right_inverse_connector(D)
        lam = Fraction(1, 10)
        times = []
        for k in range(21):
            w = mixing_witness(D, e(0), e(1), lam, k, connect)
            assert L1.dist_lt(w.z, e(0), lam)
            assert L1.dist_lt(D.power(w.z, w.hitting_time), e(1), lam)
            times.append(w.hitting_time)
        assert sorted(times) == list(range(min(times), max(times) + 1))


def test_criterion_5_l1_nonshadowability():
    with criterion(5, "L1 non-shadowability, delta = 1/10, n <= 200", 10):
        delta = Fraction(1, 10)
        for n in range(200):
            assert l1_defect(delta, n) == delta / 2
        rows = l1_table(delta, 200)
        bounds = [b for _, b in rows]
        assert bounds[0] == Fraction(1, 20)
        assert all(a < b for a, b in zip(bounds, bounds[1:]))
        assert any(b > Fraction(1, 4) for b in bounds)
        with_g = [b for _, b in l1_table(delta, 200, PolyFunction((1,)))]
        assert any(b > Fraction(1, 4) for b in with_g)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(st.lists(st.integers(1, 15), min_size=1, max_size=5, unique=True))
def _random_schedule(halves):
    s = build_schedule([2 * h for h in sorted(halves)])
    assert verify_schedule(s, 3 * s.period)["ok"]


def test_criterion_6_density_schedule():
    with criterion(6, "density schedule (2, 4) plus 100 random size lists", 10):
        s = build_schedule([2, 4])
        assert s.offsets == (2, 8) and s.period == 14
        upto = 3 * s.period
        mem = {p: [n for n in range(upto + 1) if s.contains(p, n)] for p in (1, 2)}
        for p in (1, 2):
            assert min(mem[p]) >= s.size(p)
            assert s.density(p) == Fraction(1, 14)
            for j in (1, 2, 3):
                assert Fraction(sum(1 for n in mem[p] if 1 <= n <= 14 * j), 14 * j) == Fraction(1, 14)
        for p in (1, 2):
            for q in (1, 2):
                for n in mem[p]:
                    for m in mem[q]:
                        if n != m:
                            assert abs(n - m) >= s.size(p) + s.size(q)
        _random_schedule()


def test_criterion_7_fhc_construction():
    with criterion(7, "frequently hypercyclic construction, P = 2, H = 5L", 600):
        targets = [e(0), e(1)]
        cert = construct_fhc_vector(D, targets)
        s, H = cert.schedule, cert.horizon
        assert H == 5 * s.period
        for r in cert.records:
            assert r.delta == Fraction(1, 2 ** (r.p + 1))
            assert r.z_norm < r.eps                                    # (a)
            assert r.checked_b == len(s.members(r.p, H - r.R))         # (b) at every m within H
            assert r.checked_c == sum(1 for n in range(H + 1) if s.block_position(r.p, n) is None)  # (c)
        # re-derive every gamma^p and re-validate it at delta_p
        prior, min_R = D.zero(), 1
        for r in cert.records:
            rec = chain_through(r.target, r.delta, right_inverse_connector(D), D, min_R)
            assert rec.R == r.R
            g = gamma_pseudo_orbit(r.p, s, prior, rec, D, H, r.delta)
            assert g.orbit.delta == r.delta and g.orbit.horizon == H
            prior, min_R = prior + r.z, rec.R + 1
        assert prior == cert.z and L1.le(cert.z, 2)
        # visit times, recomputed by direct iteration
        orbit = D.orbit(cert.z, H)
        floor = Fraction(1, 2 * s.period)
        for r in cert.records:
            radius = Fraction(1, 2 ** (r.p + 1))
            visits = {n for n in range(1, H + 1) if L1.dist_lt(orbit[n], r.target, radius)}
            required = {m + r.R for m in s.members(r.p, H) if 1 <= m + r.R <= H}
            assert required <= visits
            assert Fraction(len(visits), H) >= floor


def test_criterion_8_projection_decomposition():
    with criterion(8, "projection onto the identity block, contraction block never returns", 10):
        T = DirectSum(Diagonal((), Fraction(1, 2)), Identity(), 1)
        eps = Fraction(1, 5)
        cert = contraction_no_return_certificate(Diagonal((), Fraction(1, 2)), e(0), Fraction(1, 10))
        assert cert.eps == eps
        rng = random.Random(8)
        projected = 0
        for _ in range(1500):
            n = rng.randint(1, 10)
            pts = [e(0) + e(1, Fraction(rng.randint(-8, 8), 4))]
            for _ in range(n):
                d = SeqVector({i: eps * Fraction(rng.randint(-15, 15), 32) for i in rng.sample(range(3), 2)})
                pts.append(T.apply(pts[-1]) + d)
            c = validate_chain(T, pts, eps)
            # the contraction component is an eps-chain of Diagonal(1/2) from e0: it never comes back
            left = validate_chain(cert.T, [T.project(p, 0) for p in pts], eps)
            bound_ok, below = cert.check(left)
            assert bound_ok and below
            # identity-block projection of a chain whose endpoints lie in that block
            ends = [T.project(c.start, 1), T.project(pts[-1], 1)]
            try:
                mixed = validate_chain(T, [ends[0]] + list(pts[1:-1]) + [ends[1]], eps)
            except ChainInvalid:
                continue
            p = projection_chain(mixed, 1, T, block=1)
            assert p.epsilon == mixed.epsilon
            assert all(b <= a for a, b in zip(mixed.defects, p.defects))
            projected += 1
        assert projected > 100


def _csv(cfg, tmp):
    assert execute(cfg, tmp) == 0
    return (tmp / "certificates.csv").read_bytes()


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "byte-identical CSV for criteria 2, 3, 7 on rerun"):
        configs = [
            normalize("chains", {"delta": "1/10", "trials": 10_000, "max_length": 12}, seed=0),
            normalize("certify", {"deltas": ["1/4", "1/8", "1/16"], "trials": 1000}, seed=2024, horizon=50),
            normalize("fhc", {"targets": ["{0:1/1}", "{1:1/1}"]}),
        ]
        for i, cfg in enumerate(configs):
            a = _csv(cfg, tmp_path / f"a{i}")
            b = _csv(cfg, tmp_path / f"b{i}")
            assert a == b and len(a) > 100

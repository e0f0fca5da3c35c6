"""Construction of a frequently hypercyclic vector from chains and shadowing.

Classes ``p`` get well separated visit schedules ``Delta_p`` (arithmetic
progressions), a symmetric chain ``0 -> x_p -> 0`` of length ``N_p = 2 R_p``
and a ramped pseudo orbit ``gamma^p`` that cancels the earlier vectors inside
its blocks.  Shadowing ``gamma^p`` gives ``z_p``; ``z = sum z_p`` then visits a
small ball around every ``x_p`` along ``Delta_p + R_p``.

Everything is checked exactly up to a finite horizon ``H``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .chains import Chain, validate_chain
from .core import NormKind, SeqVector, as_rational
from .errors import ConfigError, DomainError, GammaDefectError, PropertyViolation
from .operators import Operator
from .shadowing import PseudoOrbit, right_inverse_connector, solver_for, validate_pseudo_orbit

__all__ = [
    "DensitySchedule",
    "build_schedule",
    "verify_schedule",
    "lower_density_estimate",
    "dense_seq_generator",
    "iter_dense_sequence",
    "vector_height",
    "ChainRecord",
    "chain_through",
    "GammaOrbit",
    "gamma_pseudo_orbit",
    "ClassRecord",
    "FhcCertificate",
    "construct_fhc_vector",
    "visit_times",
    "visit_density",
]


# -- schedules ---------------------------------------------------------------

@dataclass(frozen=True)
class DensitySchedule:
    """``Delta_p = {a_p + j L : j >= 0}`` for classes ``first_class, first_class + 1, ...``."""

    sizes: tuple
    offsets: tuple
    period: int
    first_class: int = 1

    @property
    def classes(self) -> range:
        return range(self.first_class, self.first_class + len(self.sizes))

    def _i(self, p: int) -> int:
        i = p - self.first_class
        if not 0 <= i < len(self.sizes):
            raise DomainError(f"no class {p} in schedule")
        return i

    def size(self, p: int) -> int:
        return self.sizes[self._i(p)]

    def offset(self, p: int) -> int:
        return self.offsets[self._i(p)]

    def contains(self, p: int, n: int) -> bool:
        a = self.offset(p)
        return n >= a and (n - a) % self.period == 0

    def members(self, p: int, upto: int) -> list:
        return list(range(self.offset(p), upto + 1, self.period))

    def density(self, p: int) -> Fraction:
        self._i(p)
        return Fraction(1, self.period)

    def block_position(self, p: int, n: int):
        """``k`` with ``n = m + k``, ``m`` in ``Delta_p``, ``0 <= k < N_p``; else ``None``."""
        a = self.offset(p)
        if n < a:
            return None
        k = (n - a) % self.period
        return k if k < self.size(p) else None


def build_schedule(block_sizes: Sequence[int], first_class: int = 1) -> DensitySchedule:
    """Staggered progressions: ``a_1 = N_1``, ``a_{p+1} = a_p + N_p + N_{p+1}``, ``L = a_P + N_P + N_1``."""
    sizes = tuple(int(n) for n in block_sizes)
    if not sizes:
        raise ConfigError("at least one block size is required")
    if any(n <= 0 or n % 2 for n in sizes):
        raise ConfigError(f"block sizes must be positive and even: {sizes}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"block sizes must be strictly increasing: {sizes}")
    offsets = [sizes[0]]
    for prev, nxt in zip(sizes, sizes[1:]):
        offsets.append(offsets[-1] + prev + nxt)
    period = offsets[-1] + sizes[-1] + sizes[0]
    sched = DensitySchedule(sizes, tuple(offsets), period, first_class)
    rep = verify_schedule(sched, 2 * period)
    if not rep["ok"]:
        raise AssertionError(f"schedule invariants failed: {rep}")
    return sched


def verify_schedule(s: DensitySchedule, upto: int) -> dict:
    """Exhaustive check of minimum, separation and density over ``[0, upto]``."""
    members = {p: s.members(p, upto) for p in s.classes}
    min_ok = all(s.offset(p) >= s.size(p) for p in s.classes)
    sep_ok = True
    worst_slack = None
    for p, q in itertools.combinations_with_replacement(s.classes, 2):
        need = s.size(p) + s.size(q)
        for n in members[p]:
            for m in members[q]:
                if n == m:
                    if p != q:
                        sep_ok = False
                    continue
                slack = abs(n - m) - need
                worst_slack = slack if worst_slack is None else min(worst_slack, slack)
                if slack < 0:
                    sep_ok = False
    # every a_p < L, so each full period [1 + (j-1)L, jL] holds exactly one member
    dens_ok = all(
        len([n for n in members[p] if 1 <= n <= j * s.period]) == j
        for p in s.classes for j in range(1, upto // s.period + 1))
    return {"ok": min_ok and sep_ok and dens_ok, "min_ok": min_ok, "separation_ok": sep_ok,
            "density_ok": dens_ok, "worst_slack": worst_slack, "upto": upto}


def lower_density_estimate(member: Callable[[int], bool], N_max: int) -> Fraction:
    """``min #(A cap [1, N]) / N`` over ``N`` in ``[N_max/2, N_max]``."""
    if N_max < 1:
        raise DomainError("N_max must be positive")
    lo = max(1, N_max // 2)
    count = 0
    best = None
    for N in range(1, N_max + 1):
        if member(N):
            count += 1
        if N >= lo:
            r = Fraction(count, N)
            best = r if best is None else min(best, r)
    return best


# -- dense sequence ----------------------------------------------------------

def vector_height(v: SeqVector) -> int:
    """``max(max index + 1, max |numerator|, max log2 denominator)``; needs dyadic entries."""
    h = 0
    for i, c in v.items():
        e = c.denominator.bit_length() - 1
        if c.denominator != 1 << e:
            raise DomainError(f"non-dyadic entry {c}")
        h = max(h, i + 1, abs(c.numerator), e)
    return h


def _stage_values(h: int) -> list:
    vals = {Fraction(a, 2 ** e) for e in range(h + 1) for a in range(-h, h + 1)}
    vals = {v for v in vals if abs(v.numerator) <= h}
    return sorted(vals, key=lambda v: (abs(v), v))


def iter_dense_sequence() -> Iterator[SeqVector]:
    """Finitely supported dyadic vectors on ``N`` by increasing height; each appears once."""
    yield SeqVector.zero()
    h = 1
    while True:
        vals = _stage_values(h)
        for combo in itertools.product(vals, repeat=h):
            v = SeqVector(dict(enumerate(combo)))
            if vector_height(v) == h:
                yield v
        h += 1


_DENSE_CACHE: list = []
_DENSE_ITER = None


def dense_seq_generator(p: int) -> SeqVector:
    """The ``p``-th element of :func:`iter_dense_sequence` (``p = 0`` is the origin)."""
    global _DENSE_ITER
    if p < 0:
        raise DomainError("index must be >= 0")
    if _DENSE_ITER is None:
        _DENSE_ITER = iter_dense_sequence()
    while len(_DENSE_CACHE) <= p:
        _DENSE_CACHE.append(next(_DENSE_ITER))
    return _DENSE_CACHE[p]


# -- chains through the targets ----------------------------------------------

@dataclass(frozen=True)
class ChainRecord:
    target: SeqVector
    points: tuple   # x^0 = 0, ..., x^R = target, ..., x^{N-1} = 0
    R: int
    chain_eps: Fraction

    @property
    def N(self) -> int:
        return 2 * self.R


def chain_through(x_p: SeqVector, delta_p, connect: Callable, T: Operator | None = None,
                  min_R: int = 1, kind=NormKind.ONE) -> ChainRecord:
    """Zero-padded ``delta_p/2`` chain ``0 -> x_p -> 0`` of even length ``2R`` hitting ``x_p`` at ``R``.

    ``R`` is the least admissible value that fits both halves, exceeds
    ``min_R - 1`` and satisfies ``1/R < delta_p/4``.
    """
    delta_p = as_rational(delta_p)
    half = delta_p / 2
    up, down = connect(x_p, half)
    if up.end != x_p or down.start != x_p or not up.start.is_zero() or not down.end.is_zero():
        raise DomainError("connector must return chains 0 -> x_p and x_p -> 0")
    ramp_R = int(4 / delta_p) + 1          # least R with 1/R < delta_p/4
    R = max(up.steps, down.steps + 1, ramp_R, min_R)
    zero = up.start
    first = [zero] * (R - up.steps) + list(up.points)
    second = list(down.points[1:]) + [zero] * (R - 1 - down.steps)
    pts = tuple(first + second)
    if T is not None:
        validate_chain(T, pts, half, kind)
    return ChainRecord(x_p, pts, R, half)


# -- ramped pseudo orbits ------------------------------------------------------

@dataclass
class GammaOrbit:
    orbit: PseudoOrbit
    case_max: dict      # case -> largest defect seen (upper bound)
    soma_max: Fraction  # largest ||T^n (z_0 + ... + z_{p-1})|| seen inside blocks


def _ramp(k: int, R: int, N: int) -> Fraction:
    return Fraction(k, R) if k <= R else Fraction(N - k, R)


def gamma_pseudo_orbit(p: int, schedule: DensitySchedule, prior_sum: SeqVector | None,
                       record: ChainRecord, T: Operator, horizon: int, delta_p,
                       kind=NormKind.ONE) -> GammaOrbit:
    """``gamma_n = x^p_k - ramp(k) T^n(z_0 + ... + z_{p-1})`` on blocks, 0 elsewhere.

    Every step is checked against the case analysis: zero defect off the
    blocks and at block entry, ``< delta_p`` inside, ``< delta_p/2`` at the
    block exit, and ``||T^n(sum of prior z)|| < 2`` throughout the blocks.
    """
    delta_p = as_rational(delta_p)
    norm = T.norm(kind)
    R, N = record.R, record.N
    if schedule.size(p) != N:
        raise DomainError(f"schedule block size {schedule.size(p)} != chain length {N}")
    zero = T.zero()
    Z = prior_sum if prior_sum is not None else zero
    pos = [schedule.block_position(p, n) for n in range(horizon + 2)]
    zorb = []
    cur = Z
    for n in range(horizon + 2):
        if n:
            cur = T.apply(cur)
        zorb.append(cur)
    gamma = []
    soma_max = Fraction(0)
    for n in range(horizon + 1):
        k = pos[n]
        if k is None:
            gamma.append(zero)
            continue
        if not norm.lt(zorb[n], 2):
            raise GammaDefectError("soma", n, f"||T^n(prior)|| = {norm.upper(zorb[n])} is not < 2")
        soma_max = max(soma_max, norm.upper(zorb[n]))
        gamma.append(record.points[k] - zorb[n] * _ramp(k, R, N))

    case_max: dict = {}
    for n in range(horizon):
        k, k1 = pos[n], pos[n + 1]
        D = T.apply(gamma[n]) - gamma[n + 1]
        if k is None:
            case = 1 if k1 == 0 else 0
            if k1 not in (None, 0):
                raise GammaDefectError(case, n, "block entered away from its start")
            if not D.is_zero():
                raise GammaDefectError(case, n, "defect should vanish")
        elif k == N - 1:
            case = 5
            if not norm.lt(zorb[n + 1], 2):
                raise GammaDefectError("soma", n + 1, "prior orbit too large at block exit")
            if not norm.lt(D, delta_p / 2):
                raise GammaDefectError(5, n, f"defect {norm.upper(D)} is not < {delta_p / 2}")
        else:
            case = 2 if k < R else 3 if k == R else 4
            if not norm.lt(D, delta_p):
                raise GammaDefectError(case, n, f"defect {norm.upper(D)} is not < {delta_p}")
        case_max[case] = max(case_max.get(case, Fraction(0)), norm.upper(D))
    orbit = validate_pseudo_orbit(T, gamma, delta_p, kind)
    return GammaOrbit(orbit, case_max, soma_max)


# -- the construction ------------------------------------------------------------

@dataclass
class ClassRecord:
    p: int
    target: SeqVector
    eps: Fraction
    delta: Fraction
    R: int
    N: int
    z: SeqVector
    z_norm: Fraction
    worst_b: Fraction       # max ||sum_{q<=p} T^{m+R} z_q - x_p|| over checked m
    worst_c: Fraction       # max ||T^n z_p|| off the blocks
    checked_b: int
    checked_c: int
    case_max: dict
    soma_max: Fraction
    visit_radius: Fraction = Fraction(0)
    visits_required: int = 0
    visits_found: int = 0
    visit_density: Fraction = Fraction(0)


@dataclass
class FhcCertificate:
    z: SeqVector
    z_norm: Fraction
    schedule: DensitySchedule
    horizon: int
    records: list = field(default_factory=list)
    kind: NormKind = NormKind.ONE


def _orbit(T: Operator, v: SeqVector, H: int) -> list:
    return T.orbit(v, H)


def construct_fhc_vector(T: Operator, targets: Sequence[SeqVector], first_class: int = 1,
                         horizon: int | None = None, solver=None, connect: Callable | None = None,
                         kind=NormKind.ONE, visit_radius: Callable[[int], Fraction] | None = None,
                         progress: Callable[[str], None] | None = None) -> FhcCertificate:
    """Build ``z = sum_p z_p`` and check properties (a), (b), (c) and the visits up to ``H``.

    Class ``p`` uses ``eps_p = 2^-p`` and ``delta_p = modulus(eps_p / 2)``, which
    leaves room for visits to ``B(x_p, 2^-(p+1))``.  ``H`` defaults to five
    schedule periods.
    """
    kind = NormKind.parse(kind)
    solver = solver or solver_for(T, kind)
    connect = connect or right_inverse_connector(T, kind)
    visit_radius = visit_radius or (lambda p: Fraction(1, 2 ** (p + 1)))
    say = progress or (lambda msg: None)
    norm = T.norm(kind)
    classes = list(range(first_class, first_class + len(targets)))

    chains = []
    min_R = 1
    for p, x in zip(classes, targets):
        eps = Fraction(1, 2 ** p)
        delta = solver.modulus(eps / 2)
        rec = chain_through(x, delta, connect, T, min_R, kind)
        chains.append((p, x, eps, delta, rec))
        min_R = rec.R + 1
    schedule = build_schedule([rec.N for *_, rec in chains], first_class)
    H = horizon if horizon is not None else 5 * schedule.period
    say(f"schedule sizes={schedule.sizes} offsets={schedule.offsets} L={schedule.period} H={H}")

    prior = T.zero()
    prior_orbit = _orbit(T, prior, H)
    records = []
    for p, x, eps, delta, rec in chains:
        g = gamma_pseudo_orbit(p, schedule, prior, rec, T, H, delta, kind)
        cert = solver.shadow(g.orbit)
        zp = cert.shadow
        if not norm.lt(zp, eps):
            raise PropertyViolation(p, "a", 0, f"||z_p|| = {norm.upper(zp)}")
        zorb = _orbit(T, zp, H)
        worst_c, checked_c = Fraction(0), 0
        for n in range(H + 1):
            if schedule.block_position(p, n) is None:
                checked_c += 1
                if not norm.lt(zorb[n], eps):
                    raise PropertyViolation(p, "c", n, f"||T^n z_p|| = {norm.upper(zorb[n])}")
                worst_c = max(worst_c, norm.upper(zorb[n]))
        prior = prior + zp
        prior_orbit = [a + b for a, b in zip(prior_orbit, zorb)]
        worst_b, checked_b = Fraction(0), 0
        for m in schedule.members(p, H - rec.R):
            d = prior_orbit[m + rec.R] - x
            checked_b += 1
            if not norm.lt(d, eps):
                raise PropertyViolation(p, "b", m, f"distance {norm.upper(d)}")
            worst_b = max(worst_b, norm.upper(d))
        records.append(ClassRecord(p, x, eps, delta, rec.R, rec.N, zp, norm.upper(zp), worst_b, worst_c,
                                   checked_b, checked_c, g.case_max, g.soma_max))
        say(f"class {p}: R={rec.R} ||z_p||<={float(norm.upper(zp)):.3g} worst(b)={float(worst_b):.3g}")

    z = prior
    if not norm.le(z, 2):
        raise PropertyViolation(-1, "sum", 0, "||z|| > 2")
    for r in records:
        radius = visit_radius(r.p)
        times = set(visit_times(T, z, r.target, radius, H, kind, orbit=prior_orbit))
        required = [m + r.R for m in schedule.members(r.p, H - r.R) if m + r.R >= 1]
        missing = [t for t in required if t not in times]
        if missing:
            raise PropertyViolation(r.p, "visit", missing[0], f"T^n z not within {radius} of x_p")
        r.visit_radius = radius
        r.visits_required = len(required)
        r.visits_found = len(times)
        r.visit_density = Fraction(len(times), H)
    return FhcCertificate(z, norm.upper(z), schedule, H, records, kind)


def visit_times(T: Operator, z: SeqVector, center: SeqVector, radius, N: int, kind=NormKind.ONE,
                orbit: list | None = None) -> list:
    """``n`` in ``[1, N]`` with ``||T^n z - center|| < radius`` (exact hits when ``radius = 0``)."""
    radius = as_rational(radius)
    norm = T.norm(kind)
    out = []
    cur = z
    for n in range(1, N + 1):
        cur = orbit[n] if orbit is not None else T.apply(cur)
        hit = cur == center if radius == 0 else norm.dist_lt(cur, center, radius)
        if hit:
            out.append(n)
    return out


def visit_density(T: Operator, z: SeqVector, center: SeqVector, radius, N: int, kind=NormKind.ONE) -> Fraction:
    """``#{n in [1, N] : T^n z in B(center, radius)} / N``."""
    return Fraction(len(visit_times(T, z, center, radius, N, kind)), N)

"""Positive pseudo orbits and the solvers that shadow them.

Two shadowing constructions are provided:

* :class:`RightInverseSolver` for operators with a right inverse ``S`` of norm
  ``s < 1``: ``z = x_0 + sum_n S^n (x_n - T x_{n-1})``.
* :class:`HyperbolicSolver` for a direct sum of a proper contraction and a
  proper dilation: the stable part follows the orbit of ``x_0`` and the
  unstable part is pulled back from the end of the horizon.

Pseudo orbits are finite (horizon ``H``); every certificate records ``H``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .chains import Chain, splice, validate_chain
from .core import Norm, NormKind, SeqVector, as_rational, format_rational
from .errors import CertificateFailure, DomainError, PseudoOrbitInvalid, UnsupportedCapability
from .operators import DirectSum, DoublingShiftFixedLine, Operator, PolyFunction

__all__ = [
    "PseudoOrbit",
    "ShadowCertificate",
    "validate_pseudo_orbit",
    "concat_chains_to_pseudo_orbit",
    "random_pseudo_orbit",
    "RightInverseSolver",
    "HyperbolicSolver",
    "solver_for",
    "shadow_right_inverse",
    "shadow_hyperbolic",
    "right_inverse_connector",
    "doubling_shift_connect_chain",
    "connector_return_factory",
    "MixingWitness",
    "mixing_witness",
    "ReturnWitness",
    "return_orbit_witness",
    "l1_pseudo_orbit",
    "l1_defect",
    "l1_nonshadowability_bound",
    "l1_table",
]


@dataclass(frozen=True)
class PseudoOrbit:
    points: tuple
    delta: Fraction
    defects: tuple
    kind: NormKind = NormKind.ONE
    jumps: tuple = ()  # x_{n+1} - T x_n, kept so solvers need not recompute them

    @property
    def horizon(self) -> int:
        return len(self.points) - 1


def validate_pseudo_orbit(T: Operator, points: Sequence[SeqVector], delta, kind=NormKind.ONE) -> PseudoOrbit:
    """Certify ``||T x_n - x_{n+1}|| <= delta`` for ``0 <= n < H``."""
    delta = as_rational(delta)
    kind = NormKind.parse(kind)
    points = tuple(points)
    if not points:
        raise DomainError("a pseudo orbit needs at least one point")
    if delta <= 0:
        raise DomainError("delta must be positive")
    norm = T.norm(kind)
    defects, jumps = [], []
    for n in range(len(points) - 1):
        d = points[n + 1] - T.apply(points[n])
        if not norm.le(d, delta):
            raise PseudoOrbitInvalid(n, norm.upper(d), delta)
        defects.append(norm.upper(d))
        jumps.append(d)
    return PseudoOrbit(points, delta, tuple(defects), kind, tuple(jumps))


def concat_chains_to_pseudo_orbit(chains: Sequence[Chain], zero_pad: int, T: Operator,
                                  tail_orbit_of: SeqVector | None = None, tail_steps: int = 0,
                                  delta=None, kind=NormKind.ONE) -> PseudoOrbit:
    """Splice chains, inserting ``zero_pad`` zeros at every junction through the origin.

    Consecutive chains must meet at 0 (the next chain's leading 0 is dropped)
    or, when ``zero_pad == 0``, at any common point.  If ``tail_orbit_of`` is
    given the sequence continues with ``tail_steps`` points of its true orbit.
    """
    pts: list = []
    for c in chains:
        if not pts:
            pts.extend(c.points)
            continue
        if pts[-1] != c.start:
            raise DomainError("incompatible junction: chains must meet end to start")
        if zero_pad and not c.start.is_zero():
            raise DomainError("zero padding needs junctions at the origin")
        pts.extend([c.start] * zero_pad)
        pts.extend(c.points[1:])
    if tail_orbit_of is not None:
        if pts and pts[-1] != tail_orbit_of:
            raise DomainError("tail orbit must start at the last chain point")
        orbit = T.orbit(tail_orbit_of, tail_steps)
        pts.extend(orbit if not pts else orbit[1:])
    if not pts:
        raise DomainError("nothing to concatenate")
    if delta is None:
        delta = max((c.epsilon for c in chains), default=Fraction(1))
    kind = chains[0].kind if chains else kind
    return validate_pseudo_orbit(T, pts, delta, kind)


def random_pseudo_orbit(T: Operator, delta, horizon: int, rng: random.Random,
                        indices: Sequence[int] = range(5), grid: int = 64, kind=NormKind.ONE) -> PseudoOrbit:
    """A random ``delta``-pseudo orbit on a rational grid.

    Each jump has l1 norm at most ``delta`` (so at most ``delta`` in every
    norm); a third of the jumps sit exactly on the boundary ``delta e_i``.
    """
    delta = as_rational(delta)
    indices = list(indices)
    dom = T.domain
    x = SeqVector({i: Fraction(rng.randint(-grid, grid), grid) for i in indices}, dom)
    pts = [x]
    for _ in range(horizon):
        if rng.randrange(3) == 0:
            d = SeqVector.basis(rng.choice(indices), dom, delta * rng.choice((-1, 1)))
        else:
            m = rng.randint(1, len(indices))
            d = SeqVector({i: delta * Fraction(rng.randint(-grid, grid), grid * m)
                           for i in rng.sample(indices, m)}, dom)
        pts.append(T.apply(pts[-1]) + d)
    return validate_pseudo_orbit(T, pts, delta, kind)


@dataclass
class ShadowCertificate:
    shadow: SeqVector
    horizon: int
    max_error: Fraction          # max over n <= H of an upper bound for ||T^n z - x_n||
    analytic_bound: Fraction
    promised: Fraction           # the solver guarantees every error is < promised
    errors: tuple = ()
    block_errors: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.max_error <= self.analytic_bound and self.max_error < self.promised


def _shadow_errors(T: Operator, z: SeqVector, po: PseudoOrbit, bound: Fraction, promised: Fraction):
    """Iterate ``T`` on ``z`` and compare with the pseudo orbit exactly."""
    norm = T.norm(po.kind)
    lb, lp = norm.lift(bound), norm.lift(promised)
    errs = []
    cur = z
    for n, x in enumerate(po.points):
        if n:
            cur = T.apply(cur)
        g = norm.gauge(cur - x)
        if g > lb or g >= lp:
            raise CertificateFailure(f"shadow error at n={n} is {norm.upper(cur - x)}, bound {bound}")
        errs.append(norm.upper_from_gauge(g))
    return tuple(errs)


class RightInverseSolver:
    """Shadowing through a contractive right inverse."""

    def __init__(self, T: Operator, kind=NormKind.ONE):
        kind = NormKind.parse(kind)
        ri = T.right_inverse(kind)
        if ri is None:
            raise UnsupportedCapability(f"{type(T).__name__} declares no contractive right inverse")
        self.T, self.S, self.s, self.kind = T, ri.op, ri.factor, kind

    def modulus(self, eps) -> Fraction:
        """``delta(eps) = eps (1 - s)/s``: every ``delta``-pseudo orbit is shadowed within ``eps``."""
        return as_rational(eps) * (1 - self.s) / self.s

    def bound(self, delta) -> Fraction:
        return as_rational(delta) * self.s / (1 - self.s)

    def shadow_point(self, points: Sequence[SeqVector], jumps: Sequence[SeqVector] = ()) -> SeqVector:
        T, S = self.T, self.S
        if not jumps:
            jumps = [points[n] - T.apply(points[n - 1]) for n in range(1, len(points))]
        acc = T.zero()
        # Horner form of sum_{n=1..H} S^n d_n
        for d in reversed(jumps):
            acc = S.apply(acc + d)
        return points[0] + acc

    def shadow(self, po: PseudoOrbit) -> ShadowCertificate:
        bound = self.bound(po.delta)
        z = self.shadow_point(po.points, po.jumps)
        # the truncated series errs by strictly less than the full geometric sum
        errs = _shadow_errors(self.T, z, po, bound, bound)
        return ShadowCertificate(z, po.horizon, max(errs), bound, bound, errs)


class HyperbolicSolver:
    """Shadowing for ``contraction (+) dilation``, or either block alone."""

    def __init__(self, T: Operator, kind=NormKind.ONE):
        kind = NormKind.parse(kind)
        self.T, self.kind = T, kind
        if isinstance(T, DirectSum):
            roles = [self._role(T.left), self._role(T.right)]
            if sorted(r[0] for r in roles) != ["stable", "unstable"]:
                raise UnsupportedCapability("direct sum blocks are not a certified contraction and dilation")
            self.stable_block = 0 if roles[0][0] == "stable" else 1
            self.c_s = roles[self.stable_block][1]
            self.c_u = roles[1 - self.stable_block][1]
            self.unstable_inv = (T.left if self.stable_block == 1 else T.right).inverse()
        else:
            role, c = self._role(T)
            self.stable_block = None
            self.c_s = c if role == "stable" else None
            self.c_u = c if role == "unstable" else None
            self.unstable_inv = T.inverse() if role == "unstable" else None

    def _role(self, B: Operator):
        # a zero factor is replaced by 1/2 so the geometric error bounds stay strict
        c = B.norm_bound(self.kind)
        if c < 1:
            return "stable", c or Fraction(1, 2)
        inv = B.inverse()
        if inv is not None and inv.norm_bound(self.kind) < 1:
            return "unstable", inv.norm_bound(self.kind) or Fraction(1, 2)
        raise UnsupportedCapability(f"{type(B).__name__} is neither a proper contraction nor a proper dilation")

    def _bounds(self, delta):
        out = {}
        if self.c_s is not None:
            out["stable"] = delta / (1 - self.c_s)
        if self.c_u is not None:
            out["unstable"] = delta * self.c_u / (1 - self.c_u)
        return out

    def modulus(self, eps) -> Fraction:
        eps = as_rational(eps)
        cands = []
        if self.c_s is not None:
            cands.append(eps * (1 - self.c_s))
        if self.c_u is not None:
            cands.append(eps * (1 - self.c_u) / self.c_u)
        return min(cands)

    def bound(self, delta) -> Fraction:
        return max(self._bounds(as_rational(delta)).values())

    def _parts(self, v):
        T = self.T
        if self.stable_block is None:
            return (v, None) if self.c_s is not None else (None, v)
        m, n = T.split2(v)
        return (m, n) if self.stable_block == 0 else (n, m)

    def _join(self, stable, unstable):
        T = self.T
        if self.stable_block is None:
            return stable if stable is not None else unstable
        return T.join(stable, unstable) if self.stable_block == 0 else T.join(unstable, stable)

    def shadow(self, po: PseudoOrbit) -> ShadowCertificate:
        H = po.horizon
        stable, _ = self._parts(po.points[0])
        _, unstable = self._parts(po.points[-1])
        if unstable is not None:
            unstable = self.unstable_inv.power(unstable, H)
        z = self._join(stable, unstable)
        bounds = self._bounds(po.delta)
        bound = max(bounds.values())
        errs = _shadow_errors(self.T, z, po, bound, bound)
        block_errors = self._block_errors(z, po)
        for name, e in block_errors.items():
            if e > bounds[name]:
                raise CertificateFailure(f"{name} block error {e} exceeds {bounds[name]}")
        return ShadowCertificate(z, H, max(errs), bound, bound, errs, block_errors)

    def _block_errors(self, z, po):
        norm = Norm(self.kind)
        worst = {"stable": Fraction(0), "unstable": Fraction(0)} if self.stable_block is not None else (
            {"stable": Fraction(0)} if self.c_s is not None else {"unstable": Fraction(0)})
        cur = z
        for n, x in enumerate(po.points):
            if n:
                cur = self.T.apply(cur)
            s, u = self._parts(cur - x)
            if s is not None:
                worst["stable"] = max(worst["stable"], norm.upper(s))
            if u is not None:
                worst["unstable"] = max(worst["unstable"], norm.upper(u))
        return worst


def solver_for(T: Operator, kind=NormKind.ONE):
    """The first applicable solver: right inverse, then hyperbolic splitting."""
    try:
        return RightInverseSolver(T, kind)
    except UnsupportedCapability:
        return HyperbolicSolver(T, kind)


def shadow_right_inverse(T: Operator, po: PseudoOrbit) -> ShadowCertificate:
    return RightInverseSolver(T, po.kind).shadow(po)


def shadow_hyperbolic(T: Operator, po: PseudoOrbit) -> ShadowCertificate:
    return HyperbolicSolver(T, po.kind).shadow(po)


# -- connecting chains -------------------------------------------------------

Connector = Callable[[SeqVector, Fraction], tuple]


def right_inverse_connector(T: Operator, kind=NormKind.ONE, max_orbit: int = 10_000) -> Connector:
    """Chains ``0 -> t`` and ``t -> 0`` for operators with a contractive right inverse.

    Up: one jump to ``S^j t`` with ``||S^j t|| < delta`` followed by the exact
    orbit ``S^{j-1} t, ..., t``.  Down: the exact orbit of ``t`` until it dies
    or reaches a fixed vector ``v``, then a straight ramp from ``v`` to 0 in
    steps of norm ``< delta``.
    """
    kind = NormKind.parse(kind)
    ri = T.right_inverse(kind)
    if ri is None:
        raise UnsupportedCapability(f"{type(T).__name__} declares no contractive right inverse")
    S = ri.op
    norm = T.norm(kind)

    def connect(target: SeqVector, delta) -> tuple:
        delta = as_rational(delta)
        zero = T.zero()
        if target.is_zero():
            return validate_chain(T, [zero, zero], delta, kind), validate_chain(T, [zero, zero], delta, kind)
        ladder = [target]
        while not norm.lt(ladder[-1], delta):
            ladder.append(S.apply(ladder[-1]))
        up = validate_chain(T, [zero] + ladder[::-1], delta, kind)

        pts = [target]
        while True:
            nxt = T.apply(pts[-1])
            if nxt.is_zero():
                pts.append(nxt)
                break
            if nxt == pts[-1]:
                v = nxt
                m = norm.min_steps(v, delta)
                pts.extend(v * (1 - Fraction(i, m)) for i in range(1, m + 1))
                break
            pts.append(nxt)
            if len(pts) > max_orbit:
                raise UnsupportedCapability("orbit neither dies nor reaches a fixed vector")
        down = validate_chain(T, pts, delta, kind)
        return up, down

    return connect


def doubling_shift_connect_chain(target: SeqVector, delta, kind=NormKind.ONE) -> tuple:
    """``(0 -> target, target -> 0)`` chains for the doubling shift.

    The descent follows the exact orbit onto the fixed line, where it carries
    ``c e_0`` with ``c = sum_i target_i 2**i``, then ramps ``c e_0`` down to 0.
    """
    return right_inverse_connector(DoublingShiftFixedLine(), kind)(target, delta)


def connector_return_factory(T: Operator, connect: Connector) -> Callable:
    """Return chains ``x -> 0 -> x`` assembled from a connector."""
    def factory(x: SeqVector, eps) -> Chain:
        up, down = connect(x, eps)
        return splice(T, [down, up], as_rational(eps))
    return factory


# -- witnesses ---------------------------------------------------------------

@dataclass
class MixingWitness:
    z: SeqVector
    hitting_time: int
    k: int
    down_steps: int
    up_steps: int
    certificate: ShadowCertificate


def mixing_witness(T: Operator, x: SeqVector, y: SeqVector, lam, k: int, connect: Connector,
                   solver=None, kind=NormKind.ONE, tail_steps: int = 2) -> MixingWitness:
    """``z`` in ``B(x, lam)`` with ``T^{n+m+k} z`` in ``B(y, lam)``.

    Shadows ``x -> 0``, ``k`` zeros, ``0 -> y`` and the orbit of ``y`` with
    ``eps = lam/2``.
    """
    lam = as_rational(lam)
    kind = NormKind.parse(kind)
    solver = solver or solver_for(T, kind)
    eps = lam / 2
    delta = solver.modulus(eps)
    _, down = connect(x, delta)
    up, _ = connect(y, delta)
    po = concat_chains_to_pseudo_orbit([down, up], k, T, tail_orbit_of=y, tail_steps=tail_steps, delta=delta)
    cert = solver.shadow(po)
    if cert.promised > eps:
        raise CertificateFailure("solver modulus does not deliver eps = lam/2")
    z = cert.shadow
    t = down.steps + up.steps + k
    norm = T.norm(kind)
    if not norm.dist_lt(z, x, lam):
        raise CertificateFailure("witness is not in U")
    if not norm.dist_lt(T.power(z, t), y, lam):
        raise CertificateFailure(f"T^{t} z is not in V")
    return MixingWitness(z, t, k, down.steps, up.steps, cert)


@dataclass
class ReturnWitness:
    z: SeqVector
    loop_length: int
    return_times: tuple
    eps: Fraction
    distances: tuple  # upper bounds for ||T^t z - x|| at t = 0 and every return time


def return_orbit_witness(T: Operator, x: SeqVector, eps, factory: Callable, repeats: int,
                         solver=None, kind=NormKind.ONE) -> ReturnWitness:
    """Shadow the loop ``x -> ... -> x`` repeated ``repeats`` times.

    The orbit of the shadow ``z`` starts in ``B(x, eps)`` and is back in it at
    every multiple of the loop length, so ``x`` is non-wandering.
    """
    eps = as_rational(eps)
    kind = NormKind.parse(kind)
    solver = solver or solver_for(T, kind)
    delta = solver.modulus(eps)
    loop = factory(x, delta)
    if loop.start != x or loop.end != x:
        raise DomainError("factory must return a chain from x to x")
    po = concat_chains_to_pseudo_orbit([loop] * repeats, 0, T, delta=delta, kind=kind)
    cert = solver.shadow(po)
    L = loop.steps
    norm = T.norm(kind)
    orbit = T.orbit(cert.shadow, L * repeats)
    dists = []
    for j in range(repeats + 1):
        d = orbit[j * L] - x
        if not norm.lt(d, eps):
            raise CertificateFailure(f"no return at t={j * L}")
        dists.append(norm.upper(d))
    return ReturnWitness(cert.shadow, L, tuple(j * L for j in range(1, repeats + 1)), eps, tuple(dists))


# -- L1[1/2, 1] multiplication operator -------------------------------------

def l1_pseudo_orbit(delta, n: int) -> list:
    """``f_0, ..., f_n`` with ``f_j = delta (x^{j-1} + ... + 1)`` (``f_0 = 0``)."""
    delta = as_rational(delta)
    return [PolyFunction((delta,) * j) for j in range(n + 1)]


def l1_defect(delta, n: int) -> Fraction:
    """Exact ``||x f_n - f_{n+1}||_1``."""
    f = l1_pseudo_orbit(delta, n + 1)
    return (f[n].multiply_by_x() - f[n + 1]).l1_norm()


def _harmonic_dyadic(n: int) -> Fraction:
    return sum((Fraction(1, k) * (1 - Fraction(1, 2 ** k)) for k in range(1, n + 1)), Fraction(0))


def _power_term(n: int, g: PolyFunction) -> Fraction:
    """Upper bound ``max|c| (deg+1) (1 - 2^{-(n+1)})/(n+1)`` for ``||x^n g||_1``."""
    if not g.coefficients:
        return Fraction(0)
    return max(abs(c) for c in g.coefficients) * (g.degree + 1) * (1 - Fraction(1, 2 ** (n + 1))) / (n + 1)


def l1_nonshadowability_bound(delta, n: int, g: PolyFunction | None = None) -> Fraction:
    """Lower bound for ``||x^n g - f_n||_1``; it diverges with ``n`` for every ``g``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    g = g or PolyFunction()
    return as_rational(delta) * _harmonic_dyadic(n) - _power_term(n, g)


def l1_table(delta, n_max: int, g: PolyFunction | None = None) -> list:
    """Rows ``(n, lower_bound)`` for ``n = 1..n_max``, accumulated incrementally."""
    delta = as_rational(delta)
    g = g or PolyFunction()
    rows, acc = [], Fraction(0)
    for n in range(1, n_max + 1):
        acc += Fraction(1, n) * (1 - Fraction(1, 2 ** n))
        rows.append((n, delta * acc - _power_term(n, g)))
    return rows


def shadow_csv_rows(po: PseudoOrbit, cert: ShadowCertificate) -> list:
    rows = [("step", "point", "defect", "shadow_error")]
    for n, p in enumerate(po.points):
        d = "" if n == 0 else format_rational(po.defects[n - 1])
        rows.append((str(n), p.to_text(), d, format_rational(cert.errors[n])))
    return rows

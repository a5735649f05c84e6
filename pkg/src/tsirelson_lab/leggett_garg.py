"""Temporal correlations, three-time distributions and the two assessments.

Every quantity beyond single-time averages needs products of Heisenberg sign
operators Q(t_i) Q(t_j) ..., whose matrix elements involve sums over all
intermediate levels.  Those sums are evaluated on an internal cutoff M with a
Toeplitz/FFT matrix-vector product (O(M log M)), for a sequence of cutoffs
M0 * 2^k, and extrapolated in 1/M.  The truncation error of a product block
is a series in powers of M^-1/2 (the slowest, M^-1/2, appears when an outer
sign operator acts on a product with a nonzero high-level diagonal), so a
Richardson ladder removes the leading powers and the doubling test is made
on the extrapolated values.

All distributions are then assembled from one table of moments, so that the
sum rules and the method identities hold to rounding error by construction.
"""
import itertools
import math
import os
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .errors import NotConverged
from .hilbert import origin_arrays, sign_matrix
from .tsirelson import DEFAULT_SCHEDULE, heisenberg_phase

DEFAULT_TOL = 1e-8
DEFAULT_MAX_CUTOFF = 2 ** 19
# powers of 1/M removed, in order, from the truncated product blocks
RICHARDSON_POWERS = (0.5, 1.0, 1.5, 2.0)
OUTCOMES = list(itertools.product((1, -1), repeat=3))
KINDS = ("quasi", "projective", "weak_first", "weak_second")
VERDICT_GUARD = 1e-6


def _workers():
    value = os.environ.get("TSIRELSON_LAB_THREADS")
    return int(value) if value else None


def default_internal_cutoff(cutoff):
    return 4 * cutoff + 40


class _SignKernel:
    """Q(t) truncated to levels 0..M, applied to column blocks by FFT."""

    def __init__(self, M):
        self.M = M
        a, b = origin_arrays(max(M, 1))
        self.a = a[: M + 1, None]
        self.b = b[: M + 1, None]
        d = np.arange(-M, M + 1)
        h = np.zeros(2 * M + 1)
        h[d != 0] = 1.0 / d[d != 0]
        self.length = sfft.next_fast_len(3 * M + 2)
        self.hf = sfft.fft(h[::-1], self.length)[:, None]
        self.levels = np.arange(M + 1)[:, None]

    def _cauchy(self, g):
        # S(g)_n = sum_{m != n} g_m / (m - n)
        f = sfft.fft(g, self.length, axis=0, workers=_workers())
        full = sfft.ifft(f * self.hf, axis=0, workers=_workers())
        return full[self.M : 2 * self.M + 1]

    def apply(self, v, t):
        phase = np.exp(-1j * t * self.levels)
        w = phase * v
        k = w.shape[1]
        s = self._cauchy(np.concatenate([self.b * w, self.a * w], axis=1))
        return np.conj(phase) * (self.a * s[:, :k] - self.b * s[:, k:])


@lru_cache(maxsize=4)
def _kernel(M):
    return _SignKernel(M)


def _raw_blocks(cutoff, times, words, M, chunk=8):
    kern = _kernel(M)
    out = {w: np.empty((cutoff + 1, cutoff + 1), dtype=complex) for w in words}
    for start in range(0, cutoff + 1, chunk):
        cols = np.arange(start, min(start + chunk, cutoff + 1))
        e = np.zeros((M + 1, cols.size), dtype=complex)
        e[cols, np.arange(cols.size)] = 1.0
        memo = {(): e}

        def chain(suffix):
            if suffix not in memo:
                memo[suffix] = kern.apply(chain(suffix[1:]), times[suffix[0]])
            return memo[suffix]

        for w in words:
            out[w][:, cols] = chain(w)[: cutoff + 1]
    return out


def residue_period(times, max_denominator=64):
    """lcm(2, q) where every time difference is a multiple of 2pi/q.

    Incommensurate times fall back to 2; extrapolation may then fail to
    converge and NotConverged is raised.
    """
    q = 1
    for ti in times:
        for tj in times:
            x = abs(ti - tj) / (2 * math.pi)
            frac = Fraction(x).limit_denominator(max_denominator)
            if abs(float(frac) - x) > 1e-9:
                return 2
            q = math.lcm(q, frac.denominator)
    return math.lcm(2, q)


@dataclass(frozen=True)
class ProductBlocks:
    blocks: dict
    internal_cutoff: int
    error_estimate: float


@lru_cache(maxsize=32)
def product_blocks(cutoff, times, words, internal_cutoff=None, tol=DEFAULT_TOL, max_cutoff=DEFAULT_MAX_CUTOFF):
    """Blocks <n|Q(t_w0) Q(t_w1) ...|k> for n, k <= cutoff.

    ``words`` is a tuple of index tuples into ``times``.  With ``tol=None``
    the products are evaluated once at ``internal_cutoff`` with no
    extrapolation.
    """
    m0 = internal_cutoff or default_internal_cutoff(cutoff)
    m0 = max(m0, cutoff + 1)
    if tol is None:
        return ProductBlocks(_raw_blocks(cutoff, times, words, m0), m0, float("nan"))
    # the truncation error oscillates with M through parity and e^{iM(ti-tj)};
    # stepping M through multiples of the combined period keeps it smooth
    period = residue_period(times)
    m0 = -(-m0 // period) * period
    table = [[] for _ in range(len(RICHARDSON_POWERS) + 1)]
    M = m0
    while True:
        if M > max_cutoff:
            raise NotConverged(f"product blocks not converged to {tol:g} below internal cutoff {max_cutoff}")
        table[0].append(_raw_blocks(cutoff, times, words, M))
        for level, p in enumerate(RICHARDSON_POWERS):
            prev = table[level]
            if len(prev) >= 2:
                r = 2.0 ** p
                table[level + 1].append({w: (r * prev[-1][w] - prev[-2][w]) / (r - 1) for w in words})
        last = table[-1]
        if len(last) >= 2:
            err = max(np.max(np.abs(last[-1][w] - last[-2][w])) for w in words)
            if err < tol:
                return ProductBlocks(last[-1], M, float(err))
        M *= 2


SEQUENTIAL_WORDS = (
    (1, 0), (2, 0), (2, 1),
    (0, 1, 0), (0, 2, 0), (1, 2, 1),
    (2, 1, 0), (0, 2, 1),
    (0, 1, 2, 1), (0, 1, 2, 0), (0, 1, 2, 1, 0),
)


@dataclass(frozen=True)
class Moments:
    """Moments of the sign outcomes.

    ``q2_1`` is <Q2> after a projective measurement at t1, ``q3_12`` after
    measurements at t1 and t2, ``c13_2`` the t1/t3 correlator with a
    projective measurement at t2 in between, and so on.
    """

    q1: float
    q2: float
    q3: float
    c12: float
    c13: float
    c23: float
    q2_1: float
    q3_1: float
    q3_2: float
    q3_12: float
    c13_2: float
    c23_1: float
    d_proj: float
    d_quasi: float

    @property
    def tsirelson(self):
        return self.q1 + self.q2 + self.q3


def _herm(m):
    # <X> real part as the expectation of a Hermitian matrix
    return 0.5 * (m + m.conj().T)


@lru_cache(maxsize=16)
def moment_operators(cutoff, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL):
    """Moments as Hermitian matrices on levels 0..cutoff (fields of Moments)."""
    blocks = product_blocks(cutoff, schedule.times, SEQUENTIAL_WORDS, internal_cutoff, tol).blocks
    q = sign_matrix(cutoff)
    single = [q * heisenberg_phase(cutoff, t) for t in schedule.times]
    b = {w: _herm(m) for w, m in blocks.items()}
    return Moments(
        q1=single[0], q2=single[1], q3=single[2],
        c12=b[(1, 0)], c13=b[(2, 0)], c23=b[(2, 1)],
        q2_1=0.5 * (single[1] + b[(0, 1, 0)]),
        q3_1=0.5 * (single[2] + b[(0, 2, 0)]),
        q3_2=0.5 * (single[2] + b[(1, 2, 1)]),
        q3_12=0.25 * (single[2] + b[(0, 2, 0)] + b[(1, 2, 1)] + b[(0, 1, 2, 1, 0)]),
        c13_2=0.5 * (b[(2, 0)] + b[(0, 1, 2, 1)]),
        c23_1=0.5 * (b[(2, 1)] + b[(0, 1, 2, 0)]),
        d_proj=0.5 * (b[(2, 1, 0)] + b[(0, 2, 1)]),
        d_quasi=b[(2, 1, 0)],
    )


def sequential_moments(state, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL, cutoff=None):
    """All moments for one state.  ``cutoff`` pads the state so cached
    operators for a larger space can be reused."""
    c = state.padded(state.cutoff if cutoff is None else cutoff)
    ops = moment_operators(c.size - 1, schedule, internal_cutoff, tol)
    return Moments(**{f.name: float(np.vdot(c, getattr(ops, f.name) @ c).real) for f in fields(Moments)})


def asymmetry_operator(cutoff, schedule=DEFAULT_SCHEDULE, kind="projective", internal_cutoff=None, tol=DEFAULT_TOL):
    """Gamma with c^dag Gamma c = p(+,+,+) - p(-,-,-) for the given kind.

    Only opposite-parity level pairs contribute, since every moment entering
    the difference has an odd number of sign operators.
    """
    ops = moment_operators(cutoff, schedule, internal_cutoff, tol)
    a1, a2, a3, _, _, _, a123 = _moment_pattern(ops, kind)
    return 0.25 * (a1 + a2 + a3 + a123)


def _moment_pattern(m, kind):
    # coefficients of s1, s2, s3, s1s2, s1s3, s2s3, s1s2s3
    if kind == "quasi":
        return (m.q1, m.q2, m.q3, m.c12, m.c13, m.c23, m.d_quasi)
    if kind == "projective":
        return (m.q1, m.q2_1, m.q3_12, m.c12, m.c13_2, m.c23_1, m.d_proj)
    if kind == "weak_first":
        return (m.q1, m.q2, m.q3_2, m.c12, m.c13_2, m.c23, m.d_proj)
    if kind == "weak_second":
        return (m.q1, m.q2_1, m.q3_1, m.c12, m.c13, m.c23_1, m.d_proj)
    raise ValueError(f"unknown distribution kind {kind!r}")


def outcome_key(outcome):
    return "".join("+" if s > 0 else "-" for s in outcome)


@dataclass(frozen=True)
class OutcomeDistribution:
    kind: str
    values: dict

    @property
    def delta(self):
        """p(+,+,+) - p(-,-,-)."""
        return self.values[(1, 1, 1)] - self.values[(-1, -1, -1)]

    def reported(self):
        """Values for output; projective roundoff negatives are clamped."""
        out = {}
        for k, v in self.values.items():
            if self.kind == "projective" and -1e-12 <= v < 0:
                v = 0.0
            out[outcome_key(k)] = v
        return out

    def marginal(self, drop):
        """Two-time marginal summing out measurement ``drop`` (0, 1 or 2)."""
        out = {}
        for k, v in self.values.items():
            key = tuple(s for i, s in enumerate(k) if i != drop)
            out[key] = out.get(key, 0.0) + v
        return out


def distribution_from_moments(m, kind):
    a1, a2, a3, a12, a13, a23, a123 = _moment_pattern(m, kind)
    values = {}
    for s1, s2, s3 in OUTCOMES:
        values[(s1, s2, s3)] = 0.125 * (
            1 + s1 * a1 + s2 * a2 + s3 * a3 + s1 * s2 * a12 + s1 * s3 * a13 + s2 * s3 * a23 + s1 * s2 * s3 * a123
        )
    return OutcomeDistribution(kind, values)


def outcome_distribution(state, schedule=DEFAULT_SCHEDULE, kind="projective", internal_cutoff=None, tol=DEFAULT_TOL):
    """Three-time sign distribution of the requested kind.

    quasi: Re Tr(P3 P2 P1 rho); projective: Tr(P3 P2 P1 rho P1 P2);
    weak_first: measurement at t1 enters as 1/2 {P1, rho};
    weak_second: measurement at t2 enters as 1/2 {P2, P1 rho P1}.
    """
    m = sequential_moments(state, schedule, internal_cutoff, tol)
    return distribution_from_moments(m, kind)


def correlator(state, ti, tj, internal_cutoff=None, tol=DEFAULT_TOL):
    """Symmetrized correlator 1/2 <{Q(ti), Q(tj)}>."""
    c = state.coefficients
    b = product_blocks(state.cutoff, (float(ti), float(tj)), ((0, 1),), internal_cutoff, tol).blocks[(0, 1)]
    return float(np.vdot(c, b @ c).real)


def two_time_distribution(state, pair, kind="projective", internal_cutoff=None, tol=DEFAULT_TOL):
    """Four values p(si, sj) for sign measurements at the two times in ``pair``."""
    ti, tj = (float(x) for x in pair)
    if not ti < tj:
        raise ValueError("two-time distribution needs ti < tj")
    c = state.coefficients
    n = state.cutoff
    blocks = product_blocks(n, (ti, tj), ((0, 1), (0, 1, 0)), internal_cutoff, tol).blocks
    q = sign_matrix(n)
    qi = float(np.vdot(c, (q * heisenberg_phase(n, ti)) @ c).real)
    qj = float(np.vdot(c, (q * heisenberg_phase(n, tj)) @ c).real)
    cij = float(np.vdot(c, blocks[(0, 1)] @ c).real)
    if kind == "projective":
        qj = 0.5 * (qj + float(np.vdot(c, blocks[(0, 1, 0)] @ c).real))
    elif kind != "quasi":
        raise ValueError(f"unknown two-time kind {kind!r}")
    return {(si, sj): 0.25 * (1 + si * qi + sj * qj + si * sj * cij) for si in (1, -1) for sj in (1, -1)}


def _pair_plus(qi, qj, cij):
    return 0.25 * (1 + qi + qj + cij)


def quasi_pair_sum(m):
    """Sum over the three pairs of the two-time quasi-probabilities q_ij(+,+)."""
    return _pair_plus(m.q1, m.q2, m.c12) + _pair_plus(m.q2, m.q3, m.c23) + _pair_plus(m.q1, m.q3, m.c13)


@dataclass(frozen=True)
class CorrelatorSet:
    c12: float
    c23: float
    c13: float
    d: float


@dataclass(frozen=True)
class LG3Set:
    l1: float
    l2: float
    l3: float
    l4: float

    def as_tuple(self):
        return (self.l1, self.l2, self.l3, self.l4)


def lg3_from_moments(m):
    return LG3Set(
        0.25 * (1 + m.c12 + m.c23 + m.c13),
        0.25 * (1 - m.c12 - m.c23 + m.c13),
        0.25 * (1 - m.c12 + m.c23 - m.c13),
        0.25 * (1 + m.c12 - m.c23 - m.c13),
    )


def lg3_set(state, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL):
    return lg3_from_moments(sequential_moments(state, schedule, internal_cutoff, tol))


def triple_correlator(state, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL):
    """The s1 s2 s3 coefficient of the projective three-time distribution."""
    return sequential_moments(state, schedule, internal_cutoff, tol).d_proj


@dataclass(frozen=True)
class MethodReport:
    tsirelson_rescaled: float
    positive_term: float
    up_violation_term: float
    interference: float
    verdict: str
    threshold: float

    @property
    def residual(self):
        return self.tsirelson_rescaled - (self.positive_term + self.up_violation_term + self.interference)

    def to_dict(self):
        return asdict(self)


def _violation(a):
    """Distance of |<A>| beyond the classical bound, rescaled by 1/2."""
    return 0.5 * (abs(a) - 1.0)


def _verdict(up_size, a):
    threshold = _violation(a)
    if threshold <= 0:
        return "none", threshold
    if up_size < threshold - VERDICT_GUARD:
        return "quantum_interference_required", threshold
    return "UP_sufficient", threshold


def method1_from_moments(m):
    a = m.tsirelson
    p12 = _pair_plus(m.q1, m.q2_1, m.c12)
    p23 = _pair_plus(m.q2, m.q3_2, m.c23)
    p13 = _pair_plus(m.q1, m.q3_1, m.c13)
    l1 = lg3_from_moments(m).l1
    interference = 0.25 * ((m.q2 - m.q2_1) + (m.q3 - m.q3_2) + (m.q3 - m.q3_1))
    verdict, threshold = _verdict(l1, a)
    return MethodReport(0.5 * (1 + a), p12 + p23 + p13, -l1, interference, verdict, threshold)


def method2_from_moments(m, kind):
    a = m.tsirelson
    a1, a2, a3, _, _, _, d = _moment_pattern(m, kind)
    two_delta = 0.5 * (a1 + a2 + a3 + d)
    interference = 0.5 * (m.q2 - a2) + 0.5 * (m.q3 - a3)
    verdict, threshold = _verdict(abs(two_delta), a)
    return MethodReport(0.5 * (1 + a), 0.5 * (1 - d), two_delta, interference, verdict, threshold)


def method1_report(state, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL):
    """1/2(1+<A>) = sum p_ij(+,+) - L1 + I with projective two-time p_ij."""
    return method1_from_moments(sequential_moments(state, schedule, internal_cutoff, tol))


def method2_report(state, schedule=DEFAULT_SCHEDULE, kind="projective", internal_cutoff=None, tol=DEFAULT_TOL):
    """1/2(1+<A>) = 1/2(1-D) + 2 Delta p + I for a three-time distribution."""
    return method2_from_moments(sequential_moments(state, schedule, internal_cutoff, tol), kind)


def lg_report(state, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL):
    """Everything above for one state, as a JSON-ready dict."""
    m = sequential_moments(state, schedule, internal_cutoff, tol)
    dists = {k: distribution_from_moments(m, k) for k in KINDS}
    return {
        "state": state.to_dict(),
        "schedule": list(schedule.times),
        "expect_A": m.tsirelson,
        "single_time": {"q1": m.q1, "q2": m.q2, "q3": m.q3},
        "correlators": {"c12": m.c12, "c23": m.c23, "c13": m.c13, "d": m.d_proj},
        "lg3": asdict(lg3_from_moments(m)),
        "distributions": {k: d.reported() for k, d in dists.items()},
        "method1": method1_from_moments(m).to_dict(),
        "method2": {k: method2_from_moments(m, k).to_dict() for k in KINDS},
    }

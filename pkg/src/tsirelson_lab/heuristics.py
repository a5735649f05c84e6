"""Dwell time, crossing number and probability current at the origin."""
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import NotDiagonal, QuadratureNotConverged
from .hilbert import EnergyOperator, heaviside_matrix, hermite_functions, origin_arrays
from .tsirelson import DEFAULT_SCHEDULE, expect_tsirelson

INTERVALS = {"full_period": 2 * math.pi, "third_period": 2 * math.pi / 3}


def _phase_integrals(cutoff, start, length):
    """int_start^{start+length} e^{i(n-k)t} dt for all level pairs."""
    n = np.arange(cutoff + 1)
    d = (n[:, None] - n[None, :]).astype(float)
    out = np.full(d.shape, float(length), dtype=complex)
    off = d != 0
    out[off] = (np.exp(1j * d[off] * (start + length)) - np.exp(1j * d[off] * start)) / (1j * d[off])
    return out


def dwell_operator(cutoff, start, length):
    """(1/2pi) times the time integral of theta(x(t)) over the interval."""
    f = heaviside_matrix(cutoff)
    m = f * _phase_integrals(cutoff, start, length) / (2 * math.pi)
    return EnergyOperator(cutoff, 0.5 * (m + m.conj().T))


@dataclass(frozen=True)
class DwellReport:
    interval: tuple
    expectation: float
    is_diagonal: bool


def dwell_expectation(state, start, length):
    if not 0 < length <= 2 * math.pi + 1e-15:
        raise ValueError("interval length must lie in (0, 2pi]")
    op = dwell_operator(state.cutoff, start, length)
    c = state.coefficients
    support = np.flatnonzero(np.abs(c) > 0)
    sub = op.entries[np.ix_(support, support)]
    off = sub - np.diag(np.diag(sub))
    diagonal = bool(np.max(np.abs(off), initial=0.0) <= 1e-12)
    return DwellReport((float(start), float(length)), float(np.vdot(c, op.entries @ c).real), diagonal)


def _half_line_integral(n, weight):
    L = math.sqrt(2 * n + 1) + 10.0
    f = lambda p: weight(p) * hermite_functions(n, np.array([p]))[n, 0]
    val, err = integrate.quad(f, 0.0, L, epsabs=1e-13, epsrel=1e-12, limit=400)
    if err > 1e-8:
        raise QuadratureNotConverged(f"half-line integral for level {n}: error {err:.2e}")
    return val


def crossing_density(n):
    """<n| {sign p, {p, delta(x)}} |n>.

    Even levels only see the symmetric part 2 psi(0) (|p| psi)(0); odd levels
    only the antisymmetric part 2 (sign(p) psi)(0)^* (p psi)(0).  The momentum
    operators act through momentum-space integrals of psi_n itself, since the
    momentum wavefunction is (-i)^n psi_n(p).
    """
    if n > 40:
        raise ValueError("crossing elements are supported for levels up to 40")
    psi0, dpsi0 = origin_arrays(max(n, 1))
    norm = 1.0 / math.sqrt(2 * math.pi)
    if n % 2 == 0:
        abs_p_psi = norm * (-1) ** (n // 2) * 2 * _half_line_integral(n, lambda p: p)
        return 2 * psi0[n] * abs_p_psi
    sign_psi = norm * (-1) ** ((n - 1) // 2) * 2 * _half_line_integral(n, lambda p: 1.0)
    return 2 * sign_psi * dpsi0[n]


def crossing_diagonal(n, interval="full_period"):
    """<n|N_c|n> over a full or a third of a period."""
    return INTERVALS[interval] / 4.0 * crossing_density(n)


def symmetric_crossing_term(n, length=2 * math.pi):
    """Contribution of (1/4) int {|p|, delta(x)} dt; nonzero for even n only."""
    if n % 2:
        return 0.0
    return length / 4.0 * crossing_density(n)


@dataclass(frozen=True)
class CrossingReport:
    interval: float
    expectation: float
    spread: float
    per_level: list

    def to_dict(self):
        return {"interval": self.interval, "expectation": self.expectation, "spread": self.spread, "per_level": self.per_level}


def crossing_report(state, interval="full_period"):
    c = state.coefficients
    support = np.flatnonzero(np.abs(c) > 1e-14)
    if support.size and support.max() > 40:
        raise ValueError("crossing report supports levels up to 40")
    if interval == "third_period" and np.unique(support % 3).size > 1:
        raise NotDiagonal("over a third of a period the crossing operator is diagonal only within one n mod 3 class")
    diag = np.array([crossing_diagonal(int(n), interval) for n in range(state.cutoff + 1)])
    w = np.abs(c) ** 2
    mean = float(w @ diag)
    var = max(float(w @ diag ** 2) - mean ** 2, 0.0)
    return CrossingReport(INTERVALS[interval], mean, math.sqrt(var), diag.tolist())


def _current_factors(state):
    psi0, dpsi0 = origin_arrays(max(state.cutoff, 1))
    n = np.arange(state.cutoff + 1)
    c = state.coefficients
    return n, np.conj(c) * psi0[n], c * dpsi0[n]


def current_at_origin(state, t):
    """J(0, t) = Im psi(0,t)^* dpsi/dx(0,t), vectorized over t."""
    n, u, v = _current_factors(state)
    t = np.asarray(t, dtype=float)
    ph = np.exp(1j * np.multiply.outer(t, n))
    return np.imag((ph @ u) * (np.conj(ph) @ v))


@dataclass(frozen=True)
class CurrentTrace:
    times: np.ndarray
    values: np.ndarray

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "J"])
            for t, j in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(j))])


def current_trace(state, samples=721):
    t = np.linspace(0.0, 2 * math.pi, samples)
    return CurrentTrace(t, current_at_origin(state, t))


@dataclass(frozen=True)
class CurrentConsistency:
    expect_A: float
    tau: float
    residual: float
    tau_h0: float | None
    residual_h0: float | None
    max_current: float


def _best_time(g, lo, hi, step):
    t = np.arange(lo, hi + step / 2, step)
    vals = g(t)
    k = int(np.argmin(np.abs(vals)))
    best_t, best = float(t[k]), abs(float(vals[k]))
    if best == 0.0:
        return best_t, 0.0
    # refine with a root if the sign changes next to the best point, else a local minimum
    for a, b in ((k - 1, k), (k, k + 1)):
        if 0 <= a and b < t.size and vals[a] * vals[b] < 0:
            root = optimize.brentq(lambda x: float(g(np.array([x]))[0]), t[a], t[b], xtol=1e-14)
            return float(root), abs(float(g(np.array([root]))[0]))
    lo_k, hi_k = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]
    res = optimize.minimize_scalar(lambda x: abs(float(g(np.array([x]))[0])), bounds=(lo_k, hi_k), method="bounded",
                                   options={"xatol": 1e-12})
    if res.fun < best:
        return float(res.x), float(res.fun)
    return best_t, best


def current_consistency(state, schedule=DEFAULT_SCHEDULE, step=1e-4):
    """Search for tau with 2pi J(0,tau) = <A>, and (3pi/2) J(tau) = <A> on H0."""
    a = expect_tsirelson(state, schedule=schedule)
    general = lambda t: 2 * math.pi * current_at_origin(state, t) - a
    tau, res = _best_time(general, 0.0, 2 * math.pi, step)
    tau0 = res0 = None
    support = np.flatnonzero(np.abs(state.coefficients) > 1e-14)
    if np.all(support % 3 == 0):
        h0 = lambda t: 1.5 * math.pi * current_at_origin(state, t) - a
        tau0, res0 = _best_time(h0, 0.0, 2 * math.pi / 3, step)
    grid = np.arange(0.0, 2 * math.pi, step)
    jmax = float(np.max(np.abs(current_at_origin(state, grid))))
    return CurrentConsistency(a, tau, res, tau0, res0, jmax)


def energy_time(state):
    """hbar / <E> with E = n + 1/2 in units hbar = omega = 1."""
    n = np.arange(state.cutoff + 1)
    return 1.0 / float(np.abs(state.coefficients) ** 2 @ (n + 0.5))

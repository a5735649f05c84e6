"""Tsirelson operator, its expectation values and spectral structure."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .hilbert import EnergyOperator, FockVector, sign_matrix


@dataclass(frozen=True)
class MeasurementSchedule:
    times: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        if len(t) != 3:
            raise ValueError("a schedule has exactly three times")
        if not (t[0] < t[1] < t[2]):
            raise ValueError("schedule times must be strictly increasing")
        if abs((t[1] - t[0]) - (t[2] - t[1])) > 1e-12:
            raise ValueError("schedule times must be equally spaced")
        object.__setattr__(self, "times", t)

    @property
    def tau(self):
        return self.times[1] - self.times[0]

    @classmethod
    def parse(cls, text):
        return cls(tuple(float(eval_time(p)) for p in text.split(",")))


def eval_time(token):
    """Parse a time such as ``2.0944``, ``pi/3`` or ``4*pi/3``."""
    token = token.strip().lower().replace("pi", "(%r)" % math.pi)
    allowed = set("0123456789.+-*/() e")
    if not set(token) <= allowed:
        raise ValueError(f"cannot parse time {token!r}")
    return float(eval(token, {"__builtins__": {}}, {}))


DEFAULT_SCHEDULE = MeasurementSchedule((0.0, 2 * math.pi / 3, 4 * math.pi / 3))
SCA_SCHEDULE = MeasurementSchedule((0.0, math.pi / 3, 2 * math.pi / 3))


def heisenberg_phase(cutoff, t):
    """Matrix of e^{i(n-k)t}, the Heisenberg-picture phase for Q(t)."""
    n = np.arange(cutoff + 1)
    return np.exp(1j * t * (n[:, None] - n[None, :]))


def heisenberg_sign(cutoff, t):
    return EnergyOperator(cutoff, sign_matrix(cutoff) * heisenberg_phase(cutoff, t))


def build_tsirelson(cutoff, schedule=DEFAULT_SCHEDULE):
    q = sign_matrix(cutoff)
    phase = sum(heisenberg_phase(cutoff, t) for t in schedule.times)
    # sums of roots of unity that cancel analytically leave ~1e-16 residue
    phase[np.abs(phase) < 1e-12] = 0.0
    return EnergyOperator(cutoff, q * phase)


def single_time_average(state, t):
    c = state.coefficients
    q = sign_matrix(state.cutoff) * heisenberg_phase(state.cutoff, t)
    return float(np.vdot(c, q @ c).real)


def expect_tsirelson(state, variant="standard", schedule=None):
    """<A> for the standard schedule or the single-crossing form.

    The single-crossing form is <Q(t1)> - <Q(t2)> + <Q(t3)> over half a
    period, by default (0, pi/3, 2pi/3).
    """
    if variant == "standard":
        schedule = schedule or DEFAULT_SCHEDULE
        signs = (1, 1, 1)
    elif variant == "sca":
        schedule = schedule or SCA_SCHEDULE
        signs = (1, -1, 1)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return sum(s * single_time_average(state, t) for s, t in zip(signs, schedule.times))


def _phase_fixed(v):
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


@dataclass
class SpectrumReport:
    cutoff: int
    eigenvalues: np.ndarray
    eigenvectors: list
    max_violation: float
    max_state: FockVector
    operator: EnergyOperator = field(repr=False)

    def to_dict(self):
        return {
            "cutoff": self.cutoff,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "max_violation": float(self.max_violation),
            "max_state": self.max_state.to_dict(),
            "eigenvectors": [v.to_dict() for v in self.eigenvectors],
        }


def spectrum(cutoff, schedule=DEFAULT_SCHEDULE, operator=None):
    """Full eigendecomposition of A (or of a supplied operator)."""
    op = operator if operator is not None else build_tsirelson(cutoff, schedule)
    w, v = np.linalg.eigh(op.entries)
    vecs = [FockVector(_phase_fixed(v[:, j])) for j in range(v.shape[1])]
    return SpectrumReport(op.cutoff, w, vecs, float(w[-1]), vecs[-1], op)


@dataclass
class ConfinementReport:
    leakage: list
    degenerate: list
    commutator_norm: float

    @property
    def max_leakage(self):
        vals = [x for x in self.leakage if x is not None]
        return max(vals, default=0.0)


def subspace_weights(coefficients):
    p = np.abs(np.asarray(coefficients)) ** 2
    n = np.arange(p.size)
    return np.array([p[n % 3 == k].sum() for k in range(3)])


def subspace_confinement(report, degeneracy_tol=1e-8):
    """Weight of each eigenvector outside its dominant n mod 3 subspace.

    Eigenvectors of degenerate eigenvalues are flagged and skipped since any
    rotation within the eigenspace is an equally valid eigenvector.
    """
    w = report.eigenvalues
    gaps = np.diff(w)
    degenerate = np.zeros(w.size, dtype=bool)
    degenerate[:-1] |= gaps < degeneracy_tol
    degenerate[1:] |= gaps < degeneracy_tol
    leakage = []
    for vec, flag in zip(report.eigenvectors, degenerate):
        leakage.append(None if flag else float(1.0 - subspace_weights(vec.coefficients).max()))
    n = np.arange(report.cutoff + 1)
    u = np.diag(np.exp(-2j * np.pi * n / 3))
    twirl = report.operator.entries / 3.0
    comm = float(np.linalg.norm(twirl @ u - u @ twirl, 2))
    return ConfinementReport(leakage, list(degenerate), comm)


@dataclass(frozen=True)
class ScanPoint:
    a0: float
    a3: float
    a6: float
    expect_A: float
    classification: str


def classify(value):
    if value > 1.0:
        return "upper"
    if value < -1.0:
        return "lower"
    return "none"


def _triplet_operator(schedule):
    a = build_tsirelson(6, schedule).entries
    idx = [0, 3, 6]
    return a[np.ix_(idx, idx)]


def expect_real_triplet(a0, a3, a6, schedule=DEFAULT_SCHEDULE):
    v = np.array([a0, a3, a6], dtype=float)
    v = v / np.linalg.norm(v)
    return float(np.real(v @ _triplet_operator(schedule) @ v))


def scan_real_triplet(grid, schedule=DEFAULT_SCHEDULE):
    """<A> over the real unit sphere a0|0> + a3|3> + a6|6>.

    Polar angle takes ``grid`` uniform steps on [0, pi] and azimuth
    ``2*grid`` uniform steps on [0, 2pi).
    """
    if grid < 2:
        raise ValueError("grid needs at least 2 points per axis")
    theta = np.linspace(0.0, np.pi, grid)
    phi = np.linspace(0.0, 2 * np.pi, 2 * grid, endpoint=False)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    pts = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    m = _triplet_operator(schedule)
    vals = np.einsum("pi,ij,pj->p", pts, m, pts).real
    return [ScanPoint(float(p[0]), float(p[1]), float(p[2]), float(v), classify(v)) for p, v in zip(pts, vals)]


def adjacency_export(operator, tol=1e-12):
    """Edges (n, k, |A_nk|) for n < k with a nonzero entry."""
    m = operator.entries
    n, k = np.nonzero(np.triu(np.abs(m) > tol, k=1))
    return [(int(i), int(j), float(abs(m[i, j]))) for i, j in zip(n, k)]


def graph_components(edges, cutoff):
    """Connected components (as sorted level lists) of the adjacency graph."""
    size = cutoff + 1
    if edges:
        i, j, _ = zip(*edges)
        g = csr_matrix((np.ones(len(i)), (i, j)), shape=(size, size))
    else:
        g = csr_matrix((size, size))
    count, labels = connected_components(g, directed=False)
    return [sorted(np.flatnonzero(labels == c).tolist()) for c in range(count)]

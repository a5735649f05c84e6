"""Wigner-function route to the Tsirelson quantity."""
import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmall
from .hilbert import hermite_functions
from .tsirelson import DEFAULT_SCHEDULE


@dataclass(frozen=True)
class PhaseGrid:
    """Cell-centred grid on [x_min, x_max] x [p_min, p_max]."""

    x_min: float = -10.0
    x_max: float = 10.0
    p_min: float = -10.0
    p_max: float = 10.0
    nx: int = 512
    np: int = 512

    def __post_init__(self):
        if abs(self.x_min + self.x_max) > 1e-12 or abs(self.p_min + self.p_max) > 1e-12:
            raise ValueError("grid bounds must be symmetric about the origin")
        if self.nx < 64 or self.np < 64:
            raise ValueError("grid needs at least 64 points per axis")

    @classmethod
    def square(cls, half_width=10.0, points=512):
        return cls(-half_width, half_width, -half_width, half_width, points, points)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def dp(self):
        return (self.p_max - self.p_min) / self.np

    def axes(self):
        x = self.x_min + (np.arange(self.nx) + 0.5) * self.dx
        p = self.p_min + (np.arange(self.np) + 0.5) * self.dp
        return x, p


@dataclass(frozen=True)
class WignerField:
    grid: PhaseGrid
    values: np.ndarray

    def total(self):
        return float(self.values.sum() * self.grid.dx * self.grid.dp)

    def write_csv(self, path):
        """CSV rows x, p, W preceded by a one-line JSON metadata comment."""
        x, p = self.grid.axes()
        meta = {"grid": self.grid.__dict__, "normalization": self.total()}
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(meta) + "\n")
            w = csv.writer(fh)
            w.writerow(["x", "p", "W"])
            for i, xi in enumerate(x):
                for j, pj in enumerate(p):
                    w.writerow([f"{xi:.10g}", f"{pj:.10g}", f"{self.values[i, j]:.12g}"])


def required_half_width(cutoff):
    return math.sqrt(2 * cutoff + 1) + 5.0


def _wavefunction(coefficients, x):
    return coefficients @ hermite_functions(coefficients.size - 1, x)


def wigner_field(state, grid=None, y_step=0.02):
    """W(x, p) = (1/pi) int e^{-2ipy} psi*(x+y) psi(x-y) dy on the grid."""
    grid = grid or PhaseGrid()
    need = required_half_width(state.cutoff)
    if min(grid.x_max, grid.p_max) < need:
        raise GridTooSmall(f"grid half-width must be at least {need:.3f} for cutoff {state.cutoff}")
    x, p = grid.axes()
    c = state.coefficients
    # the integrand is negligible once |x +- y| leaves the classically allowed region by ~10
    y_max = grid.x_max + 10.0
    y = np.arange(-y_max, y_max + y_step / 2, y_step)
    kernel = np.exp(-2j * np.outer(y, p)) * (y_step / math.pi)
    values = np.empty((x.size, p.size))
    for i, xi in enumerate(x):
        prod = np.conj(_wavefunction(c, xi + y)) * _wavefunction(c, xi - y)
        values[i] = (prod @ kernel).real
    return WignerField(grid, values)


def wigner_points(state, x, p, y_max=None, y_step=0.02):
    """W at arbitrary points (x_i, p_i)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    c = state.coefficients
    y_max = y_max or required_half_width(state.cutoff) + 10.0
    y = np.arange(-y_max, y_max + y_step / 2, y_step)
    out = np.empty(x.size)
    for i, (xi, pi_) in enumerate(zip(x, p)):
        prod = np.conj(_wavefunction(c, xi + y)) * _wavefunction(c, xi - y)
        out[i] = (prod @ np.exp(-2j * pi_ * y)).real * y_step / math.pi
    return out


def _uniform_sum_cdf(z, a, b):
    """P(U + V < z) for U ~ U[-a, a], V ~ U[-b, b] with a >= b >= 0."""
    z = np.clip(z, -(a + b), a + b)
    if b < 1e-15 * max(a, 1.0):
        return (z + a) / (2 * a)
    out = np.empty_like(z)
    lo = z <= -(a - b)
    hi = z >= a - b
    mid = ~(lo | hi)
    out[lo] = (z[lo] + a + b) ** 2 / (8 * a * b)
    out[mid] = (z[mid] + a) / (2 * a)
    out[hi] = 1.0 - (a + b - z[hi]) ** 2 / (8 * a * b)
    return out


def half_plane_weights(grid, angle):
    """Cell-averaged sign(x cos(angle) + p sin(angle)) by exact area fractions."""
    x, p = grid.axes()
    cu, su = math.cos(angle), math.sin(angle)
    d = np.add.outer(x * cu, p * su)
    a, b = abs(cu) * grid.dx / 2, abs(su) * grid.dp / 2
    a, b = max(a, b), min(a, b)
    positive = 1.0 - _uniform_sum_cdf(-d, a, b)
    return 2.0 * positive - 1.0


def sign_expectation(field, t):
    """<Q(t)> as the integral of W against the half plane x(t) > 0."""
    g = field.grid
    return float(np.sum(field.values * half_plane_weights(g, t)) * g.dx * g.dp)


def tsirelson_via_wigner(state, grid=None, schedule=DEFAULT_SCHEDULE, field=None):
    field = field or wigner_field(state, grid)
    return sum(sign_expectation(field, t) for t in schedule.times)


def negativity_volume(field):
    g = field.grid
    return float(np.sum(np.maximum(0.0, -field.values)) * g.dx * g.dp)

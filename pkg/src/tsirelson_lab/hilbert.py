"""Truncated Fock-space foundation.

Energy eigenfunctions are only ever needed at the origin (for the sign
operator matrix elements) or on explicit grids (for quadrature oracles and
phase-space work).  Both are produced by normalized recurrences so that no
factorial or raw Hermite polynomial is ever formed.
"""
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import CutoffTooSmall, QuadratureNotConverged

NORM_TOL = 1e-12


@dataclass(frozen=True)
class FockVector:
    """Pure state c_0..c_N in the energy basis, normalized on construction."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("a state needs at least one coefficient")
        norm = np.linalg.norm(c)
        if norm == 0:
            raise ValueError("zero vector cannot be normalized")
        c = c / norm
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def cutoff(self):
        return self.coefficients.size - 1

    def padded(self, cutoff):
        """Coefficients zero-padded up to ``cutoff``."""
        if cutoff < self.cutoff:
            raise ValueError(f"cutoff {cutoff} below state cutoff {self.cutoff}")
        out = np.zeros(cutoff + 1, dtype=complex)
        out[: self.cutoff + 1] = self.coefficients
        return out

    def parity_flipped(self):
        """Swap the sign of every odd-level coefficient."""
        signs = (-1.0) ** np.arange(self.cutoff + 1)
        return FockVector(signs * self.coefficients)

    def to_dict(self):
        return {
            "cutoff": int(self.cutoff),
            "coefficients": [[float(z.real), float(z.imag)] for z in self.coefficients],
        }

    @classmethod
    def from_dict(cls, data):
        coeffs = [complex(re, im) for re, im in data["coefficients"]]
        if "cutoff" in data and int(data["cutoff"]) != len(coeffs) - 1:
            raise ValueError("cutoff does not match coefficient count")
        return cls(np.array(coeffs))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class EnergyOperator:
    cutoff: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (self.cutoff + 1, self.cutoff + 1):
            raise ValueError("entries shape does not match cutoff")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise ValueError("operator is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def expectation(self, state):
        c = state.padded(self.cutoff)
        return float(np.vdot(c, self.entries @ c).real)


@dataclass(frozen=True)
class OriginData:
    n: int
    psi0: float
    dpsi0: float


@lru_cache(maxsize=16)
def _origin_arrays(nmax):
    psi0 = np.zeros(nmax + 1)
    dpsi0 = np.zeros(nmax + 1)
    psi0[0] = np.pi ** -0.25
    if nmax >= 1:
        dpsi0[1] = math.sqrt(2.0) * psi0[0]
    for n in range(2, nmax + 1):
        psi0[n] = -math.sqrt((n - 1) / n) * psi0[n - 2]
        dpsi0[n] = -math.sqrt(n / (n - 1)) * dpsi0[n - 2]
    psi0.setflags(write=False)
    dpsi0.setflags(write=False)
    return psi0, dpsi0


def origin_arrays(nmax):
    """Arrays of psi_n(0) and psi_n'(0) for n = 0..nmax."""
    return _origin_arrays(int(nmax))


def origin_data(n):
    if n < 0:
        raise ValueError("level index must be non-negative")
    psi0, dpsi0 = origin_arrays(max(n, 1))
    return OriginData(n, float(psi0[n]), float(dpsi0[n]))


def heaviside_matrix(cutoff):
    """Matrix of theta(x) in the energy basis, F_nn = 1/2."""
    a, b = origin_arrays(max(cutoff, 1))
    a, b = a[: cutoff + 1], b[: cutoff + 1]
    n = np.arange(cutoff + 1)
    diff = n[None, :] - n[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (np.outer(a, b) - np.outer(b, a)) / (2.0 * diff)
    f[diff == 0] = 0.5
    return f


def sign_matrix(cutoff):
    return 2.0 * heaviside_matrix(cutoff) - np.eye(cutoff + 1)


def sign_matrix_element(n, k):
    if n < 0 or k < 0:
        raise ValueError("level indices must be non-negative")
    if n == k or (n + k) % 2 == 0:
        return 0.0
    a, b = origin_arrays(max(n, k, 1))
    return float((b[k] * a[n] - b[n] * a[k]) / (k - n))


def build_operator(kind, cutoff):
    """Sign, Heaviside or shifted-sign (Q + 1) operator truncated at ``cutoff``."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    if kind == "sign":
        m = sign_matrix(cutoff)
    elif kind == "heaviside":
        m = heaviside_matrix(cutoff)
    elif kind == "shifted_sign":
        m = sign_matrix(cutoff) + np.eye(cutoff + 1)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return EnergyOperator(cutoff, m)


def hermite_functions(nmax, x):
    """Rows psi_0(x)..psi_nmax(x) via the normalized three-term recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def coherent_fock_vector(alpha, cutoff, threshold=1e-8):
    alpha = complex(alpha)
    n = np.arange(cutoff + 1)
    r2 = abs(alpha) ** 2
    if alpha == 0:
        weights = np.zeros(cutoff + 1)
        weights[0] = 1.0
        return FockVector(weights)
    logmag = n * math.log(abs(alpha)) - 0.5 * special.gammaln(n + 1) - 0.5 * r2
    c = np.exp(logmag + 1j * n * np.angle(alpha))
    kept = float(np.sum(np.abs(c) ** 2))
    if kept < 1.0 - threshold:
        raise CutoffTooSmall(f"cutoff {cutoff} keeps only {kept:.10f} of |{alpha}>")
    return FockVector(c)


def cat_state(alphas, cutoff):
    """Normalized superposition of coherent states with the given amplitudes."""
    total = np.zeros(cutoff + 1, dtype=complex)
    for a in alphas:
        total += coherent_fock_vector(a, cutoff).coefficients
    return FockVector(total)


def eigenstate(n, cutoff=None):
    cutoff = n if cutoff is None else cutoff
    c = np.zeros(cutoff + 1, dtype=complex)
    c[n] = 1.0
    return FockVector(c)


def zaw_state():
    """Maximally violating N=6 state with <A> = +1.1195."""
    c = np.zeros(7)
    c[0], c[3], c[6] = 4 / math.sqrt(42), -1 / math.sqrt(2), math.sqrt(5 / 42)
    return FockVector(c)


def zaw_flipped_state():
    return zaw_state().parity_flipped()


def cat3_state(cutoff=40, amplitude=math.sqrt(2)):
    phases = np.exp(2j * np.pi * np.arange(3) / 3)
    return cat_state(amplitude * phases, cutoff)


def _psi_quadrature(n, x):
    # explicit Hermite polynomial route, independent of the recurrences above
    lognorm = -0.25 * math.log(math.pi) - 0.5 * (n * math.log(2.0) + special.gammaln(n + 1))
    return math.exp(lognorm - 0.5 * x * x) * special.eval_hermite(n, x)


def oracle_sign_element(n, k, tol=1e-12):
    """Q_nk by adaptive quadrature of psi_n psi_k sign(x)."""
    if max(n, k) > 40:
        raise ValueError("quadrature oracle valid for levels up to 40")
    L = math.sqrt(2 * max(n, k) + 1) + 10.0
    f = lambda x: _psi_quadrature(n, x) * _psi_quadrature(k, x)
    right, err_r = integrate.quad(f, 0.0, L, epsabs=tol, epsrel=1e-13, limit=400)
    left, err_l = integrate.quad(f, -L, 0.0, epsabs=tol, epsrel=1e-13, limit=400)
    if err_r + err_l > 1e-9:
        raise QuadratureNotConverged(f"quadrature error {err_r + err_l:.2e} for ({n},{k})")
    return right - left

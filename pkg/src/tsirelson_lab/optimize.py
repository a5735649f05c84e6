"""Maximize <A> over states with vanishing projective asymmetry.

Both the objective <A> = c^dag A c and the constraint
Delta p_123 = p(+,+,+) - p(-,-,-) = c^dag Gamma c are Hermitian quadratic
forms, so on the unit sphere they are Rayleigh quotients with closed-form
gradients.  The constraint is handled by an augmented Lagrangian whose inner
problems are solved by L-BFGS in the 2(N+1) real coordinates of c.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from .errors import Infeasible, NotConverged
from .hilbert import FockVector, zaw_state
from .leggett_garg import DEFAULT_TOL, asymmetry_operator
from .tsirelson import DEFAULT_SCHEDULE, build_tsirelson

MU_START = 10.0
MU_MAX = 1e10


@dataclass(frozen=True)
class OptimizationProblem:
    cutoff: int = 6
    schedule: object = DEFAULT_SCHEDULE
    constraint_tolerance: float = 1e-8
    max_iterations: int = 100
    seed: int = 0
    starts: int = 16
    initial: tuple = ()
    internal_cutoff: int | None = None
    include_zaw: bool = True

    def __post_init__(self):
        if self.constraint_tolerance <= 0:
            raise ValueError("constraint tolerance must be positive")


@dataclass
class OptimizationResult:
    state: FockVector
    objective: float
    constraint_residual: float
    iterations: int
    converged: bool
    seed: int
    start: str
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "objective": self.objective,
            "constraint_residual": self.constraint_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "start": self.start,
            "trace_length": len(self.trace),
            "state": self.state.to_dict(),
        }


def _forms(cutoff, schedule, internal_cutoff=None, tol=DEFAULT_TOL):
    a = build_tsirelson(cutoff, schedule).entries
    g = asymmetry_operator(cutoff, schedule, "projective", internal_cutoff, tol)
    return a, g


def objective_and_constraint(coefficients, schedule=DEFAULT_SCHEDULE, internal_cutoff=None, tol=DEFAULT_TOL):
    """(<A>, Delta p_123) for the normalized coefficient vector."""
    c = np.asarray(coefficients, dtype=complex)
    if not np.any(c):
        raise ValueError("coefficient vector must be nonzero")
    c = c / np.linalg.norm(c)
    a, g = _forms(c.size - 1, schedule, internal_cutoff, tol)
    return float(np.vdot(c, a @ c).real), float(np.vdot(c, g @ c).real)


def _split(c):
    return np.concatenate([c.real, c.imag])


def _join(x):
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def _rayleigh(m, z):
    """Value and real-coordinate gradient of z^dag m z / z^dag z."""
    nz = np.vdot(z, z).real
    mz = m @ z
    val = np.vdot(z, mz).real / nz
    w = 2.0 * (mz - val * z) / nz
    return val, _split(w)


class _AugmentedLagrangian:
    def __init__(self, a, g, tol, max_iterations):
        self.a, self.g = a, g
        self.tol = tol
        self.max_iterations = max_iterations

    def inner(self, x, lam, mu):
        def fun(x):
            z = _join(x)
            f, df = _rayleigh(self.a, z)
            h, dh = _rayleigh(self.g, z)
            return -f + lam * h + 0.5 * mu * h * h, -df + (lam + mu * h) * dh

        res = sopt.minimize(fun, x, jac=True, method="L-BFGS-B", options={"maxiter": 2000, "gtol": 1e-12, "ftol": 1e-15})
        return res.x / np.linalg.norm(res.x)

    def polish(self, x):
        # Newton steps on the constraint along its tangent gradient
        for _ in range(20):
            z = _join(x)
            h, dh = _rayleigh(self.g, z)
            if abs(h) <= 1e-14:
                break
            x = x - h * dh / (dh @ dh)
            x = x / np.linalg.norm(x)
        return x

    def run(self, x0):
        """Outer loop; the accepted constraint violations never increase."""
        x = self.inner(x0 / np.linalg.norm(x0), 0.0, MU_START)
        lam, mu = 0.0, MU_START
        h = _rayleigh(self.g, _join(x))[0]
        trace = [abs(h)]
        iterations = 1
        while iterations < self.max_iterations and abs(h) > 0.1 * self.tol:
            lam_try = lam + mu * h
            x_new = self.inner(x, lam_try, mu)
            h_new = _rayleigh(self.g, _join(x_new))[0]
            iterations += 1
            if abs(h_new) > abs(h):
                # reject the step and stiffen the penalty instead
                mu = min(10.0 * mu, MU_MAX)
                continue
            if abs(h_new) > 0.25 * abs(h):
                mu = min(10.0 * mu, MU_MAX)
            x, h, lam = x_new, h_new, lam_try
            trace.append(abs(h))
        return self.polish(x), iterations, trace


def optimize_constrained(problem=OptimizationProblem()):
    """Multi-start augmented-Lagrangian search; best feasible objective wins."""
    n = problem.cutoff
    a, g = _forms(n, problem.schedule, problem.internal_cutoff)
    solver = _AugmentedLagrangian(a, g, problem.constraint_tolerance, problem.max_iterations)
    rng = np.random.default_rng(problem.seed)
    starts = [(f"random{k}", rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)) for k in range(problem.starts)]
    if n >= 6 and problem.include_zaw:
        starts.append(("zaw", zaw_state().padded(n)))
    for k, init in enumerate(problem.initial):
        starts.append((f"initial{k}", FockVector(init).padded(n)))

    best = None
    any_feasible = False
    for name, c0 in starts:
        x, iterations, trace = solver.run(_split(np.asarray(c0, dtype=complex)))
        c = _join(x)
        c = c / np.linalg.norm(c)
        obj = float(np.vdot(c, a @ c).real)
        res = abs(float(np.vdot(c, g @ c).real))
        if res > problem.constraint_tolerance:
            continue
        any_feasible = True
        if obj <= 1.0:
            continue
        if best is None or obj > best.objective:
            best = OptimizationResult(FockVector(c), obj, res, iterations, True, problem.seed, name, trace)
    if best is None:
        if any_feasible or n < 6:
            raise Infeasible(f"no feasible state with <A> > 1 found at cutoff {n}")
        raise NotConverged("no start reached the constraint tolerance")
    return best

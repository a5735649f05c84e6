"""Command-line entry point: ``tsirelson-lab <command> [options]``.

Exit status is 0 on success, 1 on a usage or input error, 2 when a numerical
procedure fails to converge and 3 when the constrained optimization finds no
feasible violating state.  TSIRELSON_LAB_THREADS caps the FFT worker count.
"""
import csv
import functools
import io
import json
import math
import sys
from dataclasses import asdict

import click
import numpy as np

from . import heuristics, hilbert, leggett_garg, optimize, phasespace, tsirelson
from .errors import Infeasible, NotConverged, TsirelsonLabError

PRESETS = "zaw, zaw_flipped, cat3, eigen:<n>"


def resolve_state(preset, state_file, coefficients, cutoff):
    sources = [s for s in (preset, state_file, coefficients) if s]
    if len(sources) != 1:
        raise click.UsageError("give exactly one of --preset, --state-file, --coefficients")
    if preset:
        if preset == "zaw":
            state = hilbert.zaw_state()
        elif preset == "zaw_flipped":
            state = hilbert.zaw_flipped_state()
        elif preset == "cat3":
            state = hilbert.cat3_state(cutoff or 40)
        elif preset.startswith("eigen:"):
            try:
                n = int(preset.split(":", 1)[1])
            except ValueError:
                raise click.UsageError(f"bad preset {preset!r}")
            if n < 0:
                raise click.UsageError("eigenstate level must be non-negative")
            state = hilbert.eigenstate(n)
        else:
            raise click.UsageError(f"unknown preset {preset!r}; choose from {PRESETS}")
    elif state_file:
        with open(state_file) as fh:
            data = json.load(fh)
        state = hilbert.FockVector.from_dict(data.get("state", data))
    else:
        try:
            state = hilbert.FockVector(np.array([complex(t.replace(" ", "")) for t in coefficients.split(",")]))
        except ValueError:
            raise click.UsageError("coefficients must be comma-separated complex numbers such as 0.5,-0.5j")
    if cutoff is not None and cutoff > state.cutoff and preset != "cat3":
        state = hilbert.FockVector(state.padded(cutoff))
    return state


def parse_schedule(text, default=tsirelson.DEFAULT_SCHEDULE):
    if not text:
        return default
    try:
        return tsirelson.MeasurementSchedule.parse(text)
    except ValueError as exc:
        raise click.UsageError(f"bad --schedule: {exc}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def emit(ctx, payload, rows=None, header=None):
    """Write JSON, or CSV when requested and the command has tabular output."""
    out, fmt = ctx.obj["out"], ctx.obj["format"]
    if fmt == "csv":
        if rows is None:
            raise click.UsageError("this command has no CSV form; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable(payload), indent=2) + "\n"
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def state_options(f):
    f = click.option("--coefficients", help="Inline comma-separated complex coefficients c0,c1,...")(f)
    f = click.option("--state-file", type=click.Path(exists=True, dir_okay=False), help="FockVector JSON file.")(f)
    f = click.option("--preset", help=f"Named state: {PRESETS}.")(f)
    return f


COMMON = (
    click.option("--no-extrapolate", is_flag=True, help="Evaluate internal sums once at --internal-cutoff."),
    click.option("--internal-cutoff", type=int, default=None,
                 help="Starting internal cutoff M for intermediate-level sums (default 4N+40)."),
    click.option("--cutoff", type=int, default=None, help="Energy cutoff N (pads states; sets operator size)."),
    click.option("--schedule", default=None, help="Measurement times t1,t2,t3; pi allowed (default 0,2pi/3,4pi/3)."),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True),
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout)."),
)


def command(name=None):
    """Subcommand with the shared options collected into ctx.obj."""
    def wrap(f):
        def run(out, fmt, schedule, cutoff, internal_cutoff, no_extrapolate, **kwargs):
            ctx = click.get_current_context()
            ctx.obj = {"out": out, "format": fmt, "schedule": schedule, "cutoff": cutoff,
                       "internal_cutoff": internal_cutoff,
                       "tol": None if no_extrapolate else leggett_garg.DEFAULT_TOL}
            return f(ctx, **kwargs)
        functools.update_wrapper(run, f)
        del run.__wrapped__
        for opt in COMMON:
            run = opt(run)
        return cli.command(name or f.__name__.replace("_cmd", ""))(run)
    return wrap


@click.group()
def cli():
    """Harmonic-oscillator Tsirelson inequality toolkit."""


@command("eval")
@state_options
def eval_cmd(ctx, preset, state_file, coefficients):
    """<A> for the standard and single-crossing schedules."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    sched = parse_schedule(ctx.obj["schedule"])
    a = tsirelson.expect_tsirelson(state, "standard", sched)
    sca = tsirelson.expect_tsirelson(state, "sca")
    payload = {"state": state.to_dict(), "schedule": list(sched.times), "expect_A": a, "expect_A_sca": sca,
               "rescaled": 0.5 * (1 + a), "classification": tsirelson.classify(a)}
    emit(ctx, payload, [[a, sca, 0.5 * (1 + a), tsirelson.classify(a)]],
         ["expect_A", "expect_A_sca", "rescaled", "classification"])


@command()
def spectrum(ctx):
    """Eigenvalues of A and the maximally violating state."""
    n = ctx.obj["cutoff"] if ctx.obj["cutoff"] is not None else 6
    rep = tsirelson.spectrum(n, parse_schedule(ctx.obj["schedule"]))
    payload = rep.to_dict()
    conf = tsirelson.subspace_confinement(rep)
    payload["confinement"] = asdict(conf) | {"max_leakage": conf.max_leakage}
    emit(ctx, payload, [[i, float(w)] for i, w in enumerate(rep.eigenvalues)], ["index", "eigenvalue"])


@command()
@click.option("--grid", type=int, default=41, show_default=True, help="Polar-angle points.")
def scan(ctx, grid):
    """<A> over real states a0|0> + a3|3> + a6|6>."""
    pts = tsirelson.scan_real_triplet(grid, parse_schedule(ctx.obj["schedule"]))
    rows = [[p.a0, p.a3, p.a6, p.expect_A, p.classification] for p in pts]
    emit(ctx, [asdict(p) for p in pts], rows, ["a0", "a3", "a6", "expect_A", "classification"])


@command()
@state_options
def lg(ctx, preset, state_file, coefficients):
    """Correlators, LG3 quantities, distributions and both methods."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    rep = leggett_garg.lg_report(state, parse_schedule(ctx.obj["schedule"]), ctx.obj["internal_cutoff"], ctx.obj["tol"])
    rows = [[k, o, v] for k, d in rep["distributions"].items() for o, v in d.items()]
    emit(ctx, rep, rows, ["kind", "outcome", "value"])


@command()
@state_options
def method1(ctx, preset, state_file, coefficients):
    """Method 1: rescaled <A> against the zero-crossing LG3 L1."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    m = leggett_garg.sequential_moments(state, parse_schedule(ctx.obj["schedule"]), ctx.obj["internal_cutoff"], ctx.obj["tol"])
    rep = leggett_garg.method1_from_moments(m)
    payload = rep.to_dict() | {"l1": -rep.up_violation_term, "residual": rep.residual}
    emit(ctx, payload, [[payload[k] for k in payload]], list(payload))


def _mark(verdict):
    return {"quantum_interference_required": "tick", "UP_sufficient": "cross"}.get(verdict, "none")


@command()
@state_options
@click.option("--kind", type=click.Choice(["all"] + list(leggett_garg.KINDS)), default="all", show_default=True)
def method2(ctx, preset, state_file, coefficients, kind):
    """Method 2: rescaled <A> against 2 Delta p for each distribution kind."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    m = leggett_garg.sequential_moments(state, parse_schedule(ctx.obj["schedule"]), ctx.obj["internal_cutoff"], ctx.obj["tol"])
    kinds = leggett_garg.KINDS if kind == "all" else (kind,)
    reports = {}
    for k in kinds:
        r = leggett_garg.method2_from_moments(m, k)
        reports[k] = r.to_dict() | {"two_delta_p": r.up_violation_term, "mark": _mark(r.verdict), "residual": r.residual}
    payload = reports[kind] | {"kind": kind} if kind != "all" else reports
    rows = [[k, r["two_delta_p"], r["interference"], r["verdict"], r["mark"]] for k, r in reports.items()]
    emit(ctx, payload, rows, ["kind", "two_delta_p", "interference", "verdict", "mark"])


@command()
@state_options
@click.option("--start", type=float, default=0.0, show_default=True)
@click.option("--length", default="2*pi", show_default=True, help="Interval length; pi allowed.")
def dwell(ctx, preset, state_file, coefficients, start, length):
    """Fraction of an interval spent in x > 0."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    try:
        length = tsirelson.eval_time(length)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    rep = heuristics.dwell_expectation(state, start, length)
    emit(ctx, asdict(rep), [[start, length, rep.expectation, rep.is_diagonal]], ["start", "length", "expectation", "is_diagonal"])


@command()
@state_options
@click.option("--interval", type=click.Choice(list(heuristics.INTERVALS)), default="full_period", show_default=True)
def crossings(ctx, preset, state_file, coefficients, interval):
    """Mean and spread of the origin-crossing number."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    rep = heuristics.crossing_report(state, interval)
    emit(ctx, rep.to_dict(), [[n, v] for n, v in enumerate(rep.per_level)], ["n", "diagonal"])


@command()
@state_options
@click.option("--samples", type=int, default=721, show_default=True)
def current(ctx, preset, state_file, coefficients, samples):
    """Probability current at the origin over one period."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    trace = heuristics.current_trace(state, samples)
    cons = heuristics.current_consistency(state, parse_schedule(ctx.obj["schedule"]))
    payload = {"consistency": asdict(cons), "t": trace.times, "J": trace.values}
    emit(ctx, payload, list(zip(trace.times.tolist(), trace.values.tolist())), ["t", "J"])


@command()
@state_options
@click.option("--grid", type=int, default=512, show_default=True, help="Points per axis.")
@click.option("--half-width", type=float, default=None, help="Grid half-width (default max(10, sqrt(2N+1)+5)).")
def wigner(ctx, preset, state_file, coefficients, grid, half_width):
    """Wigner-function route to <A>; CSV format writes the field itself."""
    state = resolve_state(preset, state_file, coefficients, ctx.obj["cutoff"])
    hw = half_width or max(10.0, math.ceil(phasespace.required_half_width(state.cutoff)))
    field = phasespace.wigner_field(state, phasespace.PhaseGrid.square(hw, grid))
    sched = parse_schedule(ctx.obj["schedule"])
    payload = {"grid": asdict(field.grid), "normalization": field.total(),
               "tsirelson_via_wigner": phasespace.tsirelson_via_wigner(state, schedule=sched, field=field),
               "expect_A": tsirelson.expect_tsirelson(state, schedule=sched),
               "negativity_volume": phasespace.negativity_volume(field), "min_W": float(field.values.min())}
    if ctx.obj["format"] == "csv":
        if not ctx.obj["out"]:
            raise click.UsageError("wigner CSV output needs --out")
        field.write_csv(ctx.obj["out"])
    else:
        emit(ctx, payload)


@command("optimize")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--starts", type=int, default=16, show_default=True, help="Random starts (the maximal N=6 eigenvector is added as well).")
@click.option("--max-iterations", type=int, default=100, show_default=True)
@click.option("--tolerance", type=float, default=1e-8, show_default=True, help="Constraint tolerance on |Delta p_123|.")
def optimize_cmd(ctx, seed, starts, max_iterations, tolerance):
    """Maximize <A> subject to Delta p_123 = 0."""
    n = ctx.obj["cutoff"] if ctx.obj["cutoff"] is not None else 6
    problem = optimize.OptimizationProblem(cutoff=n, schedule=parse_schedule(ctx.obj["schedule"]),
                                           constraint_tolerance=tolerance, max_iterations=max_iterations,
                                           seed=seed, starts=starts, internal_cutoff=ctx.obj["internal_cutoff"])
    res = optimize.optimize_constrained(problem)
    emit(ctx, res.to_dict())


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="tsirelson-lab", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except NotConverged as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Infeasible as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (TsirelsonLabError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

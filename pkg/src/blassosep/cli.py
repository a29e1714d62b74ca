"""Batch command-line interface.

Exit codes: 0 success, 2 configuration or input error, 3 solver did not
converge, 4 certification failed. Set ``BLASSOSEP_LOG`` (e.g. ``DEBUG``) for
log output on stderr.

A run directory written by ``solve`` holds::

    channels.csv   separated channels x        (omega,ch0,ch1,...)
    residual.csv   r = b - C x                 (omega,r)
    mixture.csv    copy of the data b          (omega,b)
    iterates.csv   iteration log
    manifest.json  resolved config, versions, wall time

``baseline fw --out RUN`` adds ``fw_spikes.csv`` and ``fw_report.csv``,
``certify`` adds ``gap.csv`` and ``report`` writes ``figure.svg``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import FwSolution, GridLassoProblem, frank_wolfe, grid_fista, tv_witness
from .config import RunConfig, load_config, parse_config
from .csvio import (
    CsvFormatError, read_channels_csv, read_mixture_csv, read_spikes_csv, write_channels_csv,
    write_json, write_mixture_csv, write_rows_csv, write_spikes_csv,
)
from .duality import gap_report, primal_objective, residual_identity_check
from .errors import (
    ConfigError, ExchangeDivergence, GridMismatch, MaxItersExceeded, NonFiniteInput,
    SpecViolation,
)
from .measures import tv_norm
from .operators import GridSignal, MultiChannelSignal, certificate_sup, mix
from .prox_solver import solve
from .synthesis import generate

log = logging.getLogger("blassosep")

EXIT_OK, EXIT_INPUT, EXIT_NOCONV, EXIT_CERT = 0, 2, 3, 4

_INPUT_ERRORS = (ConfigError, CsvFormatError, GridMismatch, NonFiniteInput, SpecViolation,
                 FileNotFoundError)


class _Fail(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


# -- helpers -------------------------------------------------------------------

def _versions() -> dict:
    import scipy
    return {"blassosep": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _scenario_dict(spec) -> dict:
    return {
        "grid": {"start": spec.grid.start, "step": spec.grid.step, "count": spec.grid.count},
        "patterns": [y.to_spec() for y in spec.patterns],
        "spikes": [[[s.position, s.amplitude] for s in m] for m in spec.spikes],
        "noise": {"kind": spec.noise.kind, "sigma": spec.noise.sigma, "seed": spec.noise.seed},
    }


def _load_data(cfg: RunConfig, path) -> GridSignal:
    spec = cfg.require_scenario()
    return read_mixture_csv(path, spec.grid)


def _run_config(run: Path) -> RunConfig:
    man = run / "manifest.json"
    if not man.is_file():
        raise CsvFormatError(f"{man}: no such file (is {run} a solve output directory?)")
    try:
        raw = json.loads(man.read_text())["config"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise CsvFormatError(f"{man}: unreadable manifest ({exc})") from None
    return parse_config(json.dumps(raw), str(man))


def _fit_rows(sol: FwSolution, b: GridSignal, patterns):
    x = sol.channels(patterns, b.grid)
    res = float(np.linalg.norm(b.values - mix(x).values))
    return [(i, len(m), res, tv_norm(m), sol.cert_sup[i]) for i, m in enumerate(sol.measures)]


# -- commands ------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.require_scenario()
    scen = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_mixture_csv(out / "b.csv", scen.b)
    write_spikes_csv(out / "truth_spikes.csv", scen.truth)
    write_channels_csv(out / "clean_channels.csv", scen.clean)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.require_scenario()
    solver_cfg = cfg.solver_config()
    b = _load_data(cfg, args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxItersExceeded)
            res = solve(b, spec.patterns, solver_cfg)
    except ExchangeDivergence as exc:
        raise _Fail(EXIT_NOCONV, f"projection failed: {exc}") from None
    wall = time.perf_counter() - t0
    write_channels_csv(out / "channels.csv", res.x)
    write_mixture_csv(out / "residual.csv", res.r, name="r")
    write_mixture_csv(out / "mixture.csv", b)
    res.log.write_csv(out / "iterates.csv")
    manifest = {
        "command": "solve",
        "config": cfg.raw,
        "resolved": {
            "scenario": _scenario_dict(spec),
            "solver": solver_cfg.resolved(len(spec.patterns), spec.grid).to_dict(),
        },
        "data": str(args.data),
        "versions": _versions(),
        "wall_time_s": wall,
        "converged": res.converged,
        "iterations": res.iterations,
    }
    write_json(out / "manifest.json", manifest)
    if not res.converged:
        raise _Fail(EXIT_NOCONV, f"no convergence after {res.iterations} iterations")
    log.info("converged in %d iterations (%.1f s)", res.iterations, wall)
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.require_scenario()
    alpha = cfg.require_alpha()
    b = _load_data(cfg, args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MaxItersExceeded)
        if args.method == "grid":
            prob = GridLassoProblem.build(b, spec.patterns, alpha)
            fr = grid_fista(prob, cfg.fista.iters, cfg.fista.tol, cfg.fista.restart)
            measures = prob.measures(fr.coefs)
            x = MultiChannelSignal(b.grid, prob.apply(fr.coefs))
            r = GridSignal(b.grid, b.values - mix(x).values)
            res = r.norm()
            sups = [certificate_sup(r, y)[0] for y in spec.patterns]
            rows = [(i, len(m), res, tv_norm(m), sups[i]) for i, m in enumerate(measures)]
            converged = fr.converged
        else:
            sol = frank_wolfe(b, spec.patterns, alpha, cfg.fw)
            measures = sol.measures
            x = sol.channels(spec.patterns, b.grid)
            rows = _fit_rows(sol, b, spec.patterns)
            converged = sol.converged
    prefix = args.method
    write_spikes_csv(out / f"{prefix}_spikes.csv", measures)
    write_channels_csv(out / f"{prefix}_channels.csv", x)
    write_rows_csv(out / f"{prefix}_report.csv", ["channel", "n_spikes", "residual", "tv", "cert_sup"],
                   rows)
    if not converged or any(issubclass(w.category, MaxItersExceeded) for w in caught):
        raise _Fail(EXIT_NOCONV, f"{args.method} baseline stopped before convergence")
    return EXIT_OK


def cmd_certify(args) -> int:
    run = Path(args.run)
    cfg = _run_config(run)
    spec = cfg.require_scenario()
    alpha = cfg.require_alpha()
    b = _load_data(cfg, args.data)
    x = read_channels_csv(run / "channels.csv", spec.grid)
    r = read_mixture_csv(run / "residual.csv", spec.grid, name="r")
    if x.n != len(spec.patterns):
        raise CsvFormatError(f"{run / 'channels.csv'}: {x.n} channels, config has {len(spec.patterns)}")
    mismatch = residual_identity_check(x, r, b)
    if mismatch > 1e-6 * (1.0 + b.norm()):
        raise CsvFormatError(f"{run / 'residual.csv'}: residual differs from b - C x by {mismatch:.3g}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxItersExceeded)
        wit = tv_witness(x, spec.patterns, alpha, cfg.fw, cfg.certify.witness_rel_alpha)
    x_w = wit.solution.channels(spec.patterns, b.grid)
    primal = primal_objective(x_w, b, wit.tv, alpha)
    rep = gap_report(primal, r, b, spec.patterns, alpha)
    rep.write_csv(run / "gap.csv")
    tol = args.gap_tol if args.gap_tol is not None else cfg.certify.gap_tol
    print(f"primal={rep.primal_value!r} dual={rep.dual_value!r} gap={rep.gap!r} "
          f"max_violation={rep.max_violation!r}")
    if rep.gap > tol * (1.0 + abs(rep.primal_value)):
        raise _Fail(EXIT_CERT, f"gap {rep.gap:.3g} exceeds {tol:g} * (1 + |primal|)")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_figure

    run = Path(args.run)
    cfg = _run_config(run)
    spec = cfg.require_scenario()
    b = read_mixture_csv(run / "mixture.csv", spec.grid)
    x = read_channels_csv(run / "channels.csv", spec.grid)
    fw_path = run / "fw_spikes.csv"
    spikes = read_spikes_csv(fw_path, x.n) if fw_path.is_file() else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    render_figure(out / "figure.svg", b, x, spikes, [y.kind for y in spec.patterns])
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blassosep",
                                description="Off-the-grid convolutional source separation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesise a scenario")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the dual-prox separation")
    s.add_argument("--config", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    bl = sub.add_parser("baseline", help="run a reference solver")
    bl.add_argument("method", choices=("grid", "fw"))
    bl.add_argument("--config", required=True)
    bl.add_argument("--data", required=True)
    bl.add_argument("--out", required=True)
    bl.set_defaults(func=cmd_baseline)

    c = sub.add_parser("certify", help="duality gap of a solve run")
    c.add_argument("--run", required=True)
    c.add_argument("--data", required=True)
    c.add_argument("--gap-tol", type=float, default=None)
    c.set_defaults(func=cmd_certify)

    r = sub.add_parser("report", help="render the separation figure")
    r.add_argument("--run", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    level = os.environ.get("BLASSOSEP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"blassosep {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except _INPUT_ERRORS as exc:
        print(f"blassosep {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

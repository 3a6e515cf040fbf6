"""Command line driver: config-driven A/J pipelines and their artifacts.

``sogpe solve --config k0_10 --n-sub 64 --out run1``
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .a_method import AStepConfig, StoppingRule, run_a_method
from .config import load_config, preset_path
from .errors import ConfigurationError, IterationAbort, SogpeError
from .j_method import ShiftPolicy, run_j_method
from .mesh import build_space, interpolate_p1_to_p2
from .spectral import spectral_report
from .state import Eigenpair, SpinorField, density, energy, initial_state, normalize, rayleigh_lambda

log = logging.getLogger("sogpe")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CAP = 2
EXIT_ABORT = 3

HISTORY_HEADER = ["iter", "method", "energy", "lambda", "residual", "sigma", "tau", "wall_ms"]
THREADS_ENV = "SOGPE_NUM_THREADS"


@dataclass
class RunArtifacts:
    """Everything a pipeline run produced.

    ``status`` is ``"converged"``, ``"iteration_cap"`` or ``"aborted"``.
    """

    config: object
    history: list = field(default_factory=list)
    eigenpair: Eigenpair = None
    spectral: object = None
    spectral_error: str = None
    status: str = "converged"
    message: str = ""
    stages: list = field(default_factory=list)
    wall_s: float = 0.0


def _interpolate(u, space2):
    N1 = u.space.N
    fields = u.coeffs.reshape(4, N1).T
    c2 = interpolate_p1_to_p2(u.space, space2, fields).T.ravel()
    return normalize(SpinorField(space2, c2))


def run_pipeline(cfg, u0=None):
    """Run the configured stages in order, carrying the state across them."""
    t_start = time.perf_counter()
    art = RunArtifacts(cfg)
    spaces = {}

    def space(order):
        if order not in spaces:
            spaces[order] = build_space(cfg.domain, order)
        return spaces[order]

    params = cfg.physics
    first = cfg.stages[0]
    u = u0 if u0 is not None else initial_state(space(first.order))
    counter = 0
    a_cfg = AStepConfig(line_search_evals=cfg.line_search_evals)
    for i, st in enumerate(cfg.stages):
        last = i == len(cfg.stages) - 1
        interpolated = u.space.order != st.order
        if interpolated:
            u = _interpolate(u, space(st.order))
        stop = StoppingRule(
            energy_diff_tol=cfg.final_tol if last else st.switch_tol,
            max_iters=st.max_iters,
            reference_energy=cfg.reference_energy if last else None,
            reference_tol=cfg.reference_tol,
        )
        t0 = time.perf_counter()
        try:
            if st.method == "A":
                u, hist, ok = run_a_method(u, params, a_cfg, stop, method=st.tag)
            else:
                policy = (ShiftPolicy.fixed(st.sigma) if st.shift == "fixed"
                          else ShiftPolicy.adaptive(st.freeze_after))
                ep, hist, ok = run_j_method(u, params, policy, stop, method=st.tag)
                u = ep.state
        except IterationAbort as exc:
            hist, ok = exc.history, False
            if exc.state is not None:
                u = exc.state
            art.status, art.message = "aborted", str(exc)
        except SogpeError as exc:
            hist, ok = [], False
            art.status, art.message = "aborted", f"stage {st.tag}: {exc}"
        # record 0 repeats the previous stage's last state unless the space changed
        keep = hist if (i == 0 or interpolated) else hist[1:]
        for rec in keep:
            art.history.append(replace(rec, iter=counter))
            counter += 1
        art.stages.append({"stage": st.tag, "iterations": max(len(hist) - 1, 0), "converged": bool(ok),
                           "wall_s": time.perf_counter() - t0})
        if art.status == "aborted":
            break
        if not ok:
            log.warning("stage %s stopped at its iteration cap", st.tag)
            if last:
                art.status, art.message = "iteration_cap", f"stage {st.tag} reached max_iters"
    try:
        lam = rayleigh_lambda(u, params)
        art.eigenpair = Eigenpair(u, lam, energy(u, params))
    except SogpeError as exc:
        art.status, art.message = "aborted", str(exc)
    if cfg.spectral and art.eigenpair is not None and art.status != "aborted":
        sigma = cfg.spectral_sigma
        if sigma is None:
            sigmas = [r.sigma for r in art.history if not math.isnan(r.sigma)]
            sigma = sigmas[-1] if sigmas else None
        try:
            art.spectral = spectral_report(u, params, sigma=sigma, k=cfg.spectral_k)
        except (SogpeError, ArithmeticError, RuntimeError) as exc:
            art.spectral_error = str(exc)
    art.wall_s = time.perf_counter() - t_start
    return art


# -- output ----------------------------------------------------------------

def prepare_output_dir(path):
    """Create ``path`` if needed and fail early if it is not writable."""
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {p}: {exc}") from exc
    if not os.access(p, os.W_OK | os.X_OK):
        raise ConfigurationError(f"output directory {p} is not writable")
    return p


def _num(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else format(float(x), ".17g")
    return str(x)


def _record_row(r):
    return [r.iter, r.method, r.energy, r.lam, r.residual, r.sigma, r.tau, r.wall_ms]


def export_outputs(art, out_dir):
    """Write history, density, convergence and report files into ``out_dir``."""
    out = prepare_output_dir(out_dir)
    cfg = art.config
    ref = cfg.reference_energy
    ref_source = "config"
    if ref is None and art.eigenpair is not None:
        ref, ref_source = art.eigenpair.energy, "final_energy"

    hist = []
    for r in art.history:
        hist.append({
            "iter": r.iter, "method": r.method, "energy": _num(r.energy), "lambda": _num(r.lam),
            "residual": _num(r.residual), "sigma": _num(r.sigma), "tau": _num(r.tau),
            "wall_ms": _num(r.wall_ms),
            "energy_minus_reference": None if ref is None else _num(r.energy - ref),
        })
    (out / "history.json").write_text(json.dumps(hist, indent=1))

    with open(out / "history.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for r in art.history:
            w.writerow([_fmt(v) for v in _record_row(r)])

    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "energy_error"])
        if ref is not None:
            for r in art.history:
                w.writerow([r.iter, _fmt(abs(r.energy - ref))])

    for k in (1, 2):
        with open(out / f"density_{k}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "value"])
            if art.eigenpair is not None:
                u = art.eigenpair.state
                rho = density(u)[k - 1]
                for (x, y), v in zip(u.space.nodes, rho):
                    w.writerow([_fmt(x), _fmt(y), _fmt(v)])

    report = {
        "status": art.status,
        "message": art.message,
        "final_energy": None if art.eigenpair is None else art.eigenpair.energy,
        "lambda": None if art.eigenpair is None else art.eigenpair.eigenvalue,
        "final_residual": _num(art.history[-1].residual) if art.history else None,
        "convergence_reference": ref_source if ref is not None else None,
        "stages": [{k: v for k, v in s.items() if k != "wall_s"} for s in art.stages],
        "spectral": None if art.spectral is None else art.spectral.to_dict(),
        "spectral_error": art.spectral_error,
        "config": cfg.to_dict(),
        "kernel_backend": kernels.BACKEND,
        "wall_times": {"total_s": art.wall_s, "stages_s": [s["wall_s"] for s in art.stages]},
    }
    (out / "report.json").write_text(json.dumps(report, indent=1, default=_json_default))
    return out


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# -- entry point -------------------------------------------------------------

def _resolve_config(name):
    if os.path.exists(name):
        return name
    return preset_path(name)


def build_parser():
    p = argparse.ArgumentParser(prog="sogpe", description="Ground states of spin-orbit coupled two-component condensates.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run a configured A/J pipeline")
    s.add_argument("--config", required=True, help="config file or bundled preset name (k0_10, k0_50, decoupled)")
    s.add_argument("--out", help="output directory (overrides the config)")
    s.add_argument("--stages", help="stage list override, e.g. 'A1,A2,J2'")
    s.add_argument("--spectral", action="store_true", help="compute the spectral report at the end")
    s.add_argument("--n-sub", type=int, help="mesh subdivisions (overrides the config)")
    return p


def _thread_limit():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        log.warning("%s is set but threadpoolctl is not installed", THREADS_ENV)
        return None
    return threadpool_limits(limits=int(n))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(_resolve_config(args.config), stages_override=args.stages, output_dir=args.out)
        if args.spectral:
            cfg = replace(cfg, spectral=True)
        if args.n_sub is not None and args.n_sub != cfg.domain.n_sub:
            # a reference energy belongs to one mesh
            if cfg.reference_energy is not None:
                log.info("dropping reference energy %r: mesh overridden", cfg.reference_energy)
            cfg = replace(cfg, domain=replace(cfg.domain, n_sub=args.n_sub), reference_energy=None)
        prepare_output_dir(cfg.output_dir)
    except ConfigurationError as exc:
        print(f"sogpe: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    limit = _thread_limit()
    try:
        art = run_pipeline(cfg)
    finally:
        if limit is not None:
            limit.unregister()
    export_outputs(art, cfg.output_dir)
    e = art.eigenpair
    if e is not None:
        print(f"{art.status}: E = {e.energy:.17g}, lambda = {e.eigenvalue:.17g}, "
              f"iterations = {'+'.join(str(s['iterations']) for s in art.stages)}")
    if art.message:
        print(art.message, file=sys.stderr)
    return {"converged": EXIT_OK, "iteration_cap": EXIT_CAP}.get(art.status, EXIT_ABORT)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point and scenario execution.

Subcommands::

    cgllab run CONFIG        run the scenario named in CONFIG
    cgllab verify [--fast]   run the property suite
    cgllab sweep CONFIG      blow-up verdicts over a kappa x amplitude grid
    cgllab certify CONFIG    small-data certificate plus a monitored run

``CONFIG`` may be ``-`` for stdin. Exit codes: 0 when every check passed,
1 for a negative scenario result, 2 for a configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import DtPolicy, detect_blowup, monitored_global_run, small_data_certificate
from .config import RunConfig, build_forcing, build_initial, parse_config, parse_config_text
from .errors import BallEscape, BlowupSignal, ConfigurationError, NonContractive, NotApplicable, PreconditionError
from .evolution import acgl_residual, fixed_point_solve, simulate
from .field_algebra import eigenmode
from .verification import run_suite

__all__ = ["RunManifest", "execute", "main", "EXIT_OK", "EXIT_NEGATIVE", "EXIT_CONFIG"]

EXIT_OK, EXIT_NEGATIVE, EXIT_CONFIG = 0, 1, 2
DIAG_COLUMNS = ("t", "l2_sq", "phi", "psi_q", "residual")
MANIFEST = "manifest.json"


@dataclass
class RunManifest:
    """Record of one run, written last as ``manifest.json``."""

    config: dict
    version: str
    scenario: str
    status: str
    exit_code: int
    partial: bool
    started: str
    wall_clock_s: float
    summary: dict
    files: dict = field(default_factory=dict)
    backend: str = ""
    python: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


class _Writer:
    """Single collector for all files of one run."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []

    def csv(self, name: str, header, rows) -> None:
        with open(self.out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)

    def json(self, name: str, obj) -> None:
        with open(self.out / name, "w") as fh:
            json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.files.append(name)

    def checksums(self) -> dict:
        out = {}
        for name in self.files:
            out[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        return out


def _write_atomic(path: Path, obj) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _trajectory_rows(traj, residual=None):
    res = traj.residual if residual is None else residual
    return zip(traj.times, traj.l2_sq, traj.phi, traj.psi_q, res)


# --------------------------------------------------------------------------- scenarios


def _run_simulate(cfg: RunConfig, w: _Writer) -> tuple[str, int, dict]:
    U0, F = build_initial(cfg), build_forcing(cfg)
    try:
        traj = simulate(U0, cfg.params, F, save_every=cfg.section("output")["save_every"])
    except BlowupSignal as exc:
        if exc.trajectory is not None:
            w.csv("trajectory.csv", DIAG_COLUMNS, _trajectory_rows(exc.trajectory))
        info = {"blowup": True, "step": exc.step, "time": exc.time}
        w.json("simulate.json", info)
        return "blowup", EXIT_NEGATIVE, info
    w.csv("trajectory.csv", DIAG_COLUMNS, _trajectory_rows(traj))
    np.save(w.out / "final_field.npy", traj.fields[-1])
    w.files.append("final_field.npy")
    info = {"blowup": False, "steps": traj.n_steps, "T": float(traj.times[-1]),
            "phi_final": float(traj.phi[-1]), "l2_sq_final": float(traj.l2_sq[-1])}
    w.json("simulate.json", info)
    return "ok", EXIT_OK, info


def _run_fixed_point(cfg: RunConfig, w: _Writer) -> tuple[str, int, dict]:
    U0, F = build_initial(cfg), build_forcing(cfg)
    fp = cfg.section("fixed_point")
    try:
        _, traj, report = fixed_point_solve(U0, F, fp["S"], cfg.params, tol=fp["tol"], max_iter=fp["max_iter"])
    except (NonContractive, BallEscape) as exc:
        info = {"error": type(exc).__name__, "message": str(exc), "report": exc.report.to_dict()}
        w.json("fixed_point.json", info)
        return "negative", EXIT_NEGATIVE, info
    res = acgl_residual(traj, F, cfg.params)
    w.csv("trajectory.csv", DIAG_COLUMNS, _trajectory_rows(traj, res))
    info = report.to_dict()
    w.json("fixed_point.json", info)
    return "ok", EXIT_OK, {k: info[k] for k in ("R", "S", "iterations", "final_distance", "acgl_residual_max")}


def _run_verify(cfg: RunConfig, w: _Writer) -> tuple[str, int, dict]:
    fast = cfg.section("verify")["fast"]
    results = run_suite(fast=fast, seed=cfg.seed,
                        progress=lambda r: print(f"  {'PASS' if r.passed else 'FAIL'}  {r.name}", flush=True))
    w.csv("verify.csv", ("name", "passed", "value", "tol", "detail"),
          [(r.name, r.passed, r.value, r.tol, r.detail) for r in results])
    ok = all(r.passed for r in results)
    info = {"checks": len(results), "failed": [r.name for r in results if not r.passed], "fast": fast}
    w.json("verify.json", {"results": [r.to_dict() for r in results], **info})
    return ("ok" if ok else "failed"), (EXIT_OK if ok else EXIT_NEGATIVE), info


def _policy(cfg: RunConfig) -> DtPolicy:
    b = cfg.section("blowup")
    return DtPolicy(growth=b["growth"], rel_tol=b["rel_tol"], max_levels=b["max_levels"])


def _run_blowup(cfg: RunConfig, w: _Writer) -> tuple[str, int, dict]:
    U0, F = build_initial(cfg), build_forcing(cfg)
    verdict = detect_blowup(cfg.params, U0, F, theta=cfg.section("blowup")["theta"], policy=_policy(cfg))
    w.json("blowup.json", verdict.to_dict())
    w.csv("blowup_levels.csv", ("level", "dt0", "growth", "status", "crossing", "t", "peak_phi", "steps", "rejected"),
          [(i, h["dt0"], h["growth"], h["status"], h["crossing"], h["t"], h["peak_phi"], h["steps"], h["rejected"])
           for i, h in enumerate(verdict.history)])
    info = {"outcome": verdict.outcome, "T_m": verdict.T_m, "peak_phi": verdict.peak_phi, "levels": len(verdict.history)}
    code = EXIT_NEGATIVE if verdict.outcome == "inconclusive" else EXIT_OK
    return verdict.outcome, code, info


def _run_certify(cfg: RunConfig, w: _Writer) -> tuple[str, int, dict]:
    c = cfg.section("certify")
    U0, F = build_initial(cfg), build_forcing(cfg)
    try:
        cert = small_data_certificate(cfg.params, cfg.domain, trials=c["trials"], seed=cfg.seed)
        if c["radius"] > 0:
            cert = cert.with_radius(c["radius"])
        w.json("certificate.json", cert.to_dict())
        report = monitored_global_run(cfg.params, U0, F, cert)
    except (NotApplicable, PreconditionError) as exc:
        info = {"error": type(exc).__name__, "message": str(exc)}
        w.json("certify.json", info)
        return "not_applicable", EXIT_NEGATIVE, info
    if report.trajectory is not None:
        w.csv("trajectory.csv", DIAG_COLUMNS, _trajectory_rows(report.trajectory))
    info = report.to_dict()
    w.json("certify.json", info)
    summary = {k: info[k] for k in ("passed", "blowup", "margin_r2", "margin_r", "phi_max", "coercivity_failures")}
    summary.update(eps1=cert.eps1, r=cert.r, N=cert.N)
    return ("passed" if report.passed else "failed"), (EXIT_OK if report.passed else EXIT_NEGATIVE), summary


def _sweep_cell(job):
    params, domain, mode, amp, theta, policy = job
    U0 = eigenmode(domain, mode, amp)
    v = detect_blowup(params, U0, None, theta=theta, policy=policy)
    return v.outcome, v.T_m, v.peak_phi, len(v.history)


def _run_sweep(cfg: RunConfig, w: _Writer, threads: int = 1) -> tuple[str, int, dict]:
    sw = cfg.section("sweep")
    mode = (sw["mode"],) * cfg.domain.dim
    theta = cfg.section("blowup")["theta"]
    policy = _policy(cfg)
    cells = [(float(k), float(a)) for k in sw["kappa"] for a in sw["amplitude"]]
    jobs = [(cfg.params.replace(kappa=k), cfg.domain, mode, a, theta, policy) for k, a in cells]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]
    w.csv("sweep.csv", ("kappa", "amplitude", "outcome", "T_m", "peak_phi", "levels"),
          [(k, a, *res) for (k, a), res in zip(cells, results)])
    counts: dict[str, int] = {}
    for res in results:
        counts[res[0]] = counts.get(res[0], 0) + 1
    code = EXIT_NEGATIVE if counts.get("inconclusive") else EXIT_OK
    return ("ok" if code == EXIT_OK else "inconclusive"), code, {"cells": len(cells), "outcomes": counts}


_SCENARIOS = {
    "simulate": _run_simulate,
    "fixed_point": _run_fixed_point,
    "verify": _run_verify,
    "blowup": _run_blowup,
    "certify": _run_certify,
}


def execute(cfg: RunConfig, out_dir: str | os.PathLike | None = None, threads: int = 1) -> RunManifest:
    """Run the configured scenario and write its outputs plus ``manifest.json``.

    Any stale manifest is removed first, so a directory without one holds an
    incomplete run. Module errors other than the expected negative outcomes
    are re-raised after a manifest flagged ``partial`` has been written.
    """
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / MANIFEST).unlink(missing_ok=True)
    w = _Writer(out)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    t0 = time.perf_counter()
    w.json("config.json", cfg.resolved)
    error = None
    try:
        if cfg.scenario == "sweep":
            status, code, summary = _run_sweep(cfg, w, threads)
        else:
            status, code, summary = _SCENARIOS[cfg.scenario](cfg, w)
        partial = False
    except ConfigurationError:
        raise
    except Exception as exc:  # noqa: BLE001
        error = exc
        status, code, partial = "error", EXIT_NEGATIVE, True
        summary = {"error": type(exc).__name__, "message": f"scenario {cfg.scenario}: {exc}"}
    manifest = RunManifest(
        config=cfg.resolved,
        version=__version__,
        scenario=cfg.scenario,
        status=status,
        exit_code=code,
        partial=partial,
        started=started,
        wall_clock_s=time.perf_counter() - t0,
        summary=summary,
        files=w.checksums(),
        backend=kernels.BACKEND,
        python=platform.python_version(),
    )
    _write_atomic(out / MANIFEST, manifest.to_dict())
    if error is not None:
        raise error
    return manifest


# --------------------------------------------------------------------------- argument parsing


_VERIFY_DEFAULT = """
scenario = "verify"
[domain]
lengths = ["pi"]
sizes = [64]
"""


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, metavar="N", help="seed (overrides the config)")
    common.add_argument("--dt", type=float, metavar="X", help="time step (overrides the config)")
    common.add_argument("--threads", type=int, default=1, metavar="K", help="worker processes for sweeps")

    p = argparse.ArgumentParser(prog="cgllab", description="Complex Ginzburg-Landau laboratory.")
    p.add_argument("--version", action="version", version=f"cgllab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run the scenario named in a config")
    r.add_argument("config", help="TOML config path, or - for stdin")
    v = sub.add_parser("verify", parents=[common], help="run the property suite")
    v.add_argument("--fast", action="store_true", help="smaller sample counts")
    v.add_argument("--config", help="optional config (domain section is ignored by the suite)")
    s = sub.add_parser("sweep", parents=[common], help="blow-up verdicts over kappa x amplitude")
    s.add_argument("config")
    c = sub.add_parser("certify", parents=[common], help="small-data certificate and monitored run")
    c.add_argument("config")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "verify":
            cfg = parse_config(args.config) if args.config else parse_config_text(_VERIFY_DEFAULT)
            cfg.resolved["verify"]["fast"] = bool(args.fast or cfg.resolved["verify"]["fast"])
            scenario = "verify"
        else:
            cfg = parse_config(args.config)
            scenario = {"run": None, "sweep": "sweep", "certify": "certify"}[args.command]
        if args.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        if args.dt is not None and not args.dt > 0:
            raise ConfigurationError("--dt must be positive")
        cfg = cfg.with_overrides(seed=args.seed, dt=args.dt, out=args.out, scenario=scenario)
        manifest = execute(cfg, threads=args.threads)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    print(f"{manifest.scenario}: {manifest.status} (exit {manifest.exit_code}) -> {Path(cfg.out).resolve()}")
    print(json.dumps(_json_safe(manifest.summary), sort_keys=True))
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())

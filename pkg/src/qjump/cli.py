"""``qjump`` command-line front end.

Every subcommand reads a flat config (see :mod:`qjump.config`), writes its
files under ``<out>/<subcommand>/`` and prints one JSON summary line. Exit
codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import analytics, heterodyne, mcwf, semiclassical, steady
from .config import ConfigError, RunConfig, load_config, parse_config
from .fock import GridSpec, coherent_ket, superposition_ket, wigner_function
from .models import ModelParams

__all__ = ["main", "dispatch", "bench_table"]

COMMANDS = ("mcwf", "heterodyne", "charge", "steady", "semiclassical", "analytics", "kerr", "bench")


class NumericalFailure(RuntimeError):
    pass


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True, default=_jsonable))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Path):
        return str(x)
    raise TypeError(type(x))


def _tag(cfg: RunConfig) -> str:
    """Short content hash of the validated settings."""
    items = sorted((k, repr(v)) for k, v in cfg.values.items() if k not in ("out_dir", "workers"))
    return hashlib.sha256(repr(items).encode()).hexdigest()[:10]


def _out_dir(args, cfg: RunConfig, command: str) -> Path:
    base = args.out or os.environ.get("QJUMP_OUT") or cfg["out_dir"]
    d = Path(base) / command
    d.mkdir(parents=True, exist_ok=True)
    return d


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    over = list(args.override or [])
    if args.seed is not None:
        over.append(f"seed={args.seed}")
    if args.traj is not None:
        over.append(f"n_traj={args.traj}")
    if args.workers is not None:
        over.append(f"workers={args.workers}")
    return cfg.with_overrides(over) if over else cfg


def _field_ket(cfg: RunConfig):
    kind, L = cfg["initial"], cfg["l_max"]
    if kind == "vacuum":
        v = np.zeros(L + 1, dtype=complex)
        v[0] = 1.0
        return v
    if kind == "coherent":
        return coherent_ket(cfg["alpha0"], L)
    if kind == "superposition":
        if cfg["alpha1"] is None or cfg["alpha2"] is None:
            raise ConfigError("a superposition needs alpha1 and alpha2")
        return superposition_ket(cfg["alpha1"], cfg["alpha2"], L)
    raise ConfigError(f"initial = {kind} is not a single ket")


def _write_matrix_csv(path: Path, rho: np.ndarray) -> None:
    m, n = np.indices(rho.shape)
    data = np.column_stack([m.ravel(), n.ravel(), rho.real.ravel(), rho.imag.ravel()])
    np.savetxt(path, data, delimiter=",", header="m,n,re,im", comments="", fmt=["%d", "%d", "%.12g", "%.12g"])


# ------------------------------------------------------------------ commands


def cmd_mcwf(args, cfg):
    p = cfg.params()
    out = _out_dir(args, cfg, "mcwf")
    psi0 = None if cfg["initial"] == "vacuum" else _field_ket(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        recs = mcwf.run_ensemble(p, cfg["l_max"], cfg["dt"], cfg["t_final"], cfg["n_traj"], cfg["seed"],
                                 workers=cfg["workers"], psi0=psi0, sample_every=cfg["sample_every"],
                                 snapshot_times=cfg["snapshot_times"])
    tag = _tag(cfg)
    files = []
    for i, rec in enumerate(recs):
        stem = f"record_{tag}_s{cfg['seed']}_t{i}_v{mcwf.SCHEMA_VERSION}"
        path = out / f"{stem}.jsonl"
        rec.to_jsonl(path)
        files.append(path.name)
        for k, (ts, ket) in enumerate(rec.snapshots):
            _write_matrix_csv(out / f"{stem}_snap{k}.csv", mcwf.cavity_state(ket, cfg["l_max"]))
    counts = mcwf.classify_jumps(*recs)
    return {
        "n_traj": len(recs),
        "upward": counts.upward,
        "downward": counts.downward,
        "upward_fraction": counts.fraction,
        "mean_n_final": float(np.mean([r.sample_n[-1] for r in recs])),
        "warnings": sorted({str(w.message).split(": ", 1)[-1] for w in caught}),
        "files": files,
    }


def cmd_heterodyne(args, cfg):
    if args.action not in (None, "run"):
        raise ConfigError(f"unknown heterodyne action {args.action!r}")
    p = cfg.params()
    out = _out_dir(args, cfg, "heterodyne")
    psi0 = None if cfg["initial"] == "vacuum" else _field_ket(cfg)
    seeds = [mcwf.derive_seed(cfg["seed"], i) for i in range(cfg["n_traj"])]
    recs = heterodyne.run_heterodyne_batch(p, cfg["l_max"], cfg["dt"], cfg["t_final"], seeds, psi0,
                                           cfg["sample_every"])
    tag = _tag(cfg)
    files = []
    for i, rec in enumerate(recs):
        path = out / f"heterodyne_{tag}_s{cfg['seed']}_t{i}_v{mcwf.SCHEMA_VERSION}.csv"
        rec.to_csv(path)
        files.append(path.name)
    return {
        "n_traj": len(recs),
        "mean_n_final": float(np.mean([r.sample_n[-1] for r in recs])),
        "noise": recs[0].noise_covariance_check(),
        "files": files,
    }


def cmd_charge(args, cfg):
    action = args.action or "sample"
    if action not in ("sample", "test"):
        raise ConfigError(f"unknown charge action {action!r}")
    out = _out_dir(args, cfg, "charge")
    n = cfg["n_traj"]
    seeds = [mcwf.derive_seed(cfg["seed"], i) for i in range(n)]
    tag = _tag(cfg)
    if cfg["initial"] == "mixture":
        amps, w = cfg["meter_amplitudes"], cfg["meter_weights"]
        if not amps:
            raise ConfigError("initial = mixture needs meter_amplitudes and meter_weights")
        l_max = max(cfg["l_max"], int(np.ceil(max(abs(a) for a in amps) ** 2 + 8 * max(abs(a) for a in amps) + 16)))
        comps = np.column_stack([coherent_ket(a, l_max) for a in amps])
        recs = heterodyne.charge_records(comps, seeds, weights=w, n_steps=cfg["nu_steps"], trace_every=10**9)
        q = np.array([r.q_tilde for r in recs])
        branch = np.argmin(np.abs(np.conj(q)[:, None] - np.asarray(amps)[None, :]), axis=1)
        summary = {"branch_frequencies": np.bincount(branch, minlength=len(amps)).astype(float) / n}
    else:
        psi0 = _field_ket(cfg)
        if action == "test":
            rep = heterodyne.charge_distribution_test(psi0, n, cfg["seed"], n_steps=cfg["nu_steps"])
            return {"chi2": rep.statistic, "dof": rep.dof, "p_value": rep.p_value, "passed": rep.passed}
        recs = heterodyne.charge_records(psi0, seeds, n_steps=cfg["nu_steps"], trace_every=10**9)
        q = np.array([r.q_tilde for r in recs])
        branch = np.full(n, -1)
        summary = {"mean_conj_q": complex(np.mean(np.conj(q)))}
    path = out / f"charge_{tag}_s{cfg['seed']}_v{mcwf.SCHEMA_VERSION}.csv"
    data = np.column_stack([np.arange(n), q.real, q.imag, branch])
    np.savetxt(path, data, delimiter=",", header="run_id,re_q,im_q,branch", comments="",
               fmt=["%d", "%.12g", "%.12g", "%d"])
    summary.update(n_samples=n, files=[path.name])
    return summary


def cmd_steady(args, cfg):
    p = cfg.params()
    out = _out_dir(args, cfg, "steady")
    rep = steady.steady_state(p, cfg["l_max"], tol=cfg["tol"], method=cfg["steady_method"])
    tag = _tag(cfg)
    path = out / f"steady_{tag}_v{mcwf.SCHEMA_VERSION}.csv"
    path.write_text(f"n_ss,g2,residual,method\n{rep.photon_number:.10g},{rep.g2_zero:.10g},"
                    f"{rep.residual:.3e},{rep.method}\n")
    files = [path.name]
    if cfg["write_grids"]:
        from .fock import q_function
        grid = GridSpec.square(cfg["grid_half_width"], cfg["grid_n"])
        _write_matrix_csv(out / f"rho_{tag}.csv", rep.rho_cav)
        q_function(rep.rho_cav, grid).to_csv(out / f"q_{tag}.csv")
        wigner_function(rep.rho_cav, grid).to_csv(out / f"w_{tag}.csv")
        files += [f"rho_{tag}.csv", f"q_{tag}.csv", f"w_{tag}.csv"]
    return {"n_ss": rep.photon_number, "g2": rep.g2_zero, "residual": rep.residual, "files": files}


def cmd_semiclassical(args, cfg):
    p = cfg.params()
    out = _out_dir(args, cfg, "semiclassical")
    roots = semiclassical.neoclassical_roots(p)
    tag = _tag(cfg)
    path = out / f"roots_{tag}.csv"
    lines = ["label,amp_scaled_sq,amp_unscaled"]
    lines += [f"{r.label},{r.amp_scaled_sq:.12g},{r.amp_unscaled:.12g}" for r in roots.roots]
    path.write_text("\n".join(lines) + "\n")
    files = [path.name]
    summary = {"roots": {r.label: r.amp_unscaled for r in roots.roots}, "n_scale": roots.n_scale}
    if cfg["mbe_t_final"] > 0:
        s0 = semiclassical.SemiclassicalState(cfg["alpha0"], 0j, -1.0)
        tr = semiclassical.mbe_integrate(s0, p, cfg["mbe_t_final"], cfg["dt"], sample_every=cfg["sample_every"])
        data = np.column_stack([tr.t, tr.alpha.real, tr.alpha.imag, tr.beta.real, tr.beta.imag, tr.zeta])
        mpath = out / f"mbe_{tag}.csv"
        np.savetxt(mpath, data, delimiter=",", header="t,re_alpha,im_alpha,re_beta,im_beta,zeta",
                   comments="", fmt="%.12g")
        files.append(mpath.name)
        summary["bloch_drift"] = float(np.max(np.abs(tr.bloch_length - 1.0)))
    summary["files"] = files
    return summary


def cmd_analytics(args, cfg):
    action = args.action or "overlay"
    if cfg["alpha1"] is None or cfg["alpha2"] is None:
        raise ConfigError("analytics needs alpha1 and alpha2")
    s = analytics.SuperpositionSpec(cfg["alpha1"], cfg["alpha2"])
    if action == "bound":
        return {"dt_end_min": semiclassical.localization_bound(s.alpha1, s.alpha2),
                "dt_end": semiclassical.localization_intersection(s.alpha1, s.alpha2),
                "n_initial": analytics.initial_superposition_photon(s)}
    if action != "overlay":
        raise ConfigError(f"unknown analytics action {action!r}")
    if not cfg["record"]:
        raise ConfigError("analytics overlay needs record = <record file>")
    rec = mcwf.PhotonRecord.from_jsonl(cfg["record"])
    window = None
    if cfg["window_start"] is not None and cfg["window_end"] is not None:
        window = (cfg["window_start"], cfg["window_end"])
    ov = analytics.build_jump_overlay(rec, s, window)
    out = _out_dir(args, cfg, "analytics")
    mask = np.abs(rec.sample_t - ov.t_mid) <= ov.dt_end
    t, n = rec.sample_t[mask], rec.sample_n[mask]
    tau = np.abs(t - ov.t_mid)
    fwd = np.asarray(analytics.null_record_photon_exact(s, tau), dtype=float)
    n_fwd = np.where(t >= ov.t_mid, fwd, np.nan)
    n_inv = np.where(t <= ov.t_mid, 2.0 * ov.n_mid - fwd, np.nan)
    path = out / f"overlay_{_tag(cfg)}.csv"
    np.savetxt(path, np.column_stack([t, n, n_fwd, n_inv]), delimiter=",",
               header="t,n_record,n_forward,n_inverted", comments="", fmt="%.12g")
    return {"t_mid": ov.t_mid, "n_mid": ov.n_mid, "dt_end": ov.dt_end,
            "deviation": analytics.overlay_deviation(ov, rec), "files": [path.name]}


def cmd_kerr(args, cfg):
    p = cfg.params()
    if p.model != "kerr":
        raise ConfigError("kerr needs model = kerr")
    out = _out_dir(args, cfg, "kerr")
    rep = steady.steady_state(p, cfg["l_max"], tol=cfg["tol"], method=cfg["steady_method"])
    grid = GridSpec.square(cfg["grid_half_width"], cfg["grid_n"])
    w_num = wigner_function(rep.rho_cav, grid)
    w_ana = steady.kerr_wigner_grid(p, grid)
    w_num_n = steady.normalize_over(w_num.values, grid)
    err = float(np.max(np.abs(w_num_n.values - w_ana.values)))
    tag = _tag(cfg)
    w_ana.to_csv(out / f"w_analytic_{tag}.csv")
    w_num_n.to_csv(out / f"w_numeric_{tag}.csv")
    return {"n_ss": rep.photon_number, "g2": rep.g2_zero, "wigner_max_error": err,
            "files": [f"w_analytic_{tag}.csv", f"w_numeric_{tag}.csv"]}


def bench_table() -> dict:
    """Deterministic benchmark values, keyed as in the packaged ``expected.json``."""
    jc = ModelParams.jc
    vals = {}
    r1 = steady.steady_state(jc(25, 5.3, -8), 25)
    vals["steady_fig1_n"], vals["steady_fig1_g2"] = r1.photon_number, r1.g2_zero
    r2 = steady.steady_state(jc(60, 13.5, -8), 70)
    vals["steady_fig2_n"], vals["steady_fig2_g2"] = r2.photon_number, r2.g2_zero
    for key, pt in (("two", "two_photon"), ("three", "three_photon")):
        r = steady.multiphoton_reference(jc(**steady.MULTIPHOTON_POINTS[pt]), 20)
        vals[f"multiphoton_{key}_n"], vals[f"multiphoton_{key}_g2"] = r.photon_number, r.g2_zero
    vals["bound_fig2"] = semiclassical.localization_bound(1.7 - 5.15j, -2.25 - 0.2j)
    vals["bound_semiclassical"] = semiclassical.localization_bound(5.30, 2.08)
    vals["bound_ramp_twice"] = 2.0 * semiclassical.localization_bound(1.9 - 3.95j, 1.4 - 0.8j)
    vals["intersection_fig2"] = semiclassical.localization_intersection(1.7 - 5.15j, -2.25 - 0.2j)
    vals["intersection_alt"] = semiclassical.localization_intersection(abs(1.8 - 5.45j), 1.8)
    roots = semiclassical.neoclassical_roots(jc(60, 13.5, -8))
    vals["root_unstable_modulus"], vals["root_bright_modulus"] = roots.amplitudes[1], roots.amplitudes[2]
    pk = ModelParams.kerr(2.0, 16.5, 20.0)
    rk = steady.steady_state(pk, 40)
    vals["kerr_n"], vals["kerr_g2"] = rk.photon_number, rk.g2_zero
    grid = GridSpec.square(6.0, 121)
    w_num = steady.normalize_over(wigner_function(rk.rho_cav, grid).values, grid)
    vals["kerr_wigner_max_error"] = float(np.max(np.abs(w_num.values - steady.kerr_wigner_grid(pk, grid).values)))
    return vals


def _expected() -> dict:
    return json.loads(resources.files("qjump").joinpath("data/expected.json").read_text())


def cmd_bench(args, cfg):
    expected = _expected()
    got = bench_table()
    rows, failed = [], []
    for key, spec in expected.items():
        v = got[key]
        tol = spec.get("abs_tol", spec.get("rel_tol", 0.0) * abs(spec["value"]))
        ok = abs(v - spec["value"]) <= tol
        rows.append(f"{key},{v:.6g},{spec['value']},{tol:.3g},{'pass' if ok else 'FAIL'}")
        if not ok:
            failed.append(key)
    out = _out_dir(args, cfg, "bench")
    path = out / "bench.csv"
    path.write_text("key,computed,expected,tolerance,status\n" + "\n".join(rows) + "\n")
    if failed:
        raise NumericalFailure(f"bench values outside tolerance: {', '.join(failed)}")
    return {"checked": len(rows), "failed": failed, "files": [path.name]}


HANDLERS = {
    "mcwf": cmd_mcwf,
    "heterodyne": cmd_heterodyne,
    "charge": cmd_charge,
    "steady": cmd_steady,
    "semiclassical": cmd_semiclassical,
    "analytics": cmd_analytics,
    "kerr": cmd_kerr,
    "bench": cmd_bench,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qjump", description="Quantum-jump simulations of driven JC bistability.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("action", nargs="?", default=None,
                    help="heterodyne: run; charge: sample|test; analytics: overlay|bound")
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--traj", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", metavar="DIR")
    ap.add_argument("--override", action="append", metavar="KEY=VALUE")
    return ap


def dispatch(argv) -> int:
    """Run one subcommand; returns the process exit code."""
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = _config(args)
        summary = HANDLERS[args.command](args, cfg)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        _emit({"command": args.command, "status": "error", "kind": "validation", "message": str(exc)})
        return 1
    except (ArithmeticError, RuntimeError) as exc:
        _emit({"command": args.command, "status": "error", "kind": "numerical", "message": str(exc)})
        return 2
    _emit({"command": args.command, "status": "ok", **summary})
    return 0


def main(argv=None) -> None:
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()

"""Command-line front end.

    phasekit <analyze|sweep|simulate|validate> --config PATH [--out PATH] [--threads N] [--suite NAME]

Exit codes: 0 success, 1 validation failures, 2 invalid configuration,
3 numerical failure.  Output files are deterministic: keys are sorted,
floats use the shortest round-trip representation and no wall-clock data
is written.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import __version__
from .acceptance import SUITES, format_table, run_suite
from .characteristics import classify_point, nearest_characteristic
from .errors import ConfigError, NearDoubleRootWarning, NumericalError, PhasekitError
from .models import (
    MARGINAL_STABILITY_M,
    HonlsParams,
    StokesParams,
    StratParams,
    honls_degenerate_point,
    honls_model,
    mode_speed,
    polynomial_omega0,
    stokes_model,
    stratified_model,
)
from .pdesim import GridSpec, integrate_reduced, kdv_soliton, kink_pair_initial, track_front_speed
from .reduction import assemble_gardner, attach_dispersion, consistency_report, normalized_coefficients, track_dispersion_branch
from .tensors import ConservationModel, PhasePoint

SCHEMA_VERSION = 1
COMMANDS = ("analyze", "sweep", "simulate", "validate")

# ---------------------------------------------------------------------------
# model registry


def _take(params: dict, allowed: dict, model: str) -> dict:
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {model} parameter(s): {sorted(unknown)}")
    out = {}
    for key, default in allowed.items():
        if key not in params:
            if default is _REQUIRED:
                raise ConfigError(f"{model} parameter {key!r} is required")
            out[key] = default
        else:
            out[key] = params[key]
    return out


_REQUIRED = object()


def _build_honls(params: dict) -> ConservationModel:
    p = _take(params, {"alpha1": _REQUIRED, "alpha2": _REQUIRED, "beta": _REQUIRED, "k": 0.0, "omega": None, "degenerate": False}, "honls")
    if p["degenerate"]:
        hp = honls_degenerate_point(float(p["alpha1"]), float(p["alpha2"]), float(p["beta"]), float(p["k"]))
    else:
        if p["omega"] is None:
            raise ConfigError("honls needs 'omega' unless 'degenerate' is true")
        hp = HonlsParams(float(p["alpha1"]), float(p["alpha2"]), float(p["beta"]), float(p["k"]), float(p["omega"]))
    if hp.beta_nl == 0:
        raise ConfigError("honls 'beta' must be nonzero")
    return honls_model(hp)


def _build_stokes(params: dict) -> ConservationModel:
    p = _take(params, {"omega0": _REQUIRED, "omega2": _REQUIRED, "a": _REQUIRED, "k": 0.0, "omega_curvature": 0.0, "full_dispersion": False}, "stokes")
    if not isinstance(p["omega0"], list) or not p["omega0"]:
        raise ConfigError("stokes 'omega0' must be a list of polynomial coefficients (constant term first)")
    sp = StokesParams(polynomial_omega0(p["omega0"]), float(p["omega2"]), float(p["a"]), float(p["k"]), float(p["omega_curvature"]), bool(p["full_dispersion"]))
    return stokes_model(sp)


def _build_stratified(params: dict) -> ConservationModel:
    p = _take(params, {"rho1": _REQUIRED, "rho2": _REQUIRED, "rho3": _REQUIRED, "H1": _REQUIRED, "H2": _REQUIRED, "H3": _REQUIRED, "g": 9.81}, "stratified3")
    return stratified_model(StratParams(**{k: float(v) for k, v in p.items()}))


MODEL_REGISTRY: dict = {
    "honls": _build_honls,
    "stokes": _build_stokes,
    "stratified3": _build_stratified,
}


def register_model(name: str, builder: Callable[[dict], ConservationModel]) -> None:
    """Make an external model available to configs as ``{"name": name, "params": {...}}``."""
    MODEL_REGISTRY[name] = builder


def build_model(model_cfg: dict) -> ConservationModel:
    if not isinstance(model_cfg, dict) or "name" not in model_cfg:
        raise ConfigError("'model' must be an object with a 'name'")
    name = model_cfg["name"]
    if name not in MODEL_REGISTRY:
        raise ConfigError(f"unknown model {name!r}; registered: {sorted(MODEL_REGISTRY)}")
    params = model_cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'model.params' must be an object")
    try:
        return MODEL_REGISTRY[name](params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name} parameters: {exc}") from exc
    except NumericalError:
        raise
    except PhasekitError as exc:
        raise ConfigError(f"invalid {name} parameters: {exc}") from exc


# ---------------------------------------------------------------------------
# config and output helpers


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    return cfg


def clean(obj):
    """Convert numpy scalars/arrays to plain JSON types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [clean(z.real), clean(z.imag)]
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _fmt(v) -> str:
    v = clean(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ";".join(_fmt(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row.get(h)) for h in header])
    return buf.getvalue()


def _point_from(cfg: dict, model: ConservationModel) -> PhasePoint:
    pt = cfg.get("point")
    if pt is None:
        if model.default_point is None:
            raise ConfigError("model has no default point; give 'point'")
        return model.default_point
    try:
        return PhasePoint(pt["k"], pt["omega"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid 'point': {exc}") from exc


# ---------------------------------------------------------------------------
# analysis of one point


def _select(result, selector, model: ConservationModel):
    chars = result.characteristics
    real = [i for i, ch in enumerate(chars) if ch.is_real]
    if not real:
        return None
    if selector in (None, "auto"):
        # the characteristic closest to linear degeneracy (relative GN)
        def rel_gn(i):
            ch = chars[i]
            return abs(result.gn_scalars[i]) / (1.0 + abs(ch.speed)) ** 3

        return min(real, key=rel_gn)
    if isinstance(selector, dict) and "mode" in selector:
        if model.name != "stratified3":
            raise ConfigError("'mode' selection applies to stratified3 only")
        p = StratParams(**model.metadata["params"])
        target = mode_speed(p, int(selector["mode"]), int(selector.get("sign", 1)))
        return chars.index(nearest_characteristic([chars[i] for i in real], target))
    if isinstance(selector, dict) and "speed" in selector:
        target = float(selector["speed"])
        return min(real, key=lambda i: abs(chars[i].speed - target))
    if isinstance(selector, int) and not isinstance(selector, bool):
        if not 0 <= selector < len(real):
            raise ConfigError(f"characteristic index {selector} out of range (0..{len(real) - 1})")
        return real[selector]
    raise ConfigError("'characteristic' must be 'auto', an index, {'mode': m} or {'speed': c}")


def analyze_point(model: ConservationModel, point: PhasePoint, opts: dict) -> dict:
    """Classification, reduction and consistency checks at one point."""
    use_analytic = bool(opts.get("use_analytic", True))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearDoubleRootWarning)
        res = classify_point(model, point, use_analytic=use_analytic)
    chars = []
    for ch, gn, deg in zip(res.characteristics, res.gn_scalars, res.degenerate_flags):
        chars.append(
            {
                "c": ch.c if ch.is_real else complex(ch.c),
                "real": ch.is_real,
                "zeta": ch.zeta if np.isrealobj(ch.zeta) else [complex(z) for z in ch.zeta],
                "simplicity_gap": ch.simplicity_gap,
                "det_residual": ch.det_residual,
                "gn_scalar": gn,
                "degenerate": bool(deg),
            }
        )
    report = {
        "regime": res.regime,
        "n_infinite": res.n_infinite,
        "characteristics": chars,
        "selected": None,
        "coefficients": None,
        "consistency": None,
        "notes": [],
    }
    idx = _select(res, opts.get("characteristic", "auto"), model)
    if idx is None or res.regime == "Elliptic":
        report["notes"].append("no real characteristic: no reduction")
        return report
    ch = res.characteristics[idx]
    report["selected"] = idx
    co = assemble_gardner(res.bundle, ch.speed, ch.zeta)
    if model.dispersion_implicit is not None:
        nu_default = 0.05
        if model.name == "stratified3":
            nu_default = 0.05 / StratParams(**model.metadata["params"]).depth
        nu_max = float(opts.get("nu_max", nu_default))
        n_samples = int(opts.get("n_samples", 21))
        try:
            branch = track_dispersion_branch(model, point, ch.speed, nu_max, n_samples)
            co = attach_dispersion(co, branch)
            report["consistency"] = consistency_report(co, branch).as_dict()
            report["notes"].append("gamma from the tracked dispersion branch; the gamma identity check is tautological here")
        except PhasekitError as exc:
            report["notes"].append(f"dispersion branch unavailable: {exc.code}: {exc}")
    else:
        report["notes"].append("model has no dispersion relation: gamma unset")
    report["coefficients"] = co.as_dict()
    return report


def cmd_analyze(cfg: dict, args) -> tuple:
    model = build_model(cfg.get("model"))
    point = _point_from(cfg, model)
    rep = analyze_point(model, point, cfg.get("analyze", {}))
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "analyze",
        "model": {"name": model.name, "params": cfg["model"].get("params", {})},
        "point": {"k": point.k, "omega": point.omega},
        **rep,
    }
    lines = [f"model {model.name}: regime {rep['regime']}"]
    for i, ch in enumerate(rep["characteristics"]):
        mark = "*" if i == rep["selected"] else " "
        lines.append(f" {mark} c = {clean(ch['c'])}  gn = {clean(ch['gn_scalar'])}  degenerate = {ch['degenerate']}")
    if rep["coefficients"]:
        co = rep["coefficients"]
        lines.append(
            f"{co['kind']}: delta/alpha = {co['delta_over_alpha']!r}, beta/alpha = {co['beta_over_alpha']!r}, gamma/alpha = {co['gamma_over_alpha']!r}"
        )
    return out, "\n".join(lines), 0


# ---------------------------------------------------------------------------
# sweeps


def _axis(axis_cfg) -> tuple:
    if not isinstance(axis_cfg, dict) or "name" not in axis_cfg:
        raise ConfigError("sweep axes need a 'name'")
    if "values" in axis_cfg:
        vals = [float(v) for v in axis_cfg["values"]]
    else:
        try:
            vals = np.linspace(float(axis_cfg["start"]), float(axis_cfg["stop"]), int(axis_cfg["num"])).tolist()
        except KeyError as exc:
            raise ConfigError(f"sweep axis needs 'values' or start/stop/num: missing {exc}") from exc
    if not vals:
        raise ConfigError("empty sweep axis")
    return axis_cfg["name"], vals


def _cell_params(model_cfg: dict, names, vals) -> dict:
    params = dict(model_cfg.get("params", {}))
    for n, v in zip(names, vals):
        if n not in params and not (model_cfg["name"] == "stratified3" and n in ("H1", "H2", "H3")):
            if model_cfg["name"] != "honls" or n not in ("k", "omega"):
                raise ConfigError(f"sweep axis {n!r} is not a parameter of model {model_cfg['name']!r}")
        params[n] = v
    if model_cfg["name"] == "stratified3":
        thick = [n for n in names if n in ("H1", "H2", "H3")]
        base = model_cfg.get("params", {})
        if len(thick) == 2:
            depth = sum(float(base[h]) for h in ("H1", "H2", "H3"))
            (free,) = [h for h in ("H1", "H2", "H3") if h not in thick]
            params[free] = depth - sum(float(params[t]) for t in thick)
    return params


def _sweep_cell(model_cfg: dict, names, vals, opts: dict) -> dict:
    row = {names[0]: vals[0], names[1]: vals[1], "valid": False, "reason": ""}
    try:
        params = _cell_params(model_cfg, names, vals)
        model = build_model({"name": model_cfg["name"], "params": params})
        rep = analyze_point(model, model.default_point, opts)
    except PhasekitError as exc:
        row["reason"] = f"{exc.code}: {exc}"
        return row
    row.update(valid=True, regime=rep["regime"])
    chars = rep["characteristics"]
    row["chars_c"] = [ch["c"] for ch in chars]
    row["chars_gn"] = [ch["gn_scalar"] for ch in chars]
    row["chars_degenerate"] = [ch["degenerate"] for ch in chars]
    co = rep["coefficients"]
    if co is None:
        row["reason"] = "no real characteristic"
        return row
    row.update(
        c=co["c"],
        gn_scalar=co["gn_scalar"],
        degenerate=co["kind"] == "mKdV",
        kind=co["kind"],
        alpha=co["alpha"],
        delta=co["delta"],
        beta=co["beta"],
        gamma=co["gamma"],
        delta_over_alpha=co["delta_over_alpha"],
        beta_over_alpha=co["beta_over_alpha"],
        gamma_over_alpha=co["gamma_over_alpha"],
        focusing=co["focusing"],
    )
    row["tag"] = "invalid" if co["focusing"] is None else ("focusing" if co["focusing"] else "defocusing")
    return row


_BOUNDARY_FIELDS = {"gn": "gn_scalar", "beta": "beta_over_alpha", "gamma": "gamma_over_alpha"}


def _boundaries(model_cfg, names, v1, v2, rows, opts) -> list:
    grid = [[rows[i * len(v2) + j] for j in range(len(v2))] for i in range(len(v1))]
    out = []
    for which, key in _BOUNDARY_FIELDS.items():
        for i in range(len(v1)):
            for j in range(len(v2)):
                for di, dj in ((1, 0), (0, 1)):
                    if i + di >= len(v1) or j + dj >= len(v2):
                        continue
                    r0, r1 = grid[i][j], grid[i + di][j + dj]
                    f0, f1 = r0.get(key), r1.get(key)
                    if f0 is None or f1 is None or not (r0["valid"] and r1["valid"]) or f0 * f1 >= 0:
                        continue
                    a0, b0, a1, b1 = v1[i], v2[j], v1[i + di], v2[j + dj]

                    def fn(t):
                        r = _sweep_cell(model_cfg, names, (a0 + t * (a1 - a0), b0 + t * (b1 - b0)), opts)
                        if r.get(key) is None:
                            raise ValueError("cell invalid")
                        return r[key]

                    try:
                        t = optimize.brentq(fn, 0.0, 1.0, xtol=1e-12)
                    except (ValueError, PhasekitError):
                        continue
                    out.append({"coefficient": which, names[0]: a0 + t * (a1 - a0), names[1]: b0 + t * (b1 - b0)})
    return out


def _threads(args, cfg) -> int:
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("PHASEKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"PHASEKIT_THREADS must be an integer, got {env!r}") from exc
    return max(1, int(cfg.get("sweep", {}).get("threads", 1)))


def cmd_sweep(cfg: dict, args) -> tuple:
    model_cfg = cfg.get("model")
    build_model(model_cfg)  # validate the base configuration up front
    sw = cfg.get("sweep")
    if not isinstance(sw, dict) or "axis1" not in sw or "axis2" not in sw:
        raise ConfigError("'sweep' needs 'axis1' and 'axis2'")
    n1, v1 = _axis(sw["axis1"])
    n2, v2 = _axis(sw["axis2"])
    names = (n1, n2)
    _cell_params(model_cfg, names, (v1[0], v2[0]))  # axis names must exist
    opts = dict(cfg.get("analyze", {}))
    if "characteristic" in sw:
        opts["characteristic"] = sw["characteristic"]
    jobs = [(a, b) for a in v1 for b in v2]
    threads = _threads(args, cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(lambda ab: _sweep_cell(model_cfg, names, ab, opts), jobs))
    else:
        rows = [_sweep_cell(model_cfg, names, ab, opts) for ab in jobs]
    bounds = _boundaries(model_cfg, names, v1, v2, rows, opts) if sw.get("boundaries", True) else []
    header = [n1, n2, "valid", "reason", "regime", "kind", "c", "gn_scalar", "degenerate", "alpha", "delta", "beta", "gamma",
              "delta_over_alpha", "beta_over_alpha", "gamma_over_alpha", "focusing", "tag", "chars_c", "chars_gn", "chars_degenerate"]
    table = to_csv(header, rows)
    btable = to_csv(["coefficient", n1, n2], bounds)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "model": model_cfg,
        "axes": {n1: v1, n2: v2},
        "rows": len(rows),
        "boundaries": len(bounds),
        "row_order": f"row-major, {n1} outer",
    }
    if model_cfg["name"] == "stratified3":
        meta["marginal_stability_M"] = MARGINAL_STABILITY_M
        meta["marginal_line"] = "1 - M c / a = 0"
    n_focus = sum(1 for r in rows if r.get("tag") == "focusing")
    summary = f"{len(rows)} cells ({sum(r['valid'] for r in rows)} valid, {n_focus} focusing); {len(bounds)} boundary points"
    return {"table": table, "boundaries": btable, "meta": meta}, summary, 0


# ---------------------------------------------------------------------------
# simulation


def _sim_coefficients(cfg: dict):
    sim = cfg["simulate"]
    if "coefficients" in sim:
        c = sim["coefficients"]
        try:
            return normalized_coefficients(float(c.get("delta", 0.0)), float(c.get("beta", 0.0)), float(c["gamma"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid 'simulate.coefficients': {exc}") from exc
    if "model" not in cfg:
        raise ConfigError("simulate needs inline 'coefficients' or a 'model' to analyze")
    model = build_model(cfg["model"])
    rep = analyze_point(model, _point_from(cfg, model), cfg.get("analyze", {}))
    co = rep["coefficients"]
    if co is None or co["gamma_over_alpha"] is None:
        raise ConfigError("the analyzed point gives no complete set of coefficients")
    return normalized_coefficients(co["delta_over_alpha"], co["beta_over_alpha"], co["gamma_over_alpha"], co["kind"])


def cmd_simulate(cfg: dict, args) -> tuple:
    sim = cfg.get("simulate")
    if not isinstance(sim, dict):
        raise ConfigError("'simulate' block missing")
    coeffs = _sim_coefficients(cfg)
    g = sim.get("grid", {})
    try:
        grid = GridSpec(float(g["L"]), int(g["n"]), float(g["dt"]), float(g["t_end"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid 'simulate.grid': {exc}") from exc
    ic = sim.get("initial", {"type": "zero"})
    kind = ic.get("type")
    exact = None
    if kind == "zero":
        u0 = np.zeros(grid.n)
    elif kind == "kink_pair":
        try:
            u0 = kink_pair_initial(float(ic.get("a0", 1.0)), float(ic.get("separation", grid.L)), coeffs, grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif kind == "kdv_soliton":
        amp, x0 = float(ic.get("amplitude", 1.0)), float(ic.get("x0", 0.0))
        if coeffs.beta != 0:
            raise ConfigError("kdv_soliton initial data needs beta = 0")
        try:
            u0, _ = kdv_soliton(coeffs, amp, grid.x, x0)
            exact, _ = kdv_soliton(coeffs, amp, grid.x, x0, grid.t_end)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif kind == "values":
        u0 = np.asarray(ic.get("u"), dtype=float)
        if u0.shape != (grid.n,):
            raise ConfigError("'initial.u' must have n entries")
    else:
        raise ConfigError(f"unknown initial condition type {kind!r}")
    n_snap = int(sim.get("snapshots", 11))
    times = np.linspace(0.0, grid.t_end, max(2, n_snap))
    traj = integrate_reduced(coeffs, u0, grid, snapshot_times=times, log_every=int(sim.get("log_every", 1)))
    drift = traj.drift()
    index = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "grid": asdict(grid),
        "coefficients": {"delta": coeffs.delta, "beta": coeffs.beta, "gamma": coeffs.gamma, "kind": coeffs.kind},
        "initial": {k: v for k, v in ic.items() if k != "u"},
        "drift": drift,
        "snapshots": [],
        "measured_speeds": None,
    }
    if kind == "kink_pair":
        track = track_front_speed(traj, level=float(np.mean([u0.max(), u0.min()])))
        index["measured_speeds"] = track.speeds
        index["r_squared"] = track.r_squared
        index["measured_speed"] = float(np.mean(track.speeds))
    if exact is not None:
        index["shape_error"] = float(np.max(np.abs(traj.snapshots[-1].u - exact)))
    files = []
    for i, st in enumerate(traj.snapshots):
        name = f"snap_{i:04d}.csv"
        index["snapshots"].append({"t": st.t, "file": name})
        files.append((name, to_csv(["x", "u"], [{"x": x, "u": u} for x, u in zip(grid.x, st.u)])))
    summary = f"{len(traj.snapshots)} snapshots to t = {grid.t_end}; mass drift {drift['mass']:.2e}, momentum drift {drift['momentum']:.2e}"
    if index["measured_speeds"] is not None:
        summary += "; front speeds " + ", ".join(f"{s:.6f}" for s in index["measured_speeds"])
    if "shape_error" in index:
        summary += f"; shape error {index['shape_error']:.2e}"
    return {"index": index, "files": files}, summary, 0


# ---------------------------------------------------------------------------
# validation


def cmd_validate(cfg: dict, args) -> tuple:
    val = cfg.get("validate", {}) if cfg else {}
    names = None
    if getattr(args, "suite", None):
        names = [s.strip() for s in args.suite.split(",") if s.strip()]
    elif "suite" in val:
        names = val["suite"] if isinstance(val["suite"], list) else [val["suite"]]
    valid = set(SUITES) | {str(i) for i in range(1, 11)}
    for n in names or []:
        if n not in valid:
            raise ConfigError(f"unknown suite {n!r}; choose from {sorted(valid)}")
    scale = float(val.get("tolerance_scale", 1.0))
    results = run_suite(names, scale, echo=print)
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "validate",
        "suite": names or ["all"],
        "tolerance_scale": scale,
        "results": [{"key": r.key, "title": r.title, "passed": r.passed, "detail": r.detail} for r in results],
        "passed": all(r.passed for r in results),
    }
    summary = format_table(results).splitlines()[-1]
    return out, summary, 0 if out["passed"] else 1


# ---------------------------------------------------------------------------
# entry point


def _emit(command: str, payload, summary: str, out: Optional[str]) -> None:
    if command == "sweep":
        if out is None:
            sys.stdout.write(payload["table"])
            print(summary, file=sys.stderr)
            return
        path = Path(out)
        _write_text(path, payload["table"])
        _write_text(path.with_name(path.stem + "_boundaries.csv"), payload["boundaries"])
        _write_text(path.with_name(path.stem + "_meta.json"), dumps(payload["meta"]))
        print(summary)
        return
    if command == "simulate":
        if out is None:
            sys.stdout.write(dumps(payload["index"]))
            print(summary, file=sys.stderr)
            return
        path = Path(out)
        for name, text in payload["files"]:
            _write_text(path.with_name(f"{path.stem}_{name}"), text)
        index = dict(payload["index"])
        index["snapshots"] = [{"t": s["t"], "file": f"{path.stem}_{s['file']}"} for s in index["snapshots"]]
        _write_text(path, dumps(index))
        print(summary)
        return
    if out is None:
        if command == "validate":
            print(summary)
        else:
            sys.stdout.write(dumps(payload))
            print(summary, file=sys.stderr)
        return
    _write_text(Path(out), dumps(payload))
    print(summary)


def _error(exc: Exception, code: int) -> int:
    err = {"schema_version": SCHEMA_VERSION, "error": {"code": getattr(exc, "code", "error"), "message": str(exc), "exit_code": code}}
    sys.stdout.write(dumps(err))
    print(f"error: {exc}", file=sys.stderr)
    return code


HANDLERS = {"analyze": cmd_analyze, "sweep": cmd_sweep, "simulate": cmd_simulate, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phasekit", description="Whitham characteristics, genuine nonlinearity and KdV/Gardner/mKdV reductions.")
    ap.add_argument("--version", action="version", version=f"phasekit {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration (optional for validate)")
    ap.add_argument("--out", help="output path (JSON report, CSV table or trajectory index)")
    ap.add_argument("--threads", type=int, help="worker threads for sweeps (fallback: PHASEKIT_THREADS)")
    ap.add_argument("--suite", help="validation suite(s), comma separated: " + ", ".join(SUITES))
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            if args.command != "validate":
                raise ConfigError("--config is required")
            cfg = {}
        else:
            cfg = load_config(args.config)
            declared = cfg.get("command")
            if declared is not None and declared != args.command:
                raise ConfigError(f"config is for {declared!r}, not {args.command!r}")
        payload, summary, code = HANDLERS[args.command](cfg, args)
        _emit(args.command, payload, summary, args.out)
        return code
    except ConfigError as exc:
        return _error(exc, 2)
    except NumericalError as exc:
        return _error(exc, 3)
    except PhasekitError as exc:
        return _error(exc, 2)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

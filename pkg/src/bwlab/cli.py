"""Command-line interface.

Every subcommand reads a JSON config (--config), writes its artifacts into
--out, and prints a short human summary (or the full machine-readable
summary with --json). Config files are validated strictly: unknown keys
are rejected so typos fail loudly.

Exit codes: 0 success, 1 domain failure (simulation blew up, no yield
point, degenerate fragility data, ...), 2 configuration problems (bad
JSON, unknown keys, missing files).

Environment: BWLAB_SEED overrides any config seed; BWLAB_THREADS caps the
compiled-kernel thread count.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import nnio, svg
from .dynamics import (FragilityCurve, GroundMotion, IdaConfig, IdaResult,
                       PushoverCurve, fit_fragility, ida, kl_divergence,
                       pushover, time_history, yield_displacement)
from .errors import BwlabError, ConfigError, YieldDetectionError
from .estimation import GaConfig, ga_estimate, hysteresis_area
from .loading import (DEFAULT_STEP_SIZE, LoadingHistory, envelope_history,
                      module_history, optimal_history, reference_history,
                      table_history)
from .model import HysteresisCurve, simulate_quasi_static
from .params import PARAM_NAMES, BwParams, Variant
from .sampling import (NoiseSpec, ParamDistributions, emit_histograms,
                       generate_dataset)

_GA_KEYS = {"generations", "population", "tournament", "crossover_prob",
            "blend_alpha", "mutation_prob", "mutation_scale", "elite",
            "seed", "substeps"}


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_json(path: str | Path, what: str) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{what} {path}: invalid JSON ({err})") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{what} {path}: expected a JSON object")
    return data


def _check_keys(cfg: dict, required: set, optional: set, where: str):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    missing = required - cfg.keys()
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    unknown = cfg.keys() - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _seed_from(cfg: dict, default: int = 0) -> int:
    env = os.environ.get("BWLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as err:
            raise ConfigError(f"BWLAB_SEED must be an integer, got {env!r}") from err
    return int(cfg.get("seed", default))


def _apply_thread_cap():
    env = os.environ.get("BWLAB_THREADS")
    if env is None:
        return
    try:
        n = int(env)
    except ValueError as err:
        raise ConfigError(f"BWLAB_THREADS must be an integer, got {env!r}") from err
    if n < 1:
        raise ConfigError("BWLAB_THREADS must be >= 1")
    import numba
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _parse_params(cfg: dict, where: str) -> BwParams:
    inline = cfg.get("params")
    path = cfg.get("params_file")
    if (inline is None) == (path is None):
        raise ConfigError(f"{where}: give exactly one of params / params_file")
    data = inline if inline is not None else _load_json(path, "params file")
    try:
        return BwParams.from_dict(data)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"{where}: {err}") from err


def _parse_history(cfg: dict, where: str, default_u_y: float | None = None) -> LoadingHistory:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"{where}: history needs a 'kind'")
    kind = cfg["kind"]
    common = {"kind", "u_y_m", "step_size_uy"}
    u_y = cfg.get("u_y_m", default_u_y)
    if u_y is None:
        raise ConfigError(f"{where}: history needs u_y_m")
    step = float(cfg.get("step_size_uy", DEFAULT_STEP_SIZE))
    if kind == "table":
        _check_keys(cfg, {"kind", "index"}, common, where)
        return table_history(int(cfg["index"]), float(u_y), step)
    if kind == "module":
        _check_keys(cfg, {"kind", "category"}, common, where)
        return module_history(str(cfg["category"]), float(u_y), step)
    if kind == "optimal":
        _check_keys(cfg, {"kind", "variant"}, common, where)
        return optimal_history(cfg["variant"], float(u_y), step)
    if kind == "reference":
        _check_keys(cfg, {"kind"}, common | {"amplitudes_uy", "strict"}, where)
        return reference_history(float(u_y), cfg.get("amplitudes_uy"),
                                 strict=bool(cfg.get("strict", True)),
                                 step_size=step)
    if kind == "envelope":
        _check_keys(cfg, {"kind", "peak_uy", "n_cycles"}, common, where)
        return envelope_history(float(cfg["peak_uy"]), int(cfg["n_cycles"]),
                                float(u_y), step_size=step)
    if kind == "custom":
        _check_keys(cfg, {"kind", "amplitudes_uy"}, common | {"label"}, where)
        return LoadingHistory(amplitudes=tuple(cfg["amplitudes_uy"]),
                              u_y=float(u_y), step_size=step,
                              label=str(cfg.get("label", "custom")))
    if kind == "file":
        _check_keys(cfg, {"kind", "path"}, set(), where)
        if not Path(cfg["path"]).is_file():
            raise ConfigError(f"{where}: history file not found: {cfg['path']}")
        return LoadingHistory.load(cfg["path"])
    raise ConfigError(f"{where}: unknown history kind {kind!r}")


def _parse_variant(cfg: dict, where: str, default=None) -> Variant:
    raw = cfg.get("variant", default)
    if raw is None:
        raise ConfigError(f"{where}: missing 'variant'")
    try:
        return Variant(raw)
    except ValueError as err:
        raise ConfigError(
            f"{where}: unknown variant {raw!r} "
            f"(expected one of {[v.value for v in Variant]})") from err


def _parse_ga(cfg: dict, seed: int, where: str) -> GaConfig:
    ga_cfg = cfg.get("ga", {})
    _check_keys(ga_cfg, set(), _GA_KEYS, f"{where}.ga")
    try:
        return GaConfig(**{**ga_cfg, "seed": seed})
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}.ga: {err}") from err


def _emit(summary: dict, as_json: bool):
    if as_json:
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    else:
        for key, val in summary.items():
            if isinstance(val, (dict, list)):
                val = json.dumps(val, sort_keys=True)
            click.echo(f"{key}: {val}")


def _write_json(path: Path, data: dict):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run(fn):
    """Shared error-to-exit-code mapping for subcommand bodies."""
    try:
        _apply_thread_cap()
        fn()
    except ConfigError as err:
        _fail(2, str(err))
    except (BwlabError, ValueError) as err:
        _fail(1, str(err))


@click.group()
@click.version_option(package_name="bwlab")
def main():
    """Hysteresis modeling, identification protocols, and SDOF analysis."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(), help="JSON config file.")
_out_opt = click.option("--out", "out_dir", default=".", show_default=True,
                        type=click.Path(file_okay=False),
                        help="Output directory.")
_json_opt = click.option("--json", "as_json", is_flag=True,
                         help="Print a machine-readable summary.")
_svg_opt = click.option("--svg", "with_svg", is_flag=True,
                        help="Also render SVG quick-look figures.")


@main.command()
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def history(config_path, out_dir, as_json, with_svg):
    """Build a loading history; write its JSON spec and displacement series."""
    def body():
        cfg = _load_json(config_path, "config")
        hist = _parse_history(cfg, "history")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        hist.save(out / "history.json")
        hist.write_series_csv(out / "series.csv")
        files = {"history": str(out / "history.json"),
                 "series": str(out / "series.csv")}
        if with_svg:
            series = hist.discretize()
            svg.line_plot(out / "history.svg",
                          [(hist.label, np.arange(series.size), series)],
                          title=hist.label or "loading history",
                          xlabel="step", ylabel="u (m)")
            files["svg"] = str(out / "history.svg")
        _emit({"label": hist.label, "n_steps": hist.n_steps,
               "cumulative_uy": hist.cumulative_amplitude,
               "path_length_uy": hist.path_length,
               "u_y_m": hist.u_y, "files": files}, as_json)
    _run(body)


@main.command()
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def simulate(config_path, out_dir, as_json, with_svg):
    """Simulate a parameter set over a loading history; write the curve."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"history"}, {"params", "params_file", "substeps"},
                    "simulate")
        params = _parse_params(cfg, "simulate")
        hist = _parse_history(cfg["history"], "simulate.history",
                              default_u_y=params.u_y)
        substeps = int(cfg.get("substeps", 4))
        curve = simulate_quasi_static(params, hist.discretize(), substeps=substeps)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        curve.to_csv(out / "curve.csv")
        files = {"curve": str(out / "curve.csv")}
        if with_svg:
            svg.line_plot(out / "curve.svg", [(hist.label, curve.u, curve.f)],
                          title="hysteresis response", xlabel="u (m)",
                          ylabel="f (m/s^2)")
            files["svg"] = str(out / "curve.svg")
        area = hysteresis_area(curve, params.f_y_si, params.u_y)
        _emit({"history": hist.label, "n_steps": hist.n_steps,
               "area_norm": area, "files": files}, as_json)
    _run(body)


@main.command("gen-dataset")
@_config_opt
@_out_opt
@_json_opt
def gen_dataset(config_path, out_dir, as_json):
    """Generate a synthetic curve/parameter dataset (records + manifest)."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"history", "n_param_sets", "variant"},
                    {"distributions_file", "noise", "split", "seed",
                     "substeps", "u_y_cov", "label", "histograms"},
                    "gen-dataset")
        variant = _parse_variant(cfg, "gen-dataset")
        hist = _parse_history(cfg["history"], "gen-dataset.history",
                              default_u_y=1.0)
        if cfg.get("distributions_file"):
            dists = ParamDistributions.from_dict(
                _load_json(cfg["distributions_file"], "distributions file"))
        else:
            dists = ParamDistributions.default()
        noise_cfg = cfg.get("noise")
        if noise_cfg is None:
            noise = NoiseSpec.default()
        elif isinstance(noise_cfg, dict) and "scale_default_to" in noise_cfg:
            _check_keys(noise_cfg, {"scale_default_to"}, set(), "gen-dataset.noise")
            noise = NoiseSpec.default().scaled(int(noise_cfg["scale_default_to"]))
        elif isinstance(noise_cfg, list):
            noise = NoiseSpec(levels=tuple((float(c), int(n))
                                           for c, n in noise_cfg))
        else:
            raise ConfigError("gen-dataset.noise: expected a list of "
                              "[cov, count] pairs or {'scale_default_to': N}")
        seed = _seed_from(cfg)
        manifest = generate_dataset(
            out_dir, dists, hist, int(cfg["n_param_sets"]), variant=variant,
            noise=noise, split=float(cfg.get("split", 0.9)), seed=seed,
            substeps=int(cfg.get("substeps", 4)),
            u_y_cov=float(cfg.get("u_y_cov", 0.1)),
            label=str(cfg.get("label", "")))
        files = {"manifest": str(Path(out_dir) / "manifest.json"),
                 "records": str(Path(out_dir) / manifest["records_file"])}
        if cfg.get("histograms", False):
            emit_histograms(out_dir, Path(out_dir) / "histograms.csv")
            files["histograms"] = str(Path(out_dir) / "histograms.csv")
        _emit({"d": manifest["d"], "n_param_sets": manifest["n_param_sets"],
               "n_train_records": manifest["n_train_records"],
               "n_test_records": manifest["n_test_records"],
               "n_resampled": manifest["n_resampled"], "seed": seed,
               "files": files}, as_json)
    _run(body)


def _cnn_estimate(curve: HysteresisCurve, weights_path: str) -> dict:
    if not Path(weights_path).is_file():
        raise ConfigError(f"weights file not found: {weights_path}")
    wf = nnio.read_weights(weights_path)
    if len(curve) - 1 != wf.d:
        raise ValueError(
            f"curve has {len(curve) - 1} steps but the network expects {wf.d}")
    predictions = nnio.predict_params(wf, curve.u[1:], curve.f[1:])
    u_lo, u_hi = wf.u_range
    f_lo, f_hi = wf.f_range
    x = np.stack([(curve.u[1:] - u_lo) / (u_hi - u_lo),
                  (curve.f[1:] - f_lo) / (f_hi - f_lo)], axis=1)
    outputs = nnio.forward(wf, x).astype(float).tolist()
    return {"category": wf.category, "param_names": list(wf.param_names),
            "outputs": outputs, "predictions": predictions}


@main.command()
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def estimate(config_path, out_dir, as_json, with_svg):
    """Estimate model parameters from a measured hysteresis curve."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"curve_file"},
                    {"variant", "estimator", "ga", "weights_file", "seed"},
                    "estimate")
        if not Path(cfg["curve_file"]).is_file():
            raise ConfigError(f"curve file not found: {cfg['curve_file']}")
        curve = HysteresisCurve.from_csv(cfg["curve_file"])
        estimator = cfg.get("estimator", "ga")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if estimator == "ga":
            variant = _parse_variant(cfg, "estimate")
            ga_cfg = _parse_ga(cfg, _seed_from(cfg), "estimate")
            fit = ga_estimate(curve, variant, ga_cfg)
            result = {"estimator": "ga", "variant": variant.value,
                      "params": fit.params.to_dict(),
                      "best_fitness": fit.best_fitness,
                      "trace": list(fit.trace),
                      "n_evaluations": fit.n_evaluations,
                      "n_failed": fit.n_failed}
            if with_svg:
                fitted = simulate_quasi_static(fit.params, curve.u,
                                               substeps=ga_cfg.substeps)
                svg.line_plot(out / "estimate.svg",
                              [("measured", curve.u, curve.f),
                               ("fitted", fitted.u, fitted.f)],
                              title="measured vs fitted",
                              xlabel="u (m)", ylabel="f (m/s^2)")
        elif estimator == "cnn":
            if "weights_file" not in cfg:
                raise ConfigError("estimate: cnn estimator needs weights_file")
            result = {"estimator": "cnn", **_cnn_estimate(curve, cfg["weights_file"])}
        else:
            raise ConfigError(f"estimate: unknown estimator {estimator!r}")
        _write_json(out / "estimate.json", result)
        result["files"] = {"estimate": str(out / "estimate.json")}
        _emit(result, as_json)
    _run(body)


@main.command("pushover")
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def pushover_cmd(config_path, out_dir, as_json, with_svg):
    """Run a monotone pushover and locate the yield displacement."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"max_drift_m", "step_m"},
                    {"params", "params_file", "substeps"}, "pushover")
        params = _parse_params(cfg, "pushover")
        curve = pushover(params, float(cfg["max_drift_m"]), float(cfg["step_m"]),
                         substeps=int(cfg.get("substeps", 4)))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        curve.to_csv(out / "pushover.csv")
        try:
            u_y = yield_displacement(curve)
            note = ""
        except YieldDetectionError as err:
            u_y = None
            note = str(err)
        files = {"pushover": str(out / "pushover.csv")}
        if with_svg:
            svg.line_plot(out / "pushover.svg", [("capacity", curve.u, curve.f)],
                          title="pushover", xlabel="u (m)", ylabel="f (m/s^2)")
            files["svg"] = str(out / "pushover.svg")
        _emit({"u_y_m": u_y, "note": note, "n_points": curve.u.size,
               "files": files}, as_json)
    _run(body)


@main.command()
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def tha(config_path, out_dir, as_json, with_svg):
    """Nonlinear time-history analysis for one ground motion."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"motion_file"},
                    {"params", "params_file", "damping", "dt_sub"}, "tha")
        params = _parse_params(cfg, "tha")
        if not Path(cfg["motion_file"]).is_file():
            raise ConfigError(f"motion file not found: {cfg['motion_file']}")
        motion = GroundMotion.read(cfg["motion_file"])
        resp = time_history(params, motion,
                            damping=float(cfg.get("damping", 0.05)),
                            dt_sub=cfg.get("dt_sub"))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        resp.to_csv(out / "response.csv")
        files = {"response": str(out / "response.csv")}
        if with_svg:
            svg.line_plot(out / "response.svg", [("u", resp.t, resp.u)],
                          title=f"response: {motion.label}", xlabel="t (s)",
                          ylabel="u (m)")
            files["svg"] = str(out / "response.svg")
        _emit({"motion": motion.label, "peak_u_m": resp.peak_displacement,
               "duration_s": float(resp.t[-1]), "n_points": resp.t.size,
               "files": files}, as_json)
    _run(body)


@main.command("ida")
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def ida_cmd(config_path, out_dir, as_json, with_svg):
    """Incremental dynamic analysis over a motion set and intensity levels."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"motions", "sa_levels"},
                    {"params", "params_file", "damping", "dt_sub", "sa_period"},
                    "ida")
        params = _parse_params(cfg, "ida")
        paths = cfg["motions"]
        if not isinstance(paths, list) or not paths:
            raise ConfigError("ida.motions must be a nonempty list of files")
        for p in paths:
            if not Path(p).is_file():
                raise ConfigError(f"motion file not found: {p}")
        motions = [GroundMotion.read(p) for p in paths]
        config = IdaConfig(sa_levels=tuple(float(s) for s in cfg["sa_levels"]),
                           damping=float(cfg.get("damping", 0.05)),
                           dt_sub=cfg.get("dt_sub"),
                           sa_period=cfg.get("sa_period"))
        result = ida(params, motions, config)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.to_csv(out / "ida.csv")
        files = {"ida": str(out / "ida.csv")}
        if with_svg:
            series = []
            for gm in motions:
                rows = [i for i, m in enumerate(result.motion) if m == gm.label
                        and not result.failed[i]]
                series.append((gm.label,
                               [result.peak_u_m[i] for i in rows],
                               [result.sa_g[i] for i in rows]))
            svg.line_plot(out / "ida.svg", series, title="IDA",
                          xlabel="peak u (m)", ylabel="Sa (g)")
            files["svg"] = str(out / "ida.svg")
        _emit({"n_motions": len(motions), "n_cells": len(result.motion),
               "n_failed": int(sum(result.failed)), "files": files}, as_json)
    _run(body)


@main.command()
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def fragility(config_path, out_dir, as_json, with_svg):
    """Fit lognormal fragility curves to an IDA grid; optionally compare."""
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"ida_file", "thresholds_m"},
                    {"labels", "compare_file"}, "fragility")
        if not Path(cfg["ida_file"]).is_file():
            raise ConfigError(f"IDA file not found: {cfg['ida_file']}")
        grid = IdaResult.from_csv(cfg["ida_file"])
        thresholds = [float(t) for t in cfg["thresholds_m"]]
        labels = cfg.get("labels") or [f"DS{i + 1}" for i in range(len(thresholds))]
        if len(labels) != len(thresholds):
            raise ConfigError("fragility: labels and thresholds_m differ in length")
        curves = [fit_fragility(grid.sa_g, grid.peak_u_m, thr, ds=lbl)
                  for thr, lbl in zip(thresholds, labels)]
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "fragility.csv", "w", newline="") as fh:
            fh.write("ds,theta_g,beta\n")
            for c in curves:
                fh.write(f"{c.ds},{c.theta:.9g},{c.beta:.9g}\n")
        files = {"fragility": str(out / "fragility.csv")}
        summary = {"curves": [{"ds": c.ds, "theta_g": c.theta, "beta": c.beta}
                              for c in curves], "files": files}
        if cfg.get("compare_file"):
            others = _read_fragility_csv(cfg["compare_file"])
            pairs = []
            for c in curves:
                if c.ds in others:
                    o = others[c.ds]
                    pairs.append({"ds": c.ds,
                                  "kl_this_to_other": kl_divergence(c, o),
                                  "kl_other_to_this": kl_divergence(o, c)})
            _write_json(out / "kl.json", {"pairs": pairs})
            files["kl"] = str(out / "kl.json")
            summary["kl_pairs"] = pairs
        if with_svg:
            sa = np.linspace(0.01, max(c.theta for c in curves) * 3.0, 200)
            svg.line_plot(out / "fragility.svg",
                          [(c.ds, sa, c.probability(sa)) for c in curves],
                          title="fragility", xlabel="Sa (g)",
                          ylabel="P(exceed)")
            files["svg"] = str(out / "fragility.svg")
        _emit(summary, as_json)
    _run(body)


def _read_fragility_csv(path: str | Path) -> dict[str, FragilityCurve]:
    if not Path(path).is_file():
        raise ConfigError(f"fragility file not found: {path}")
    out = {}
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "ds,theta_g,beta":
            raise ConfigError(f"{path}: unexpected fragility header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            ds, theta, beta = line.strip().split(",")
            out[ds] = FragilityCurve(ds=ds, theta=float(theta), beta=float(beta))
    return out


@main.command()
@_config_opt
@_out_opt
@_json_opt
@_svg_opt
def protocol(config_path, out_dir, as_json, with_svg):
    """Run the three-step identification protocol on a virtual specimen.

    1. Pushover (or a supplied capacity curve) locates the yield
    displacement. 2. The variant's recommended history is built at that
    scale and the specimen is tested quasi-statically. 3. Parameters are
    estimated from the measured curve and validated by comparing loop
    areas on an earthquake-like envelope history.
    """
    def body():
        cfg = _load_json(config_path, "config")
        _check_keys(cfg, {"variant"},
                    {"params", "params_file", "pushover_file", "estimator",
                     "ga", "weights", "seed", "pushover", "validation",
                     "substeps"},
                    "protocol")
        specimen = _parse_params(cfg, "protocol")
        variant = _parse_variant(cfg, "protocol")
        estimator = cfg.get("estimator", "ga")
        seed = _seed_from(cfg)
        substeps = int(cfg.get("substeps", 4))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        # step 1: yield displacement from a capacity curve
        if cfg.get("pushover_file"):
            if not Path(cfg["pushover_file"]).is_file():
                raise ConfigError(
                    f"pushover file not found: {cfg['pushover_file']}")
            cap = PushoverCurve.from_csv(cfg["pushover_file"])
        else:
            po_cfg = cfg.get("pushover", {})
            _check_keys(po_cfg, set(), {"max_drift_m", "step_m"},
                        "protocol.pushover")
            max_drift = float(po_cfg.get("max_drift_m", 8.0 * specimen.u_y))
            step = float(po_cfg.get("step_m", max_drift / 400.0))
            cap = pushover(specimen, max_drift, step, substeps=substeps)
        cap.to_csv(out / "pushover.csv")
        u_y_est = yield_displacement(cap)

        # step 2: recommended history at the estimated scale, virtual test
        hist = optimal_history(variant, u_y_est)
        hist.save(out / "history.json")
        curve = simulate_quasi_static(specimen, hist.discretize(),
                                      substeps=substeps)
        curve.to_csv(out / "curve.csv")

        # step 3: estimation
        if estimator == "ga":
            ga_cfg = _parse_ga(cfg, seed, "protocol")
            fit = ga_estimate(curve, variant, ga_cfg)
            est_params = fit.params
            estimate_block = {"estimator": "ga",
                              "params": est_params.to_dict(),
                              "best_fitness": fit.best_fitness,
                              "trace": list(fit.trace)}
        elif estimator == "cnn":
            weights_cfg = cfg.get("weights")
            if not isinstance(weights_cfg, dict) or not weights_cfg:
                raise ConfigError(
                    "protocol: cnn estimator needs a weights mapping "
                    "{category: file}")
            merged: dict[str, float] = {}
            per_category = {}
            for category, wpath in sorted(weights_cfg.items()):
                if not Path(wpath).is_file():
                    raise ConfigError(f"weights file not found: {wpath}")
                wf = nnio.read_weights(wpath)
                if wf.history is None:
                    raise ConfigError(
                        f"{wpath}: weights carry no training history")
                cat_hist = LoadingHistory.from_dict(
                    {**wf.history, "u_y_m": u_y_est})
                cat_curve = simulate_quasi_static(specimen,
                                                  cat_hist.discretize(),
                                                  substeps=substeps)
                preds = nnio.predict_params(wf, cat_curve.u[1:], cat_curve.f[1:])
                per_category[category] = preds
                merged.update(preds)
            missing = [n for n in variant.active_names if n not in merged]
            if missing:
                raise ConfigError(
                    f"protocol: weights do not cover parameters {missing}")
            full = np.array([merged.get(n, 0.0) for n in PARAM_NAMES])
            est_params = BwParams.from_vector(full, variant)
            estimate_block = {"estimator": "cnn",
                              "params": est_params.to_dict(),
                              "per_category": per_category}
        else:
            raise ConfigError(f"protocol: unknown estimator {estimator!r}")

        # validation: loop areas on an earthquake-like envelope history
        val_cfg = cfg.get("validation", {})
        _check_keys(val_cfg, set(), {"peak_uy", "n_cycles"},
                    "protocol.validation")
        env = envelope_history(float(val_cfg.get("peak_uy", 4.0)),
                               int(val_cfg.get("n_cycles", 8)), u_y_est)
        series = env.discretize()
        true_curve = simulate_quasi_static(specimen, series, substeps=substeps)
        est_curve = simulate_quasi_static(est_params, series, substeps=substeps)
        area_true = hysteresis_area(true_curve, specimen.f_y_si, specimen.u_y)
        area_est = hysteresis_area(est_curve, specimen.f_y_si, specimen.u_y)
        rel_err = abs(abs(area_est) - abs(area_true)) / abs(area_true)

        report = {
            "schema": "bwlab-protocol-1",
            "variant": variant.value,
            "seed": seed,
            "u_y_m": u_y_est,
            "history": hist.to_dict(),
            "estimate": estimate_block,
            "validation": {
                "history": env.to_dict(),
                "area_true": area_true,
                "area_est": area_est,
                "rel_area_error": rel_err,
                "within_10pct": bool(rel_err <= 0.10),
            },
        }
        _write_json(out / "report.json", report)
        if with_svg:
            svg.line_plot(out / "validation.svg",
                          [("specimen", true_curve.u, true_curve.f),
                           ("estimated", est_curve.u, est_curve.f)],
                          title="envelope validation", xlabel="u (m)",
                          ylabel="f (m/s^2)")
        summary = dict(report)
        summary["files"] = {"report": str(out / "report.json"),
                            "pushover": str(out / "pushover.csv"),
                            "history": str(out / "history.json"),
                            "curve": str(out / "curve.csv")}
        _emit(summary, as_json)
    _run(body)


if __name__ == "__main__":
    main()

"""Config-driven experiment runner.

    telefock teleport|curve|tomo|filter --config <file> [--out <dir>]
                                        [--workers <n>] [--seed <u64>]

Configs are TOML with sections mirroring ExperimentConfig field names;
unknown keys are hard errors, because a silently ignored typo in a physics
parameter is worse than a crash. Every command writes a manifest.json listing
the emitted files, a content hash of the config, wall-clock time and
convergence diagnostics. All randomness flows from the single config seed.

Exit codes: 0 success, 2 config error, 3 convergence/accuracy error,
4 herald-impossible.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import analysis, serialize, tomography
from .errors import AccuracyError, ConfigError, HeraldImpossibleError, TelefockError
from .filters import ProgramState, apply_program_filter
from .fock import DensityOperator, coherent_state, fock_state
from .teleporter import ExperimentConfig, GridSpec, success_probability, teleport

_SCHEMA = {
    "experiment": {
        "r",
        "loss_l",
        "gain_g",
        "radius_L",
        "cutoff_N",
        "shots",
        "seed",
        "loss_placement",
        "max_deficit",
        "grid",
    },
    "experiment.grid": {"range", "step", "n_theta", "p_tol"},
    "input": {"kind", "n", "probs", "x0", "p0", "dim"},
    "teleport": {"L_values"},
    "curve": {"L_min", "L_max", "n_points"},
    "tomo": {
        "n_events",
        "n_phases",
        "bin_width",
        "dim",
        "max_iters",
        "tol",
        "n_bootstrap",
        "records",
        "simulate",
    },
    "filter": {"L", "program", "program_re", "program_im"},
    "wigner": {"range", "step"},
}


def _check_keys(table: dict, section: str) -> None:
    allowed = _SCHEMA.get(section)
    if allowed is None:
        raise ConfigError(f"unknown config section [{section}]")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        if isinstance(table[key], dict):
            _check_keys(table[key], f"{section}.{key}")


def load_config(path: Path) -> dict:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = tomllib.loads(raw.decode())
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section, table in cfg.items():
        if not isinstance(table, dict):
            raise ConfigError(f"top-level key {section!r} must be a section")
        _check_keys(table, section)
    cfg["_sha256"] = hashlib.sha256(raw).hexdigest()
    return cfg


def experiment_from_config(cfg: dict, seed_override: int | None = None) -> ExperimentConfig:
    exp = dict(cfg.get("experiment", {}))
    if "r" not in exp:
        raise ConfigError("[experiment] must set the squeezing parameter r")
    grid = GridSpec(**exp.pop("grid", {}))
    if seed_override is not None:
        exp["seed"] = seed_override
    radius = exp.get("radius_L")
    if isinstance(radius, str):
        exp["radius_L"] = _parse_radius(radius)
    return ExperimentConfig(grid=grid, **exp)


def _parse_radius(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"bad conditioning radius {value!r}") from None
    return float(value)


def input_state_from_config(cfg: dict) -> DensityOperator:
    spec = cfg.get("input", {"kind": "vacuum"})
    kind = spec.get("kind", "vacuum")
    if kind == "vacuum":
        return fock_state(0, spec.get("dim", 2)).to_density()
    if kind == "fock":
        n = int(spec.get("n", 1))
        return fock_state(n, spec.get("dim", n + 2)).to_density()
    if kind == "mixture":
        probs = np.asarray(spec.get("probs", []), dtype=float)
        if probs.size == 0:
            raise ConfigError("[input] mixture needs a probs list")
        if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-6:
            raise ConfigError("[input] mixture probs must be nonnegative and sum to 1")
        dim = int(spec.get("dim", probs.size + 1))
        mat = np.zeros((dim, dim), dtype=complex)
        mat[: probs.size, : probs.size] = np.diag(probs)
        return DensityOperator(mat, (dim,))
    if kind == "coherent":
        dim = int(spec.get("dim", 20))
        return coherent_state(float(spec.get("x0", 0.0)), float(spec.get("p0", 0.0)), dim).to_density()
    raise ConfigError(f"unknown input kind {kind!r}")


def _state_payload(label, rho, probability, diagnostics, cfg):
    pn = analysis.photon_number_distribution(rho)
    return {
        "kind": "conditional_state",
        "label": label,
        "state": serialize.density_to_json(rho),
        "probability": probability,
        "w00": analysis.wigner_origin(rho),
        "photon_distribution": pn.probs.tolist(),
        "odd_sum": pn.odd_sum,
        "negative_at_origin": pn.negative_at_origin,
        "diagnostics": diagnostics,
        "config_sha256": cfg["_sha256"],
    }


def _wigner_for(rho, wigner_cfg):
    half = float(wigner_cfg.get("range", 5.0))
    step = float(wigner_cfg.get("step", 0.1))
    xs = np.arange(-half, half + 0.5 * step, step)
    return analysis.wigner_grid(rho, xs, xs)


def _label_to_name(label: str) -> str:
    return label.replace("=", "_").replace(".", "p")


def cmd_teleport(cfg: dict, out: Path, workers: int) -> dict:
    exp = experiment_from_config(cfg)
    rho_in = input_state_from_config(cfg)
    l_values = [_parse_radius(v) for v in cfg.get("teleport", {}).get("L_values", ["inf"])]
    wigner_cfg = cfg.get("wigner", {"range": 5.0, "step": 0.1})
    outputs = {"states": [], "wigner": []}
    diagnostics = {}

    def _emit(label, rho, probability, diag):
        name = _label_to_name(label)
        state_path = out / f"state_{name}.json"
        serialize.dump_json(_state_payload(label, rho, probability, diag, cfg), state_path)
        grid = _wigner_for(rho, wigner_cfg)
        wig_path = out / f"wigner_{name}.csv"
        serialize.write_wigner_csv(grid, wig_path)
        outputs["states"].append(state_path.name)
        outputs["wigner"].append(wig_path.name)
        diagnostics[label] = diag

    _emit("input", rho_in, 1.0, {})
    for L in l_values:
        label = "L=inf" if math.isinf(L) else f"L={L:g}"
        run_cfg = _replace_radius(exp, L)
        result = teleport(rho_in, run_cfg, workers=workers)
        _emit(label, result.state, result.probability, result.diagnostics)
    ps = success_probability(rho_in, _replace_radius(exp, math.inf), [v for v in l_values if not math.isinf(v)])
    serialize.dump_json(
        {"P": {f"{L:g}": p for L, p in ps}, "config_sha256": cfg["_sha256"]},
        out / "probabilities.json",
    )
    outputs["probabilities"] = ["probabilities.json"]
    return {"outputs": outputs, "diagnostics": diagnostics}


def _replace_radius(exp: ExperimentConfig, L: float) -> ExperimentConfig:
    from dataclasses import replace

    return replace(exp, radius_L=L)


def cmd_curve(cfg: dict, out: Path, workers: int) -> dict:
    exp = experiment_from_config(cfg)
    rho_in = input_state_from_config(cfg)
    curve = cfg.get("curve", {})
    l_min = float(curve.get("L_min", 0.0))
    l_max = float(curve.get("L_max", 4.0))
    n_pts = int(curve.get("n_points", 41))
    ls = np.linspace(l_min, l_max, n_pts)
    model = success_probability(rho_in, exp, ls)
    rows = [(L, p, 1.0 - math.exp(-L * L)) for (L, p) in model]
    path = out / "curve.csv"
    serialize.write_curve_csv(rows, path)
    return {"outputs": {"curve": [path.name]}, "diagnostics": {"n_points": n_pts}}


def cmd_tomo(cfg: dict, out: Path, workers: int) -> dict:
    exp = experiment_from_config(cfg)
    tomo = cfg.get("tomo", {})
    opts = tomography.TomographyOptions(
        dim=int(tomo.get("dim", 8)),
        bin_width=float(tomo.get("bin_width", 0.05)),
        max_iters=int(tomo.get("max_iters", 500)),
        tol=float(tomo.get("tol", 1e-9)),
        n_bootstrap=int(tomo.get("n_bootstrap", 100)),
    )
    outputs = {}
    rng = np.random.default_rng(exp.seed)
    if tomo.get("records"):
        try:
            records = serialize.read_records_csv(Path(tomo["records"]))
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
    else:
        rho = input_state_from_config(cfg)
        n_events = int(tomo.get("n_events", 100_000))
        n_phases = int(tomo.get("n_phases", 12))
        thetas = np.linspace(0.0, math.pi, n_phases, endpoint=False)
        recs = tomography.sample_homodyne(rho, thetas, -(-n_events // n_phases), rng)
        rec_path = out / "records.csv"
        serialize.write_records_csv(recs, rec_path)
        outputs["records"] = [rec_path.name]
        records = np.array([[r.theta, r.value] for r in recs])
    result = tomography.mle_reconstruct(records, opts)
    boot = tomography.bootstrap_errors(
        records, analysis.wigner_origin, opts.n_bootstrap, rng, opts, workers=workers
    )
    recon = {
        "state": serialize.density_to_json(result.state),
        "w00": analysis.wigner_origin(result.state),
        "photon_distribution": analysis.photon_number_distribution(result.state).probs.tolist(),
        "diagnostics": {
            "iterations": result.iterations,
            "log_likelihood": result.log_likelihood,
            "bin_width": opts.bin_width,
            "max_iters": opts.max_iters,
            "tol": opts.tol,
        },
        "bootstrap": {"statistic": "w00", "mean": boot.mean, "stddev": boot.stddev, "n_replicas": boot.n_replicas},
        "config_sha256": cfg["_sha256"],
    }
    recon_path = out / "reconstruction.json"
    serialize.dump_json(recon, recon_path)
    outputs["reconstruction"] = [recon_path.name]
    return {"outputs": outputs, "diagnostics": recon["diagnostics"]}


def cmd_filter(cfg: dict, out: Path, workers: int) -> dict:
    exp = experiment_from_config(cfg)
    filt = cfg.get("filter", {})
    if "program" in filt:
        obj = serialize.load_json(Path(filt["program"]))
        coeffs = np.array(obj["re"], dtype=float) + 1j * np.array(obj.get("im", np.zeros_like(obj["re"])), dtype=float)
    elif "program_re" in filt:
        re = np.array(filt["program_re"], dtype=float)
        im = np.array(filt.get("program_im", np.zeros_like(re)), dtype=float)
        coeffs = re + 1j * im
    else:
        raise ConfigError("[filter] needs either program = <json path> or program_re")
    program = ProgramState(coeffs)
    rho_in = input_state_from_config(cfg)
    L = _parse_radius(filt.get("L", 0.05))
    result = apply_program_filter(program, rho_in, L, exp)
    payload = _state_payload(f"filter@L={L:g}", result.state, result.probability, result.diagnostics, cfg)
    path = out / "filtered_state.json"
    serialize.dump_json(payload, path)
    return {"outputs": {"filtered": [path.name]}, "diagnostics": result.diagnostics}


_COMMANDS = {"teleport": cmd_teleport, "curve": cmd_curve, "tomo": cmd_tomo, "filter": cmd_filter}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="telefock", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=Path("."))
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("TELEFOCK_WORKERS", "1"))

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.setdefault("experiment", {})["seed"] = args.seed
        args.out.mkdir(parents=True, exist_ok=True)
        t0 = time.monotonic()
        report = _COMMANDS[args.command](cfg, args.out, workers)
        manifest = {
            "command": args.command,
            "config_sha256": cfg["_sha256"],
            "config": {k: v for k, v in cfg.items() if not k.startswith("_")},
            "outputs": report["outputs"],
            "diagnostics": report["diagnostics"],
            "wall_clock_s": round(time.monotonic() - t0, 3),
        }
        serialize.dump_json(manifest, args.out / "manifest.json")
        missing = [
            name
            for names in report["outputs"].values()
            for name in names
            if not (args.out / name).exists()
        ]
        if missing:
            raise AccuracyError(f"manifest references missing files: {missing}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AccuracyError,) as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return 3
    except HeraldImpossibleError as exc:
        print(f"herald impossible: {exc}", file=sys.stderr)
        return 4
    except TelefockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line entry point: ``schauderdrift <command> --config cfg.json --out dir``.

Every command reads a JSON config validated against a strict schema (unknown
keys are rejected), derives all randomness from ``--seed`` and writes its
outputs to ``--out``.  Outputs depend only on (config, seed).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import experiments as ex
from . import verify as vf
from .fsbasis import Expansion, design_matrix, interp_nodes, synthesize
from .inference import acceptance_rates, credible_band, mcmc_run, posterior_mean_drift, sufficient_stats
from .prior import (
    OU,
    PriorSpec,
    covariance_matrix,
    sample_hierarchy,
    unit_variance_sigma2,
)
from .sdesim import n_steps, occupation_density, read_path, simulate_path, write_path

# -- schemas -------------------------------------------------------------------------


def _obj(props: dict, required=(), desc: str = "") -> dict:
    out = {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}
    if desc:
        out["description"] = desc
    return out


def _num(desc, **kw):
    return {"type": "number", "description": desc, **kw}


def _int(desc, **kw):
    return {"type": "integer", "description": desc, **kw}


PRIOR_SCHEMA = _obj(
    {
        "model": {
            "description": "coefficient covariance",
            "oneOf": [
                _obj(
                    {
                        "type": {"const": "independent", "description": "independent coefficients"},
                        "alpha": _num("variance decay 2^(-2 alpha level)", exclusiveMinimum=0),
                    },
                    ["type", "alpha"],
                ),
                _obj(
                    {
                        "type": {"const": "ou", "description": "periodic Ornstein-Uhlenbeck coefficients"},
                        "gamma": _num("OU mean-reversion rate", exclusiveMinimum=0),
                        "sigma2": _num("OU diffusion variance", exclusiveMinimum=0),
                    },
                    ["type", "gamma", "sigma2"],
                ),
            ],
        },
        "poisson_rate": _num("rate of Y, truncation R = floor(log2 Y)", exclusiveMinimum=0),
        "scale_shape": _num("inverse-gamma shape of S^2", exclusiveMinimum=0),
        "scale_rate": _num("inverse-gamma rate of S^2", exclusiveMinimum=0),
    },
    desc="prior hyperparameters",
)

MCMC_SCHEMA = _obj(
    {
        "iters": _int("sampler iterations", minimum=1),
        "burn_in": _int("discarded initial iterations (< iters)", minimum=0),
        "step_s": _num("log-normal step size of the scale move", exclusiveMinimum=0),
        "r_max": _int("largest truncation level", minimum=0, maximum=14),
    },
    desc="sampler settings",
)

TRUTH_SCHEMA = _obj(
    {
        "beta": _num("smoothness of the true drift", exclusiveMinimum=0),
        "seminorm": _num("beta-seminorm of the true drift", exclusiveMinimum=0),
        "cap": _int("level cap of the true drift", minimum=0, maximum=14),
        "seed": _int("seed for the coefficient signs", minimum=0),
    },
    desc="true drift with random-sign coefficients",
)

DRIFT_SCHEMA = {
    "description": "drift of the simulated diffusion",
    "oneOf": [
        _obj(
            {
                "type": {"const": "expansion", "description": "explicit Faber-Schauder coefficients"},
                "r": _int("level cap", minimum=0),
                "coeffs": {"type": "array", "items": {"type": "number"}, "description": "2^(r+1) coefficients"},
            },
            ["type", "r", "coeffs"],
        ),
        _obj(
            {
                "type": {"const": "truth", "description": "random-sign drift of given smoothness"},
                "beta": _num("smoothness", exclusiveMinimum=0),
                "seminorm": _num("beta-seminorm", exclusiveMinimum=0),
                "cap": _int("level cap", minimum=0, maximum=14),
                "seed": _int("sign seed", minimum=0),
            },
            ["type"],
        ),
        _obj(
            {
                "type": {"const": "sine", "description": "amplitude * sin(2 pi x)"},
                "amplitude": _num("sine amplitude"),
            },
            ["type"],
        ),
    ],
}

SIM_PROPS = {
    "drift": DRIFT_SCHEMA,
    "x0": _num("initial state"),
    "T": _num("time horizon (multiple of dt)", exclusiveMinimum=0),
    "dt": _num("Euler step", exclusiveMinimum=0),
}

SCHEMAS = {
    "prior-sample": _obj(
        {
            "seed": _int("default seed when --seed is absent", minimum=0),
            "prior": PRIOR_SCHEMA,
            "n": _int("number of prior draws", minimum=0),
            "r_cap": _int("clip sampled truncation at this level", minimum=0, maximum=14),
            "grid": _int("points of the plotting grid", minimum=2),
            "heatmap_r": _int("level cap of the covariance heat map", minimum=0, maximum=8),
            "normalize_variance": {
                "type": "boolean",
                "description": "for the OU model, set sigma2 so that Var(V_t) = 1",
            },
        }
    ),
    "simulate": _obj(
        {
            "seed": _int("default seed when --seed is absent", minimum=0),
            **SIM_PROPS,
            "nbins": _int("occupation histogram bins", minimum=2),
        },
        ["drift", "T", "dt"],
    ),
    "fit": _obj(
        {
            "seed": _int("default seed when --seed is absent", minimum=0),
            "path": {"type": "string", "description": "path dump to fit (relative to the config file)"},
            "simulate": _obj(SIM_PROPS, ["drift", "T", "dt"], "simulate the path to fit instead of reading one"),
            "prior": PRIOR_SCHEMA,
            "mcmc": MCMC_SCHEMA,
            "r0": _int("initial truncation", minimum=0),
            "s0": _num("initial scale", exclusiveMinimum=0),
            "band_level": _num("credible band coverage", exclusiveMinimum=0, maximum=1),
            "ngrid": _int("grid points of the band", minimum=2),
        }
    ),
    "rate-study": _obj(
        {
            "seed": _int("master seed when --seed is absent", minimum=0),
            "truth": TRUTH_SCHEMA,
            "horizons": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
                "description": "observation horizons T",
            },
            "replicates": _int("replicates per horizon", minimum=1),
            "dt": _num("Euler step", exclusiveMinimum=0),
            "x0": _num("initial state"),
            "prior": PRIOR_SCHEMA,
            "mcmc": MCMC_SCHEMA,
            "norms": {
                "type": "array",
                "items": {"oneOf": [{"type": "number", "minimum": 2}, {"const": "inf"}]},
                "minItems": 1,
                "description": "L^p norms of the error (numbers >= 2 or \"inf\")",
            },
        }
    ),
    "regress-study": _obj(
        {
            "seed": _int("master seed when --seed is absent", minimum=0),
            "truth": TRUTH_SCHEMA,
            "sizes": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1},
                "minItems": 1,
                "description": "sample sizes n",
            },
            "replicates": _int("replicates per sample size", minimum=1),
            "noise_sd": _num("observation noise standard deviation", exclusiveMinimum=0),
            "prior": PRIOR_SCHEMA,
            "mcmc": MCMC_SCHEMA,
            "norms": {
                "type": "array",
                "items": {"oneOf": [{"type": "number", "minimum": 2}, {"const": "inf"}]},
                "minItems": 1,
                "description": "L^p norms of the error (numbers >= 2 or \"inf\")",
            },
        }
    ),
    "verify": _obj(
        {
            "seed": _int("default seed when --seed is absent", minimum=0),
            "constants": _obj(
                {k: _num(f"covariance bound constant {k}") for k in vf.COV_CONSTANTS},
                desc="override covariance bound constants (mutation testing)",
            ),
        }
    ),
}


class ConfigError(ValueError):
    pass


def schema_keys(schema: dict, prefix: str = "") -> list[tuple[str, str]]:
    """Flattened (dotted key, description) pairs of a schema."""
    out: dict[str, str] = {}
    for key, sub in schema.get("properties", {}).items():
        name = f"{prefix}{key}"
        out[name] = sub.get("description", "")
        if "properties" in sub:
            out.update(schema_keys(sub, name + "."))
        consts = []
        for alt in sub.get("oneOf", []):
            for k, d in schema_keys(alt, name + "."):
                out.setdefault(k, d)
            tag = alt.get("properties", {}).get("type", {}).get("const")
            if tag is not None:
                consts.append(tag)
        if consts:
            out[name + ".type"] = "one of: " + ", ".join(consts)
    return list(out.items())


def _epilog(command: str) -> str:
    lines = ["config keys:"]
    for k, d in schema_keys(SCHEMAS[command]):
        lines.append(f"  {k:28s} {d}")
    return "\n".join(lines)


def validate_config(command: str, cfg: dict) -> dict:
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {err.message}")
    return cfg


def load_config(command: str, path: str | None) -> dict:
    if path is None:
        return validate_config(command, {})
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(command, cfg)


# -- config -> domain objects ----------------------------------------------------------


def prior_from_config(d: dict | None) -> PriorSpec:
    return PriorSpec.from_dict(d or {})


def mcmc_from_config(d: dict | None) -> ex.MCMCConfig:
    d = d or {}
    base = ex.MCMCConfig()
    try:
        return ex.MCMCConfig(
            iters=d.get("iters", base.iters),
            burn_in=d.get("burn_in", base.burn_in),
            step_s=d.get("step_s", base.step_s),
            r_max=d.get("r_max", base.r_max),
        )
    except ValueError as exc:
        raise ConfigError(f"config error at mcmc: {exc}") from exc


def truth_from_config(d: dict | None) -> ex.TruthSpec:
    return ex.TruthSpec(**(d or {}))


def drift_from_config(d: dict):
    kind = d["type"]
    if kind == "expansion":
        if len(d["coeffs"]) != 2 ** (d["r"] + 1):
            raise ConfigError("config error at drift.coeffs: length must be 2^(r+1)")
        return Expansion(d["r"], d["coeffs"])
    if kind == "truth":
        return truth_from_config({k: v for k, v in d.items() if k != "type"}).build()
    amp = float(d.get("amplitude", 1.0))
    return lambda x: amp * math.sin(2.0 * math.pi * x)


def _norms(values) -> tuple[float, ...]:
    return tuple(math.inf if v == "inf" else float(v) for v in values)


# -- output helpers -------------------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- commands ---------------------------------------------------------------------------


def cmd_prior_sample(cfg: dict, seed: int, out: Path, workers: int = 1) -> None:
    spec = prior_from_config(cfg.get("prior"))
    if cfg.get("normalize_variance") and isinstance(spec.model, OU):
        spec = PriorSpec(
            OU(spec.model.gamma, unit_variance_sigma2(spec.model.gamma)),
            spec.poisson_rate,
            spec.scale_shape,
            spec.scale_rate,
        )
    n = cfg.get("n", 10)
    grid = cfg.get("grid", 256)
    r_cap = cfg.get("r_cap", 10)
    rng = np.random.default_rng(seed)
    x = np.arange(grid) / grid
    draws, rows = [], []
    for d in range(n):
        r, s, b = sample_hierarchy(spec, rng, r_cap)
        draws.append({"r": b.r, "s": s, "coeffs": b.coeffs.tolist()})
        rows.extend((d, xi, vi) for xi, vi in zip(x, b(x)))
    _write_json(out / "draws.json", draws)
    _write_csv(out / "draws.csv", ["draw", "x", "value"], rows)

    # covariance of the level-capped series at unit scale on its dyadic nodes
    hr = cfg.get("heatmap_r", 5)
    A = covariance_matrix(hr, spec).entries
    nodes = np.arange(2 ** (hr + 1)) / 2 ** (hr + 1)
    psi = design_matrix(hr, nodes)
    cov = psi @ A @ psi.T
    heat = [(nodes[a], nodes[b], cov[a, b]) for a in range(nodes.size) for b in range(nodes.size)]
    _write_csv(out / "heatmap.csv", ["s", "t", "cov"], heat)


def cmd_simulate(cfg: dict, seed: int, out: Path, workers: int = 1) -> None:
    T, dt = float(cfg["T"]), float(cfg["dt"])
    try:
        n_steps(T, dt)
    except ValueError as exc:
        raise ConfigError(f"config error at T: {exc}") from exc
    drift = drift_from_config(cfg["drift"])
    rng = np.random.default_rng(seed)
    path = simulate_path(drift, float(cfg.get("x0", 0.0)), T, dt, rng, seed=seed)
    write_path(path, out / "path.bin")
    occ = occupation_density(path, cfg.get("nbins", 50))
    edges = occ.edges
    mass = occ.density / occ.nbins
    _write_csv(
        out / "occupation.csv",
        ["left", "right", "mass"],
        [(edges[k], edges[k + 1], mass[k]) for k in range(occ.nbins)],
    )
    _write_json(
        out / "summary.json",
        {
            "T": T,
            "dt": dt,
            "x0": path.x0,
            "steps": path.values.size - 1,
            "seed": seed,
            "final_state": float(path.values[-1]),
            "path_sha256": _sha256(out / "path.bin"),
            "occupation_file": "occupation.csv",
        },
    )


def _fit_data(cfg: dict, seed: int, config_dir: Path):
    if ("path" in cfg) == ("simulate" in cfg):
        raise ConfigError("config error at <root>: give exactly one of 'path' and 'simulate'")
    if "path" in cfg:
        return read_path(config_dir / cfg["path"])
    sim = cfg["simulate"]
    rng = np.random.default_rng(ex.derive_seed(seed, 0, 1))
    drift = drift_from_config(sim["drift"])
    try:
        return simulate_path(drift, float(sim.get("x0", 0.0)), float(sim["T"]), float(sim["dt"]), rng, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"config error at simulate.T: {exc}") from exc


def cmd_fit(cfg: dict, seed: int, out: Path, workers: int = 1, config_dir: Path = Path(".")) -> None:
    mc = mcmc_from_config(cfg.get("mcmc"))
    spec = prior_from_config(cfg.get("prior"))
    r0 = cfg.get("r0", 0)
    if r0 > mc.r_max:
        raise ConfigError("config error at r0: must not exceed mcmc.r_max")
    path = _fit_data(cfg, seed, config_dir)
    stats = sufficient_stats(path, mc.r_max)
    rng = np.random.default_rng(ex.derive_seed(seed, 0, 0))
    chain = mcmc_run(stats, spec, mc.iters, mc.r_max, mc.step_s, rng, r0=r0, s0=cfg.get("s0", 1.0))
    _write_csv(
        out / "chain.csv",
        ["iter", "r", "s", "log_marginal"],
        [(k, c.r, c.s, c.log_marginal) for k, c in enumerate(chain)],
    )
    mean = posterior_mean_drift(chain, mc.burn_in, mc.r_max)
    (out / "posterior_mean.json").write_text(mean.to_json() + "\n")
    level = cfg.get("band_level", 0.9)
    x, lo, hi = credible_band(chain, mc.burn_in, level, cfg.get("ngrid", 256))
    m = interp_nodes(synthesize(mean.coeffs), x)
    _write_csv(out / "band.csv", ["x", "lower", "mean", "upper"], zip(x, lo, m, hi))
    kept = chain[mc.burn_in :]
    rs = np.array([c.r for c in kept])
    _write_json(
        out / "summary.json",
        {
            "seed": seed,
            "T": path.T,
            "dt": path.dt,
            "iters": mc.iters,
            "burn_in": mc.burn_in,
            "acceptance": acceptance_rates(chain),
            "posterior_r": {str(r): float(np.mean(rs == r)) for r in range(mc.r_max + 1)},
            "mean_s": float(np.mean([c.s for c in kept])),
            "band_level": level,
        },
    )


def _write_table(table: ex.RateTable, cfg_echo: dict, out: Path) -> None:
    (out / "rate_table.csv").write_text(table.to_csv())
    summary = table.summary()
    summary["config"] = cfg_echo
    summary["diagnostics"] = table.diagnostics
    _write_json(out / "summary.json", summary)


def _study_config(cfg: dict, seed: int, horizons) -> ex.RateStudyConfig:
    base = ex.RateStudyConfig()
    try:
        return ex.RateStudyConfig(
            truth=truth_from_config(cfg.get("truth")),
            horizons=tuple(horizons),
            replicates=cfg.get("replicates", base.replicates),
            dt=cfg.get("dt", base.dt),
            x0=cfg.get("x0", base.x0),
            prior=prior_from_config(cfg.get("prior")),
            mcmc=mcmc_from_config(cfg.get("mcmc")),
            norms=_norms(cfg.get("norms", [2, "inf"])),
            seed=seed,
            noise_sd=cfg.get("noise_sd", base.noise_sd),
        )
    except ValueError as exc:
        raise ConfigError(f"config error: {exc}") from exc


def _echo(sc: ex.RateStudyConfig) -> dict:
    return {
        "truth": vars(sc.truth),
        "horizons": list(sc.horizons),
        "replicates": sc.replicates,
        "dt": sc.dt,
        "prior": sc.prior.to_dict(),
        "mcmc": vars(sc.mcmc),
        "seed": sc.seed,
        "noise_sd": sc.noise_sd,
    }


def cmd_rate_study(cfg: dict, seed: int, out: Path, workers: int = 1) -> None:
    horizons = cfg.get("horizons", list(ex.RateStudyConfig().horizons))
    sc = _study_config(cfg, seed, horizons)
    for T in sc.horizons:
        try:
            n_steps(T, sc.dt)
        except ValueError as exc:
            raise ConfigError(f"config error at horizons: {exc}") from exc
    _write_table(ex.contraction_study(sc, workers), _echo(sc), out)


def cmd_regress_study(cfg: dict, seed: int, out: Path, workers: int = 1) -> None:
    sizes = cfg.get("sizes", [250, 1000, 4000, 16000])
    sc = _study_config(cfg, seed, sizes)
    _write_table(ex.regression_study(sc, workers), _echo(sc), out)


def cmd_verify(cfg: dict, seed: int, out: Path, workers: int = 1) -> bool:
    reports = vf.run_all(seed, cfg.get("constants"), workers)
    (out / "verify_report.json").write_text(vf.reports_to_json(reports) + "\n")
    return vf.all_passed(reports)


COMMANDS = {
    "prior-sample": (cmd_prior_sample, "draw from the series prior and its covariance heat map"),
    "simulate": (cmd_simulate, "simulate a diffusion path"),
    "fit": (cmd_fit, "posterior sampling for the drift of a path"),
    "rate-study": (cmd_rate_study, "posterior contraction study for the diffusion model"),
    "regress-study": (cmd_regress_study, "posterior contraction study for the regression model"),
    "verify": (cmd_verify, "run the bound and invariant checks"),
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    epilog = "\n\n".join(f"[{c}] {_epilog(c)}" for c in COMMANDS)
    parser = argparse.ArgumentParser(
        prog="schauderdrift",
        description="Bayesian drift estimation with a Faber-Schauder series prior.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(
            name, help=help_text, epilog=_epilog(name), formatter_class=argparse.RawDescriptionHelpFormatter
        )
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=_u64, help="random seed (overrides the config)")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fn = COMMANDS[args.command][0]
    kwargs = {}
    if args.command == "fit" and args.config:
        kwargs["config_dir"] = Path(args.config).resolve().parent
    try:
        result = fn(cfg, seed, out, max(1, args.workers), **kwargs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "verify" and not result:
        print("verification failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

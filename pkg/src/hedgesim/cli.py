"""Command-line front end: config parsing, dispatch, CSV output.

Four subcommands: ``moments``, ``simulate``, ``sweep``, ``utility``.  Every
option is a ``--key=value`` flag; the same keys can come from a config file
(plain ``key=value`` lines or JSON) given with ``--config``, with flags
overriding file values.  Results are CSV with a ``#``-prefixed metadata
header (version, full effective config, wall time).  Exit codes: 0 success,
1 runtime failure (including any non-finite value in the output), 2 config
error.  Files are written atomically: data goes to ``<out>.partial`` and is
renamed on success, so an interrupted run leaves no final file.

The CSV body (all non-``#`` lines) is byte-identical for identical config
and seed regardless of worker count; only metadata (wall time) varies.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import metrics as metrics_mod
from . import moments as moments_mod
from .models import BM, BS_DELTA, DRIFTED, ModelSpec, path_csv_rows, simulate, subseed
from .montecarlo import SWEEP_CSV_HEADER, sweep, sweep_csv_row
from .schemes import SchemeSpec, ShatMode, build_schedule, schedule_csv_rows
from .utility import UTILITY_CSV_HEADER, UtilityParams, scaled_utility_experiment, utility_csv_row

COMMANDS = ("moments", "simulate", "sweep", "utility")

_MODEL_ALIASES = {"bm": BM, "brownian_martingale": BM,
                  "drifted": DRIFTED, "drifted_brownian": DRIFTED,
                  "bs": BS_DELTA, "black_scholes_delta": BS_DELTA}
_SCHEME_ALIASES = {"equidistant": "equidistant", "hitting": "hitting_unbiased",
                   "hitting_unbiased": "hitting_unbiased",
                   "biased": "hitting_biased", "hitting_biased": "hitting_biased"}


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _as_float(key, raw):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {raw!r}")


def _as_int(key, raw):
    try:
        if isinstance(raw, float) and raw != int(raw):
            raise ValueError
        return int(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {raw!r}")


def _as_str(key, raw):
    return str(raw)


# key -> (cast, default); None default means required-if-used
_MODEL_KEYS = {
    "model": (_as_str, "bm"), "T": (_as_float, 1.0), "dt": (_as_float, 1e-3),
    "drift": (_as_float, 0.0), "spot": (_as_float, 100.0), "strike": (_as_float, 100.0),
    "vol": (_as_float, 0.2), "rate": (_as_float, 0.0), "maturity": (_as_float, 2.0),
    "s_mode": (_as_str, "unit"), "k_cap": (_as_float, 1e8),
}
_SCHEME_KEYS = {
    "scheme": (_as_str, "hitting"), "n": (_as_int, 100), "eps": (_as_float, 0.05),
    "gamma": (_as_float, 0.0), "shat": (_as_str, "const"), "shat_c": (_as_float, 1.0),
}
_RUN_KEYS = {
    "beta": (_as_float, 0.0), "n_paths": (_as_int, 1000), "seed": (_as_int, 0),
    "workers": (_as_int, 0), "output": (_as_str, ""),
}

_SCHEMAS = {
    "moments": {"x_min": (_as_float, -5.0), "x_max": (_as_float, 5.0),
                "x_step": (_as_float, 0.1), "beta": (_as_float, 0.5),
                "alpha": (_as_float, 2.0 / 3.0), "output": (_as_str, "")},
    "simulate": {**_MODEL_KEYS, **_SCHEME_KEYS, **_RUN_KEYS,
                 "dump_path": (_as_str, ""), "dump_schedule": (_as_str, "")},
    "sweep": {**_MODEL_KEYS, **_SCHEME_KEYS, **_RUN_KEYS,
              "eps_list": (_as_str, ""), "n_list": (_as_str, "")},
    "utility": {**_MODEL_KEYS, "mu": (_as_float, 12.0), "alpha": (_as_float, 50.0),
                "gamma": (_as_float, 0.0), "beta": (_as_float, 0.0),
                "n_paths": (_as_int, 1000), "seed": (_as_int, 0),
                "workers": (_as_int, 0), "output": (_as_str, "")},
}


def _read_config_file(path: str) -> dict:
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path!r}: {exc}")
    stripped = text.lstrip()
    if path.endswith(".json") or stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path!r}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config", "JSON config must be an object")
        return {str(k): v for k, v in data.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_argv(argv: list[str]) -> tuple[str, dict]:
    """Returns (command, raw key->value dict) merging config file and flags."""
    file_cfg: dict = {}
    command = None
    flags: dict = {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg in ("-h", "--help"):
            raise SystemExit(_usage())
        if arg == "--config" or arg.startswith("--config="):
            path = arg.partition("=")[2] if "=" in arg else None
            if path is None:
                i += 1
                if i >= len(argv):
                    raise ConfigError("config", "--config needs a file path")
                path = argv[i]
            file_cfg.update(_read_config_file(path))
        elif arg.startswith("--"):
            key, sep, value = arg[2:].partition("=")
            if not sep:
                raise ConfigError(key or arg, "flags must use --key=value form")
            flags[key.replace("-", "_")] = value
        elif command is None:
            command = arg
        else:
            raise ConfigError(arg, "unexpected positional argument")
        i += 1
    if command is None:
        command = file_cfg.pop("command", None)
        if command is None:
            raise ConfigError("command", f"no command given; expected one of {COMMANDS}")
    else:
        file_cfg.pop("command", None)
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}; expected one of {COMMANDS}")
    merged = dict(file_cfg)
    merged.update(flags)
    return command, merged


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated command plus its effective key->value mapping.

    Unknown keys are rejected at construction and defaults are filled in, so
    holders of an ExperimentConfig can dispatch without further checks.
    """

    command: str
    values: dict

    @classmethod
    def from_argv(cls, argv: list[str]) -> "ExperimentConfig":
        command, raw = _parse_argv(argv)
        schema = _SCHEMAS[command]
        cfg = {}
        for key, value in raw.items():
            if key not in schema:
                raise ConfigError(key, "unknown key for this command")
            cfg[key] = schema[key][0](key, value)
        for key, (_, default) in schema.items():
            cfg.setdefault(key, default)
        return cls(command=command, values=cfg)


def _build_model(cfg: dict) -> ModelSpec:
    kind = _MODEL_ALIASES.get(cfg["model"])
    if kind is None:
        raise ConfigError("model", f"unknown model {cfg['model']!r}")
    try:
        return ModelSpec(kind=kind, T=cfg["T"], dt=cfg["dt"], drift=cfg["drift"],
                         spot=cfg["spot"], strike=cfg["strike"], vol=cfg["vol"],
                         rate=cfg["rate"], maturity=cfg["maturity"],
                         s_mode=cfg["s_mode"], k_cap=cfg["k_cap"])
    except ValueError as exc:
        raise ConfigError("model", str(exc))


def _build_scheme(cfg: dict) -> SchemeSpec:
    kind = _SCHEME_ALIASES.get(cfg["scheme"])
    if kind is None:
        raise ConfigError("scheme", f"unknown scheme {cfg['scheme']!r}")
    beta = cfg.get("beta", 0.0)
    try:
        if kind == "equidistant":
            return SchemeSpec.equidistant(cfg["n"])
        if kind == "hitting_unbiased":
            if cfg["shat"] == "const":
                shat = ShatMode.const(cfg["shat_c"])
            elif cfg["shat"] == "power_s":
                shat = ShatMode.power_s(beta)
            elif cfg["shat"] == "power_k":
                shat = ShatMode.power_k()
            else:
                raise ConfigError("shat", f"unknown shat mode {cfg['shat']!r}")
            return SchemeSpec.hitting_unbiased(cfg["eps"], shat)
        return SchemeSpec.hitting_biased(cfg["eps"], cfg["gamma"], beta)
    except ValueError as exc:
        raise ConfigError("scheme", str(exc))


def _validate_beta(cfg: dict) -> None:
    if not 0.0 <= cfg["beta"] < 2.0:
        raise ConfigError("beta", f"must be in [0, 2), got {cfg['beta']}")


def _workers(cfg: dict):
    return cfg["workers"] if cfg["workers"] > 0 else None


# ----------------------------------------------------------------- commands


def _cmd_moments(cfg: dict) -> list[str]:
    if cfg["x_step"] <= 0.0:
        raise ConfigError("x_step", "must be positive")
    if cfg["x_max"] < cfg["x_min"]:
        raise ConfigError("x_max", "must be >= x_min")
    beta, alpha = cfg["beta"], cfg["alpha"]
    if not 0.0 <= beta < 2.0:
        raise ConfigError("beta", f"must be in [0, 2), got {beta}")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("alpha", f"must be in (0, 1], got {alpha}")
    with_ks1 = beta < 1.0
    header = "x,pearson_gap,fukasawa_gap," + ("ks1_margin," if with_ks1 else "") \
             + "ks20_margin,bernoulli_ratio,efficiency_factor,g"
    rows = [header]
    xs = np.arange(cfg["x_min"], cfg["x_max"] + 1e-12, cfg["x_step"])
    for x in xs:
        x = float(x)
        m = moments_mod.exact_moments(moments_mod.bernoulli_distribution(x), beta)
        cells = [x, moments_mod.pearson_gap(m), moments_mod.fukasawa_gap(m)]
        if with_ks1:
            cells.append(moments_mod.ks1_margin(m))
        cells += [moments_mod.ks20_margin(m, alpha),
                  moments_mod.bernoulli_ratio(x, alpha, beta),
                  moments_mod.efficiency_factor(x, beta),
                  moments_mod.g(x, beta)]
        rows.append(",".join(repr(c) for c in cells))
    return rows


def _cmd_simulate(cfg: dict) -> list[str]:
    _validate_beta(cfg)
    if cfg["n_paths"] < 1:
        raise ConfigError("n_paths", "must be >= 1")
    model = _build_model(cfg)
    scheme = _build_scheme(cfg)
    rows = [metrics_mod.REPORT_CSV_HEADER]
    for i in range(cfg["n_paths"]):
        path = simulate(model, subseed(cfg["seed"], i))
        sched = build_schedule(scheme, path)
        rep = metrics_mod.evaluate(path, sched, cfg["beta"])
        rows.append(metrics_mod.report_csv_row(i, rep))
        if i == 0:
            if cfg["dump_path"]:
                _write_plain(cfg["dump_path"], list(path_csv_rows(path)))
            if cfg["dump_schedule"]:
                _write_plain(cfg["dump_schedule"], list(schedule_csv_rows(path, sched)))
    return rows


def _cmd_sweep(cfg: dict) -> list[str]:
    _validate_beta(cfg)
    if cfg["n_paths"] < 100:
        raise ConfigError("n_paths", "must be >= 100 for sweep experiments")
    model = _build_model(cfg)
    scheme = _build_scheme(cfg)
    if cfg["eps_list"] and cfg["n_list"]:
        raise ConfigError("eps_list", "give either eps_list or n_list, not both")
    raw = cfg["eps_list"] or cfg["n_list"]
    if not raw:
        raise ConfigError("eps_list", "sweep needs eps_list or n_list")
    try:
        values = [float(v) for v in str(raw).split(",") if v != ""]
    except ValueError:
        raise ConfigError("eps_list" if cfg["eps_list"] else "n_list",
                          f"expected comma-separated numbers, got {raw!r}")
    if not values:
        raise ConfigError("eps_list", "sweep needs at least one value")
    points = sweep(model, scheme, cfg["beta"], values, cfg["n_paths"], cfg["seed"],
                   workers=_workers(cfg))
    return [SWEEP_CSV_HEADER] + [sweep_csv_row(p) for p in points]


def _cmd_utility(cfg: dict) -> list[str]:
    if cfg["n_paths"] < 100:
        raise ConfigError("n_paths", "must be >= 100")
    model = _build_model(cfg)
    try:
        params = UtilityParams(mu=cfg["mu"], beta=cfg["beta"], alpha=cfg["alpha"],
                               gamma=cfg["gamma"])
    except ValueError as exc:
        msg = str(exc)
        key = "mu" if "mu" in msg else ("beta" if "beta" in msg else "alpha")
        raise ConfigError(key, msg)
    rep = scaled_utility_experiment(model, params, cfg["n_paths"], cfg["seed"],
                                    workers=_workers(cfg))
    return [UTILITY_CSV_HEADER, utility_csv_row(rep)]


_RUNNERS = {"moments": _cmd_moments, "simulate": _cmd_simulate,
            "sweep": _cmd_sweep, "utility": _cmd_utility}


# ----------------------------------------------------------------- output


def _check_finite(rows: list[str]) -> None:
    for row in rows[1:]:
        for cell in row.split(","):
            if not cell:
                continue
            try:
                val = float(cell)
            except ValueError:
                continue
            if not math.isfinite(val):
                raise RuntimeError(f"non-finite value {cell!r} in output row {row!r}")


def _resolve_output(path: str) -> str:
    outdir = os.environ.get("HEDGESIM_OUTDIR", "")
    if outdir and not os.path.isabs(path):
        return os.path.join(outdir, path)
    return path


def _write_plain(path: str, rows: list[str]) -> None:
    path = _resolve_output(path)
    tmp = path + ".partial"
    try:
        with open(tmp, "w") as fh:
            fh.write("\n".join(rows) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _emit(cfg: dict, command: str, rows: list[str], started: float) -> None:
    meta = [f"# hedgesim {__version__}", f"# command={command}"]
    for key in sorted(cfg):
        meta.append(f"# {key}={cfg[key]}")
    meta.append(f"# wall_time_s={time.time() - started:.3f}")
    text = meta + rows
    out = cfg.get("output", "")
    if out:
        _write_plain(out, text)
    else:
        sys.stdout.write("\n".join(text) + "\n")


def _usage() -> str:
    return (
        "usage: hedgesim [--config FILE] COMMAND [--key=value ...]\n"
        f"commands: {', '.join(COMMANDS)}\n"
        "Flags override config-file values; see README for the key reference."
    )


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.time()
    try:
        config = ExperimentConfig.from_argv(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = _RUNNERS[config.command](config.values)
        _check_finite(rows)
        _emit(config.values, config.command, rows, started)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``mpemba <experiment> [--config FILE] [--key value ...]``.

Config files are flat ``key = value`` text (``#`` starts a comment); command
line overrides win. Lists are comma separated. Each run writes
``<name>.csv`` and ``<name>.plot`` (a gnuplot script) into ``out``.

Exit codes: 0 success, 2 configuration error, 3 physics-invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import experiments
from .errors import (ConfigError, CutoffLeakageError, IntegrationError, InvariantViolation,
                     NonDiagonalizableError, PartnerNotFoundError)

EXIT_CONFIG = 2
EXIT_INVARIANT = 3
REQUIRED = object()


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _bloch(text):
    v = _floats(text)
    if len(v) != 3:
        raise ValueError("need three components")
    return v


def _method(text):
    if text not in ("auto", "exact", "rk4"):
        raise ValueError("expected auto, exact or rk4")
    return text


_TIME = {"t_max": (float, REQUIRED), "dt": (float, REQUIRED)}
_COLLECTIVE = {"L": (_ints, REQUIRED), "Jz": (float, REQUIRED), "Gamma": (float, REQUIRED),
               "mu": (float, REQUIRED), "T": (float, REQUIRED), "rk4_dt": (float, 5e-3), **_TIME}
_QUBIT = {"omega": (float, REQUIRED), "mu": (float, REQUIRED), "T": (float, REQUIRED),
          "bloch": (_bloch, REQUIRED), **_TIME}

SCHEMAS = {
    "davies-qubit": ({"omega": (float, REQUIRED), "gamma_plus": (float, REQUIRED),
                      "gamma_minus": (float, REQUIRED), "T": (float, REQUIRED),
                      "bloch": (_bloch, REQUIRED), **_TIME},
                     experiments.davies_qubit_experiment),
    "dfs": ({**_COLLECTIVE, "method": (_method, "auto")}, experiments.dfs_experiment),
    "extreme": (_COLLECTIVE, experiments.extreme_experiment),
    "trajectories": ({**_QUBIT, "trajectories": (int, REQUIRED), "seed": (int, REQUIRED)},
                     experiments.trajectories_experiment),
    "coherences": ({**_QUBIT, "beta_prime": (float, REQUIRED), "c1": (float, REQUIRED),
                    "c2": (float, REQUIRED)}, experiments.coherences_experiment),
    "gaussian": ({"omega": (float, REQUIRED), "N_modes": (int, REQUIRED),
                  "omega_min": (float, REQUIRED), "omega_max": (float, REQUIRED),
                  "coupling": (float, REQUIRED), "T": (float, REQUIRED),
                  "alpha": (complex, REQUIRED), "s": (float, REQUIRED), **_TIME},
                 experiments.gaussian_experiment),
    "hp-check": ({"alpha": (complex, REQUIRED), "Jz": (float, REQUIRED), "N": (_floats, REQUIRED),
                  "gamma": (float, REQUIRED), "ncut": (int, REQUIRED), **_TIME},
                 experiments.hp_check_experiment),
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ConfigError(f"{source}:{n}: empty key")
        out[k] = v
    return out


def preset_text(name: str) -> str:
    res = resources.files("mpemba") / "presets" / f"{name}.cfg"
    if not res.is_file():
        raise ConfigError(f"no preset named {name!r}")
    return res.read_text()


def build_config(experiment: str, raw: dict[str, str]) -> dict:
    """Validate ``raw`` string values against the experiment's schema."""
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(SCHEMAS)}")
    schema, _ = SCHEMAS[experiment]
    raw = dict(raw)
    out_dir = raw.pop("out", ".")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {experiment}: {', '.join(unknown)}")
    missing = [k for k, (_, d) in schema.items() if d is REQUIRED and k not in raw]
    if missing:
        raise ConfigError(f"missing keys for {experiment}: {', '.join(missing)}")
    cfg = {"out": Path(out_dir)}
    for k, (conv, default) in schema.items():
        if k not in raw:
            cfg[k] = default
            continue
        try:
            cfg[k] = conv(raw[k].replace(" ", "")) if conv is complex else conv(raw[k])
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {raw[k]!r} ({exc})") from None
    return cfg


def _parse_overrides(items: list[str]) -> dict[str, str]:
    out = {}
    it = iter(items)
    for tok in it:
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            val = next(it, None)
            if val is None:
                raise ConfigError(f"--{key} needs a value")
        out[key] = val
    return out


def run(experiment: str, raw: dict[str, str]) -> list[Path]:
    cfg = build_config(experiment, raw)
    _, runner = SCHEMAS[experiment]
    try:
        tables = runner(cfg)
    except ConfigError:
        raise
    except ValueError as exc:
        # parameter problems surfaced by the models are configuration errors
        raise ConfigError(str(exc)) from exc
    cfg["out"].mkdir(parents=True, exist_ok=True)
    written = []
    for t in tables:
        for suffix, body in ((".csv", t.to_csv()), (".plot", t.plot_script())):
            path = cfg["out"] / f"{t.name}{suffix}"
            with open(path, "w", newline="\n") as fh:
                fh.write(body)
            written.append(path)
    return written


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mpemba", description=__doc__.split("\n\n")[0],
        epilog="experiments: " + ", ".join(SCHEMAS))
    parser.add_argument("experiment", choices=sorted(SCHEMAS))
    parser.add_argument("--config", help="key = value file")
    parser.add_argument("--preset", action="store_true",
                        help="start from the packaged parameters for this experiment")
    args, rest = parser.parse_known_args(argv)
    try:
        raw = {}
        if args.preset:
            raw.update(parse_config_text(preset_text(args.experiment), f"preset:{args.experiment}"))
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            raw.update(parse_config_text(text, args.config))
        raw.update(_parse_overrides(rest))
        written = run(args.experiment, raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, IntegrationError, CutoffLeakageError,
            NonDiagonalizableError, PartnerNotFoundError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())

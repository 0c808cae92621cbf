"""Command-line front end for convergence studies.

Settings come from an optional flat ``key = value`` config file overridden
by command-line flags.  Exit codes: 0 on success, 1 when a pipeline stage
fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .study import StudyConfig, StageError, format_table, run_study

#: config-file keys and the StudyConfig fields they set
_CONFIG_KEYS = {
    "scheme": ("scheme", str),
    "beta_minus": ("beta_minus", float),
    "beta_plus": ("beta_plus", float),
    "radius": ("radius", float),
    "ladder": ("ladder", "ladder"),
    "rel_tol": ("rel_tol", float),
    "max_iter": ("max_iter", int),
    "precond": ("preconditioner", str),
    "out_csv": ("out_csv", str),
    "out_plot": ("out_plot", str),
    "problem": ("problem", str),
}


class ConfigError(ValueError):
    pass


def _parse_ladder(text):
    try:
        ladder = tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"bad ladder {text!r}; expected comma-separated integers")
    if not ladder:
        raise ConfigError(f"bad ladder {text!r}; expected comma-separated integers")
    return ladder


def parse_config_file(path):
    """Parse a flat ``key = value`` file into StudyConfig keyword arguments."""
    kwargs = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        field, conv = _CONFIG_KEYS[key]
        if conv == "ladder":
            kwargs[field] = _parse_ladder(value)
        else:
            try:
                kwargs[field] = conv(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value {value!r} for {key}")
    return kwargs


def build_parser():
    parser = argparse.ArgumentParser(
        prog="iifem-study",
        description="Convergence study for the immersed-interface solver.",
    )
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--scheme", choices=("galerkin", "mixed_fvm"))
    parser.add_argument("--beta-minus", type=float, dest="beta_minus")
    parser.add_argument("--beta-plus", type=float, dest="beta_plus")
    parser.add_argument("--radius", type=float)
    parser.add_argument("--ladder", help="comma-separated resolutions, e.g. 8,16,32,64")
    parser.add_argument("--out-csv", dest="out_csv")
    parser.add_argument("--out-plot", dest="out_plot")
    parser.add_argument("--rel-tol", type=float, dest="rel_tol")
    parser.add_argument("--precond", choices=("none", "jacobi"), dest="preconditioner")
    return parser


def config_from_args(args):
    kwargs = {}
    if args.config:
        kwargs.update(parse_config_file(args.config))
    for field in (
        "scheme",
        "beta_minus",
        "beta_plus",
        "radius",
        "rel_tol",
        "preconditioner",
        "out_csv",
        "out_plot",
    ):
        value = getattr(args, field, None)
        if value is not None:
            kwargs[field] = value
    if args.ladder is not None:
        kwargs["ladder"] = _parse_ladder(args.ladder)
    config = StudyConfig(**kwargs)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))
    return config


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_study(config)
    except StageError as exc:
        print(f"study failed: {exc}", file=sys.stderr)
        return 1
    print(format_table(report))
    if config.out_csv:
        print(f"wrote {config.out_csv}")
    if config.out_plot:
        print(f"wrote {config.out_plot}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

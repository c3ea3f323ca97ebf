"""Command-line frontend.

Every command reads an optional ``key=value`` config file, applies flag
overrides (flags win), and embeds the resolved configuration in each
artifact it writes.  Exit codes: 0 success, 2 violated hypothesis or bad
input, 1 internal error.

Examples
--------
    modns field --kind random --m 4 --K 4 --seed 1 --out f.fld
    modns norm f.fld --family E --s -1 --p 2 --q 1
    modns evolve --config run.cfg --eps 0.5 --out run1
    modns verify S9-counterexample P5.9-q-monotonicity --out reports
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .decomp import UNIFORM_KINDS, DYADIC, SMOOTH, WindowError, cached_window, field_block_norms
from .grid import (Field, GridError, HypothesisError, VectorField, load_field, make_grid,
                   random_field, save_field, single_mode, zeros)
from .norms import FAMILIES, NormSpec, evaluate
from .ns import (DATA_KINDS, OCTANT_E, REGIMES, SolverConfig, bisect_epsilon,
                 diagnostics_to_dict, make_initial_data, picard_solve, save_trajectory,
                 scale_field)

log = logging.getLogger("modns")

EXIT_OK, EXIT_INTERNAL, EXIT_HYPOTHESIS = 0, 1, 2


class ConfigError(ValueError):
    """Malformed config file or value."""


@dataclass
class RunConfig:
    """Resolved run parameters; keys mirror the command-line flags."""

    d: int = 2
    m: int = 4
    K: int = 4
    s: float = -1.0
    r: float = 2.0
    T: float = 1.0
    nt: int = 64
    eps: float | None = None
    seed: int = 0
    regime: str = OCTANT_E
    data: str = "random_octant"
    out: str = "modns_out"
    threads: int = 1
    figures: bool = False

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={_format_value(v)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_mapping(parse_config_text(text))

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kw[key] = _coerce(key, raw, known[key].type)
        return cls(**kw)

    def merged(self, overrides: dict) -> "RunConfig":
        keep = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **keep)


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(key: str, raw, typ: str):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if "bool" in typ:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "None" in typ and text.lower() == "none":
            return None
        if typ.startswith("int"):
            return int(text)
        if typ.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return text


def parse_config_text(text: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment; blank lines are ignored."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {line!r}")
        k, v = (x.strip() for x in line.split("=", 1))
        if not k:
            raise ConfigError(f"line {n}: empty key")
        out[k] = v
    return out


def load_config(path: str | Path | None, overrides: dict) -> RunConfig:
    base = RunConfig()
    if path:
        base = RunConfig.from_text(Path(path).read_text())
    cfg = base.merged(overrides)
    defaulted = [f.name for f in fields(cfg)
                 if f.name not in overrides or overrides[f.name] is None]
    for name in defaulted:
        log.info("config %s=%s (file or default)", name, _format_value(getattr(cfg, name)))
    return cfg


# ---------------------------------------------------------------------------
# commands


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config_echo(cfg: RunConfig, out: Path) -> None:
    (out / "config.txt").write_text(cfg.to_text())


def cmd_field(args, cfg: RunConfig) -> int:
    g = make_grid(cfg.d, cfg.m, cfg.K)
    if args.kind == "zero":
        f = zeros(g)
    elif args.kind == "mode":
        xi = [float(v) for v in args.xi.split(",")] if args.xi else [1.0] + [0.0] * (g.d - 1)
        f = single_mode(g, xi)
    else:
        f = random_field(g, np.random.default_rng(cfg.seed), decay=args.decay)
    path = Path(args.path or cfg.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_field(f, path)
    print(path)
    return EXIT_OK


def cmd_decompose(args, cfg: RunConfig) -> int:
    f = load_field(args.field)
    w = cached_window(args.variant, f.grid, args.alpha)
    vals = field_block_norms(f, w, args.p)
    out = Path(args.path or Path(cfg.out) / "blocks.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"# variant={args.variant} alpha={args.alpha!r} p={args.p!r} "
                     f"grid=d{f.grid.d},m{f.grid.m},K{f.grid.K}"])
        wr.writerow(["block", "norm"])
        for idx, v in zip(w.block_indices(), np.ravel(vals)):
            wr.writerow([" ".join(map(str, idx)), repr(float(v))])
    if cfg.figures:
        from .figures import plot_block_norms
        plot_block_norms([], np.ravel(vals), out.with_suffix(".png"))
    print(out)
    return EXIT_OK


def cmd_norm(args, cfg: RunConfig) -> int:
    f = load_field(args.field)
    spec = NormSpec(args.family, args.s if args.s is not None else cfg.s, args.p, args.q,
                    args.variant)
    print(repr(float(evaluate(f, spec))))
    return EXIT_OK


def _initial_data(cfg: RunConfig) -> VectorField:
    g = make_grid(cfg.d, cfg.m, cfg.K)
    return make_initial_data(cfg.data, g, s=cfg.s, seed=cfg.seed, normalise=(cfg.s, cfg.r))


def _solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(cfg.regime, cfg.d, cfg.r, s=cfg.s, T=cfg.T, nt=cfg.nt)


def cmd_evolve(args, cfg: RunConfig) -> int:
    sc = _solver_config(cfg)  # validates the regime before any work
    base = _initial_data(cfg)

    def make(eps):
        return VectorField.from_spectral(base.grid, eps * base.spectral(), True)

    if cfg.eps is None:
        res = bisect_epsilon(make, sc, steps=args.bisect_steps)
        eps, traj, diag = res.eps, res.trajectory, res.diagnostics
    else:
        eps = cfg.eps
        traj, diag = picard_solve(make(eps), sc)
    out = _out_dir(cfg)
    _write_config_echo(cfg, out)
    echo = {"run": cfg.to_dict(), "solver": sc.to_dict(), "eps": eps}
    save_trajectory(traj, out / "trajectory", echo)
    diag.to_csv(out / "diagnostics.csv")
    summary = {"config": echo, "diagnostics": diagnostics_to_dict(diag),
               "final_ratio": diag.final_ratio}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str))
    if cfg.figures:
        from .figures import plot_diagnostics
        plot_diagnostics(diag, out / "diagnostics.png")
    print(f"eps={eps!r} converged={diag.converged} iterations={diag.iterations} "
          f"final_ratio={diag.final_ratio:.4g} residual={diag.residual:.3g}")
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    from .verify import REGISTRY, markdown_summary, run_suite, write_csv, write_json
    ids = args.ids or ["all"]
    ids = "all" if ids == ["all"] else ids
    unknown = [] if ids == "all" else [i for i in ids if i not in REGISTRY]
    if unknown:
        raise KeyError(f"unknown check ids: {', '.join(unknown)}")
    common = {"seed": cfg.seed}
    if args.trials is not None:
        common["trials"] = args.trials
    res = run_suite(ids, workers=max(1, cfg.threads), common=common)
    out = _out_dir(cfg)
    _write_config_echo(cfg, out)
    write_json(res, out / "report.json")
    write_csv(res, out / "report.csv")
    md = f"config: `{' '.join(cfg.to_text().split())}`\n\n" + markdown_summary(res)
    (out / "summary.md").write_text(md)
    if cfg.figures:
        from .figures import plot_suite
        plot_suite(res.rows(), out / "summary.png")
    for row in res.rows():
        print(f"{row['id']},{row['verdict']}")
    return EXIT_OK


def cmd_scale(args, cfg: RunConfig) -> int:
    f = load_field(args.field)
    g = scale_field(f, args.lam)
    base = Path(args.path or Path(cfg.out) / "scaled.fld")
    base.parent.mkdir(parents=True, exist_ok=True)
    save_field(g, base)
    spec = NormSpec("E", args.s if args.s is not None else cfg.s, args.p, args.q)
    with open(base.with_suffix(".csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["which", "lambda", "s", "p", "q", "norm", "flags"])
        for tag, h in (("before", f), ("after", g)):
            wr.writerow([tag, repr(float(args.lam)), repr(spec.s), repr(spec.p), repr(spec.q),
                         repr(float(evaluate(h, spec))), ";".join(h.flags)])
    print(base)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--nt", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--regime", choices=REGIMES)
    p.add_argument("--data", choices=DATA_KINDS)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    p.add_argument("--figures", action="store_true", default=None,
                   help="also render PNG figures (needs matplotlib)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modns", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="write a field container")
    _add_common(p)
    p.add_argument("--kind", choices=("random", "zero", "mode"), default="random")
    p.add_argument("--xi", help="comma-separated frequency for --kind mode")
    p.add_argument("--decay", type=float, default=0.0)
    p.add_argument("--path", help="output file (defaults to --out)")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("decompose", help="per-block L^p norms as CSV")
    _add_common(p)
    p.add_argument("field")
    p.add_argument("--variant", choices=UNIFORM_KINDS + (DYADIC,), default=SMOOTH)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--path")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("norm", help="print one norm of a field")
    _add_common(p)
    p.add_argument("field")
    p.add_argument("--family", choices=FAMILIES, default="E")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--variant", choices=UNIFORM_KINDS, default=SMOOTH)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("evolve", help="solve the mild equation by Picard iteration")
    _add_common(p)
    p.add_argument("--bisect-steps", type=int, default=4)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", help="run registered checks")
    _add_common(p)
    p.add_argument("ids", nargs="*", help="check ids, or 'all'")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scale", help="dilate a field and report norms before and after")
    _add_common(p)
    p.add_argument("field")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--path")
    p.set_defaults(func=cmd_scale)
    return ap


_CONFIG_KEYS = [f.name for f in fields(RunConfig)]


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    try:
        cfg = load_config(args.config, overrides)
        return args.func(args, cfg)
    except (HypothesisError, ConfigError, GridError, WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except Exception as exc:  # last resort: report and signal an internal failure
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line front end: ``fiberscope {fibration,jacobians,determinant,maps,all}``.

Exit status is 0 when every selected suite passes, 1 on a verification
failure and 2 on a configuration error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import click
import numpy as np

from . import arrangement as arr
from . import polysys as ps
from .monodromy import TrackerConfig
from .suites import (
    Tolerances,
    boundary_suite,
    determinant_suite,
    fibration_suite,
    jacobian_suite,
    maps_suite,
)

SCHEMA = "fiberscope/1"


# --- complex literals ------------------------------------------------------


def _num(x: float) -> str:
    return repr(float(x))


def format_complex(c: complex) -> str:
    """``a+bi`` with shortest round-trip decimals."""
    c = complex(c)
    im = c.imag
    sign = "-" if im < 0 else "+"
    return f"{_num(c.real + 0.0)}{sign}{_num(abs(im))}i"


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty complex literal")
    return complex(s.replace("i", "j"))


def parse_complex_list(text: str) -> np.ndarray:
    return np.array([parse_complex(tok) for tok in text.split(",")], dtype=np.complex128)


def parse_n(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        ns = list(range(int(lo), int(hi) + 1))
    else:
        ns = [int(text)]
    if not ns:
        raise ValueError(f"empty range {text!r}")
    return ns


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return format_complex(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


# --- configuration ---------------------------------------------------------


@dataclass
class RunConfig:
    ns: list
    z: np.ndarray | None = None
    random: int = 0
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    samples: int = 1000
    draws: int = 10_000
    map_samples: int = 10_000
    halving: bool = True
    detour: bool = False
    out: str | None = None
    fmt: str = "json"

    def runs(self) -> list:
        """``(n, z)`` pairs sorted by ``n`` then by ``z`` lexicographically."""
        out = []
        if self.z is not None:
            out.append((self.z.size + 1, self.z))
        for n in self.ns:
            rng = np.random.default_rng([self.seed, n, 0])
            out += [(n, arr.random_z(rng, n)) for _ in range(self.random)]
        key = lambda r: (r[0], [(float(c.real), float(c.imag)) for c in r[1]])
        return sorted(out, key=key)

    def zs_by_n(self) -> dict:
        grouped = {n: [] for n in self.ns}
        for n, z in self.runs():
            grouped.setdefault(n, []).append(z)
        return {n: zs or [arr.canonical_z(n)] for n, zs in grouped.items()}

    def describe(self) -> dict:
        return {
            "n": self.ns, "z": None if self.z is None else list(self.z), "random": self.random,
            "seed": self.seed,
            "tolerances": {"mem": self.tolerances.mem, "res": self.tolerances.res,
                           "rank": self.tolerances.rank, "match_ratio": self.tracker.match_ratio},
            "tracker": {"initial_step": self.tracker.initial_step, "min_step": self.tracker.min_step,
                        "newton_tol": self.tracker.newton_tol, "max_newton": self.tracker.max_newton,
                        "prox_factor": self.tracker.prox_factor,
                        "circle_factor": self.tracker.circle_factor},
            "samples": self.samples, "draws": self.draws, "map_samples": self.map_samples,
            "halving_check": self.halving, "detour_check": self.detour,
        }


def build_config(n, z, random, seed, tol_mem, tol_res, tol_rank, step, match_ratio, samples,
                 draws, map_samples, halving, detour, out, fmt, need_z: bool) -> RunConfig:
    try:
        zs = parse_complex_list(z) if z else None
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--z")
    try:
        ns = parse_n(n) if n else ([zs.size + 1] if zs is not None else [3])
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--n")
    if min(ns) < 3:
        raise click.BadParameter("n must be at least 3", param_hint="--n")
    if zs is not None:
        if len(ns) != 1 or zs.size != ns[0] - 1:
            raise click.BadParameter(f"--z needs exactly n-1 coordinates for a single n", param_hint="--z")
        if not arr.membership(arr.SpaceTag.Z, zs, tol_mem):
            raise click.BadParameter("z is not in Z (needs nonzero, pairwise distinct entries)",
                                     param_hint="--z")
    if need_z and zs is None and not random:
        raise click.UsageError("give --z or --random")
    if random < 0 or samples < 1 or draws < 1 or map_samples < 1:
        raise click.UsageError("counts must be positive")
    try:
        tracker = TrackerConfig(initial_step=step, match_ratio=match_ratio, res_tol=tol_res)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    return RunConfig(ns=ns, z=zs, random=random, seed=seed,
                     tolerances=Tolerances(tol_mem, tol_res, tol_rank), tracker=tracker,
                     samples=samples, draws=draws, map_samples=map_samples, halving=halving,
                     detour=detour, out=out, fmt=fmt)


# --- suites per command ----------------------------------------------------


def run_fibration(cfg: RunConfig) -> list:
    return [fibration_suite(cfg.runs(), cfg.tracker, check_halving=cfg.halving,
                            check_detour=cfg.detour)]


def run_jacobians(cfg: RunConfig) -> list:
    return [jacobian_suite(cfg.ns, cfg.zs_by_n(), cfg.seed, cfg.samples, cfg.tolerances)]


def run_determinant(cfg: RunConfig) -> list:
    return [determinant_suite(cfg.seed, cfg.draws)]


def run_maps(cfg: RunConfig) -> list:
    return [maps_suite(cfg.ns, cfg.seed, cfg.map_samples, cfg.tolerances),
            boundary_suite(cfg.ns, cfg.zs_by_n(), cfg.seed, cfg.tolerances)]


def run_all(cfg: RunConfig) -> list:
    return run_fibration(cfg) + run_jacobians(cfg) + run_determinant(cfg) + run_maps(cfg)


def build_report(cfg: RunConfig, suites: list) -> dict:
    failed = [f"{s.name}/{c['name']}" for s in suites for c in s.cases if not c["pass"]]
    return jsonable({
        "schema": SCHEMA,
        "config": cfg.describe(),
        "suites": [{"name": s.name, "pass": s.passed, "seconds": s.seconds, "cases": s.cases}
                   for s in suites],
        "summary": {"pass": all(s.passed for s in suites),
                    "suites": len(suites), "cases": sum(len(s.cases) for s in suites),
                    "failed": failed},
    })


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "case", "pass", "n", "detail"])
    for s in report["suites"]:
        for c in s["cases"]:
            detail = {k: v for k, v in c.items() if k not in ("name", "pass", "n")}
            w.writerow([s["name"], c["name"], c["pass"], c.get("n", ""),
                        json.dumps(detail, separators=(",", ":"))])
    return buf.getvalue()


# --- click -----------------------------------------------------------------


def common_options(fn):
    opts = [
        click.option("--n", "n", default=None, help="n or a range such as 3..6 (default 3)."),
        click.option("--z", "z", default=None, help="Comma-separated z, e.g. 1+0i,2+0i."),
        click.option("--random", "random", default=0, type=int, help="Seeded random z per n."),
        click.option("--seed", default=0, type=int, show_default=True),
        click.option("--tol-mem", default=arr.TAU_MEM, type=float, show_default=True),
        click.option("--tol-res", default=ps.TAU_RES, type=float, show_default=True),
        click.option("--tol-rank", default=ps.TAU_RANK, type=float, show_default=True),
        click.option("--step", default=None, type=float, help="Initial tracker step."),
        click.option("--match-ratio", default=10.0, type=float, show_default=True),
        click.option("--samples", default=1000, type=int, show_default=True,
                     help="M1 samples per case."),
        click.option("--draws", default=10_000, type=int, show_default=True,
                     help="Determinant draws per n."),
        click.option("--map-samples", default=10_000, type=int, show_default=True),
        click.option("--halving/--no-halving", default=True, show_default=True,
                     help="Re-track every loop with the initial step halved."),
        click.option("--detour-check", "detour", is_flag=True,
                     help="Re-track every loop with the other detour side."),
        click.option("--out", default=None, type=click.Path(dir_okay=False)),
        click.option("--format", "fmt", default="json", type=click.Choice(["json", "csv"]),
                     show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """Numerical checks of the fibration Y -> Z and its fibers."""


def _execute(runner, need_z: bool, **kwargs) -> None:
    cfg = build_config(need_z=need_z, **kwargs)
    suites = runner(cfg)
    report = build_report(cfg, suites)
    text = render(report, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        for s in report["suites"]:
            status = "PASS" if s["pass"] else "FAIL"
            click.echo(f"{s['name']}: {status} ({len(s['cases'])} cases, {s['seconds']:.2f}s)")
        for name in report["summary"]["failed"]:
            click.echo(f"  failed: {name}", err=True)
    else:
        click.echo(text, nl=False)
    sys.exit(0 if report["summary"]["pass"] else 1)


@cli.command()
@common_options
def fibration(**kwargs):
    """Genus, punctures and connectivity of the fibers from numerical monodromy."""
    _execute(run_fibration, True, **kwargs)


@cli.command()
@common_options
def jacobians(**kwargs):
    """Rank of M1 and kernel dimensions at the boundary points."""
    _execute(run_jacobians, False, **kwargs)


@cli.command()
@common_options
def determinant(**kwargs):
    """Closed-form structured determinant against elimination."""
    _execute(run_determinant, False, **kwargs)


@cli.command()
@common_options
def maps(**kwargs):
    """Round trips of the map chain and the boundary approach paths."""
    _execute(run_maps, False, **kwargs)


@cli.command(name="all")
@common_options
def all_(**kwargs):
    """Every suite, one report."""
    _execute(run_all, True, **kwargs)


def main():
    cli()


if __name__ == "__main__":
    main()

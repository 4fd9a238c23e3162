"""Command line front end: fit, simulate, solve, sweep, report.

Every command validates its whole configuration before doing any work
and is deterministic given its arguments, input files, and seed. Exit
codes are a stable scripting contract: 0 success, 1 internal failure,
2 user or input error. Numeric output always goes through one
formatter so CSV files and the aligned stdout tables stay byte-stable
across runs and worker counts.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .abstract_tree import PvbInstance
from .distributions import FAMILIES, fit_report
from .gains import DEFAULT_EPSILON, GainFileError, load_gain_series
from .lookahead import FixedLookaheadConfig, ProbLookaheadConfig
from .mini_bnb import MpsError, SolverConfig, SolverError, load_mps, solve
from .simulator import STRATEGIES, CampaignSpec, UnclosableError, run_campaign

NODE_GEO_SHIFT = 100.0
LP_GEO_SHIFT = 1.0

CONFIG_KEYS = ("L", "K", "phi", "min_nonzero_samples", "family", "epsilon")


class CliError(Exception):
    """User or input error; reported on stderr with exit code 2."""


def _num(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".10g")


def shifted_geomean_stat(values, shift: float) -> float:
    """exp(mean(log(v + shift))) - shift over a nonempty sequence."""
    vals = list(values)
    if not vals:
        raise ValueError("need at least one value")
    return math.exp(sum(math.log(v + shift) for v in vals) / len(vals)) - shift


def render_table(header, rows) -> str:
    """Aligned text table; first column left, the rest right-justified."""
    table = [list(header)] + [list(r) for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = []
    for row in table:
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _parse_list(text: str, kind, what: str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise CliError(f"{what} must name at least one entry")
    try:
        return tuple(kind(t) for t in items)
    except ValueError as exc:
        raise CliError(f"bad {what} {text!r}: {exc}") from None


@dataclass(frozen=True)
class Knobs:
    """The tunable parameters shared by simulate, solve, and sweep."""

    L: int = 9
    K: int = 10**6
    phi: float = 0.6
    min_nonzero_samples: int = 5
    family: str = "pareto"
    epsilon: float = DEFAULT_EPSILON

    def fixed(self) -> FixedLookaheadConfig:
        return FixedLookaheadConfig(L=self.L, K=self.K)

    def prob(self) -> ProbLookaheadConfig:
        return ProbLookaheadConfig(
            phi=self.phi,
            min_nonzero_samples=self.min_nonzero_samples,
            family=self.family,
        )


def _load_config_file(path) -> dict:
    """key=value lines; # starts a comment; unknown keys are refused."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror or exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise CliError(
                f"{path}:{lineno}: unknown key {key!r} (known: {', '.join(CONFIG_KEYS)})"
            )
        if key in values:
            raise CliError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = (lineno, text)
    parsed = {}
    casts = {"L": int, "K": int, "min_nonzero_samples": int, "phi": float, "epsilon": float}
    for key, (lineno, text) in values.items():
        if key == "family":
            parsed[key] = text
            continue
        try:
            parsed[key] = casts[key](text)
        except ValueError:
            raise CliError(f"{path}:{lineno}: bad value {text!r} for {key}") from None
    return parsed


def _resolve_knobs(args) -> Knobs:
    merged = {}
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    family = merged.get("family", "pareto")
    if family not in FAMILIES:
        raise CliError(f"unknown family {family!r} (known: {', '.join(FAMILIES)})")
    try:
        knobs = Knobs(**merged)
        knobs.fixed()
        knobs.prob()
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from None
    if not knobs.epsilon > 0:
        raise CliError(f"epsilon must be positive, got {knobs.epsilon!r}")
    return knobs


def _load_series(path):
    try:
        return load_gain_series(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
    except GainFileError as exc:
        raise CliError(str(exc)) from None


# ---------------------------------------------------------------- fit


def cmd_fit(args) -> int:
    all_series = _load_series(args.gainfile)
    if not all_series:
        raise CliError(f"{args.gainfile}: no gain rows")
    families = (
        _parse_list(args.families, str, "families") if args.families else FAMILIES
    )
    for family in families:
        if family not in FAMILIES:
            raise CliError(f"unknown family {family!r} (known: {', '.join(FAMILIES)})")
    if not 0.0 < args.alpha < 1.0:
        raise CliError(f"alpha must be in (0,1), got {args.alpha!r}")
    rows = []
    for series in all_series:
        for report in fit_report(series, families, alpha=args.alpha):
            theta = report.distribution.theta or ()
            rows.append(
                (
                    series.node_id,
                    report.distribution.family,
                    _num(report.distribution.p0),
                    _num(theta[0]) if len(theta) > 0 else "",
                    _num(theta[1]) if len(theta) > 1 else "",
                    _num(report.ks_statistic),
                    _num(report.ks_p_value),
                    report.verdict,
                )
            )
    header = ("node_id", "family", "p0", "theta1", "theta2", "ks_D", "ks_p", "verdict")
    _write_csv(args.out, header, rows)
    print(render_table(header, rows))
    return 0


# ----------------------------------------------------------- simulate


@dataclass(frozen=True)
class CampaignConfig:
    """Fully validated simulate run: pool, grid, seeding, and knobs."""

    pool: tuple[float, ...]
    gaps: tuple[float, ...]
    trials: int
    seed: int
    strategies: tuple[str, ...]
    workers: int
    out: str
    knobs: Knobs


def _build_campaign_config(args) -> CampaignConfig:
    all_series = _load_series(args.instance)
    if not all_series:
        raise CliError(f"{args.instance}: no gain rows")
    by_node = {s.node_id: s for s in all_series}
    if args.node is not None:
        try:
            series = by_node[args.node]
        except KeyError:
            raise CliError(
                f"{args.instance}: no node {args.node!r}"
                f" (has: {', '.join(sorted(by_node))})"
            ) from None
    elif len(all_series) == 1:
        series = all_series[0]
    else:
        raise CliError(
            f"{args.instance}: {len(all_series)} node series; pick one with"
            f" --node (has: {', '.join(sorted(by_node))})"
        )
    pool = tuple(g.value for g in series.geomeans)
    if all(g <= 0.0 for g in pool):
        raise CliError(f"{args.instance}: node {series.node_id!r} has no nonzero gains")
    gaps = _parse_list(args.gaps, float, "gaps")
    for gap in gaps:
        if not (math.isfinite(gap) and gap > 0):
            raise CliError(f"gaps must be positive and finite, got {gap!r}")
    strategies = (
        _parse_list(args.strategies, str, "strategies")
        if args.strategies
        else STRATEGIES
    )
    for strategy in strategies:
        if strategy not in STRATEGIES:
            raise CliError(
                f"unknown strategy {strategy!r} (known: {', '.join(STRATEGIES)})"
            )
    if len(set(strategies)) != len(strategies):
        raise CliError("duplicate strategies")
    if args.trials < 1:
        raise CliError(f"trials must be >= 1, got {args.trials!r}")
    if args.workers < 1:
        raise CliError(f"workers must be >= 1, got {args.workers!r}")
    return CampaignConfig(
        pool=pool,
        gaps=gaps,
        trials=args.trials,
        seed=args.seed,
        strategies=strategies,
        workers=args.workers,
        out=args.out,
        knobs=_resolve_knobs(args),
    )


def cmd_simulate(args) -> int:
    cfg = _build_campaign_config(args)
    spec = CampaignSpec(
        instance=PvbInstance(gap=cfg.gaps[0], pool=cfg.pool),
        gaps=cfg.gaps,
        trials=cfg.trials,
        seed=cfg.seed,
        strategies=cfg.strategies,
    )
    try:
        table = run_campaign(
            spec, workers=cfg.workers, fixed=cfg.knobs.fixed(), prob=cfg.knobs.prob()
        )
    except UnclosableError as exc:
        raise CliError(str(exc)) from None
    header = ("gap", "strategy", "mean_total_nodes", "mean_sb_nodes")
    rows = [
        (_num(r.gap), r.strategy, _num(r.mean_total_nodes), _num(r.mean_sb_nodes))
        for r in table
    ]
    _write_csv(cfg.out, header, rows)
    print(render_table(header, rows))
    return 0


# -------------------------------------------------------- solve/sweep


def _solver_config(mode: str, knobs: Knobs, args) -> SolverConfig:
    try:
        return SolverConfig(
            mode=mode,
            fixed=knobs.fixed(),
            prob=knobs.prob(),
            epsilon=knobs.epsilon,
            reliability_threshold=args.reliability_threshold,
            max_scan=args.max_scan,
            node_limit=args.node_limit,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_solve(args) -> int:
    try:
        mip = load_mps(args.instance)
    except OSError as exc:
        raise CliError(f"cannot read {args.instance}: {exc.strerror or exc}") from None
    except MpsError as exc:
        raise CliError(str(exc)) from None
    config = _solver_config(args.mode, _resolve_knobs(args), args)
    result = solve(mip, config)
    header = (
        "instance", "mode", "status", "objective", "bound",
        "nodes", "sb_lps", "sb_iters",
    )
    row = (
        mip.name or Path(args.instance).stem,
        args.mode,
        result.status,
        _num(result.objective),
        _num(result.bound),
        str(result.nodes),
        str(result.sb_lp_solves),
        str(result.sb_iterations),
    )
    print(render_table(header, [row]))
    return 0


def _sweep_solve(job):
    """One (instance, cell) solve in a worker; never raises."""
    name, mip, mode, L, K, knobs, threshold, max_scan, node_limit = job
    try:
        config = SolverConfig(
            mode=mode,
            fixed=FixedLookaheadConfig(L=L, K=K),
            prob=knobs.prob(),
            epsilon=knobs.epsilon,
            reliability_threshold=threshold,
            max_scan=max_scan,
            node_limit=node_limit,
        )
        result = solve(mip, config)
    except (SolverError, ValueError) as exc:
        return (name, "error", str(exc))
    if result.status == "node_limit":
        return (name, "error", "node limit reached")
    return (name, "ok", (result.nodes, result.sb_lp_solves))


def cmd_sweep(args) -> int:
    paths = sorted(Path(args.instance_dir).glob("*.mps"))
    if not paths:
        raise CliError(f"no .mps files in {args.instance_dir}")
    modes = _parse_list(args.modes, str, "modes")
    for mode in modes:
        if mode not in ("fixed", "dynamic"):
            raise CliError(f"unknown mode {mode!r} (known: fixed, dynamic)")
    l_grid = _parse_list(args.L_grid, int, "L grid")
    k_grid = _parse_list(args.K_grid, int, "K grid")
    if args.workers < 1:
        raise CliError(f"workers must be >= 1, got {args.workers!r}")
    knobs = _resolve_knobs(args)

    mips = []
    parse_failures = []
    for path in paths:
        try:
            mips.append((path.name, load_mps(path)))
        except MpsError as exc:
            parse_failures.append((path.name, str(exc)))
    cells = [(mode, L, K) for mode in modes for L in l_grid for K in k_grid]
    jobs = [
        (name, mip, mode, L, K, knobs, args.reliability_threshold,
         args.max_scan, args.node_limit)
        for (mode, L, K) in cells
        for name, mip in mips
    ]
    if args.workers == 1 or len(jobs) <= 1:
        outcomes = [_sweep_solve(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as executor:
            outcomes = list(executor.map(_sweep_solve, jobs))

    for name, message in parse_failures:
        print(f"failed {name}: {message}", file=sys.stderr)
    header = ("mode", "L", "K", "solved", "failed", "geo_nodes", "geo_sb_lps")
    rows = []
    pos = 0
    for mode, L, K in cells:
        nodes, sb_lps, failed = [], [], len(parse_failures)
        for _ in mips:
            name, status, payload = outcomes[pos]
            pos += 1
            if status == "ok":
                n, s = payload
                nodes.append(n)
                sb_lps.append(s)
            else:
                failed += 1
                print(f"failed {name} [{mode} L={L} K={K}]: {payload}", file=sys.stderr)
        rows.append(
            (
                mode,
                str(L),
                str(K),
                str(len(nodes)),
                str(failed),
                _num(shifted_geomean_stat(nodes, NODE_GEO_SHIFT)) if nodes else "",
                _num(shifted_geomean_stat(sb_lps, LP_GEO_SHIFT)) if sb_lps else "",
            )
        )
    _write_csv(args.out, header, rows)
    print(render_table(header, rows))
    return 0


# -------------------------------------------------------------- report


def cmd_report(args) -> int:
    try:
        with open(args.csvfile, newline="", encoding="utf-8") as fh:
            table = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise CliError(f"cannot read {args.csvfile}: {exc.strerror or exc}") from None
    if not table:
        raise CliError(f"{args.csvfile}: empty CSV")
    width = len(table[0])
    for lineno, row in enumerate(table, start=1):
        if len(row) != width:
            raise CliError(
                f"{args.csvfile}:{lineno}: expected {width} columns, got {len(row)}"
            )
    print(render_table(table[0], table[1:]))
    return 0


# ---------------------------------------------------------------- main


def _add_knob_flags(parser, with_lk: bool = True) -> None:
    parser.add_argument("--config", help="key=value file with parameter defaults")
    if with_lk:
        parser.add_argument("--L", type=int, help="lookahead streak limit")
        parser.add_argument("--K", type=int, help="extra simplex iteration budget")
    parser.add_argument("--phi", type=float, help="streak fraction gating the expected-size test")
    parser.add_argument(
        "--min-nonzero-samples", dest="min_nonzero_samples", type=int,
        help="nonzero gains required before the test may fire",
    )
    parser.add_argument("--family", help="tail family for the fitted distribution")
    parser.add_argument("--epsilon", type=float, help="shift in the gain geometric mean")


def _add_solver_flags(parser, with_mode: bool = True) -> None:
    if with_mode:
        parser.add_argument("--mode", choices=("fixed", "dynamic"), default="fixed")
    parser.add_argument(
        "--reliability-threshold", dest="reliability_threshold", type=int, default=2,
        help="branchings per direction before pseudocosts are trusted",
    )
    parser.add_argument("--max-scan", dest="max_scan", type=int, default=100)
    parser.add_argument("--node-limit", dest="node_limit", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvb",
        description="Branching-gain distribution fitting, abstract tree simulation, and a toy MIP solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit gain distributions and screen them with KS")
    p.add_argument("gainfile", help="gain CSV: node_id,variable_id,downgain,upgain")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--families", help="comma list; default: all families")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte-Carlo campaign on one gain pool")
    p.add_argument("--instance", required=True, help="gain CSV holding the pool")
    p.add_argument("--node", help="node_id to use when the file has several")
    p.add_argument("--gaps", required=True, help="comma list of gap targets")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--strategies", help=f"comma list; default: {','.join(STRATEGIES)}")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="campaign CSV path")
    _add_knob_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="run the toy solver on one MPS instance")
    p.add_argument("instance", help="MPS file")
    _add_solver_flags(p)
    _add_knob_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="grid of (mode, L, K) over an instance directory")
    p.add_argument("instance_dir", help="directory of .mps files")
    p.add_argument("--modes", default="fixed,dynamic")
    p.add_argument("--L-grid", dest="L_grid", default="9")
    p.add_argument("--K-grid", dest="K_grid", default="1000000")
    p.add_argument("--seed", type=int, required=True,
                   help="recorded for reproducibility; solves are deterministic")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="per-cell CSV path")
    _add_solver_flags(p, with_mode=False)
    _add_knob_flags(p, with_lk=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render a result CSV as an aligned table")
    p.add_argument("csvfile")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the 0/1/2 contract needs a catch-all
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

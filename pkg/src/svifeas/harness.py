"""Experiment runner: config ingestion, run matrix, CSV/summary/plot emission."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .feasibility import ConfigError, FeasibilityConfig, SampleSchedule
from .metrics import (
    FeasiblePointCloud,
    estimate_modified_dual_gap,
    fit_loglog_rate,
    infeasibility_surrogate,
    sample_feasible_points,
)
from .numkit import SeededStream
from .problem import ProblemSpec, make_zero_sum_game
from .solvers import AVERAGING_MODES, SolverConfig, StepSchedule, run_solver

CSV_HEADER = "iter,gap_alpha,gap_invalpha,gap_uniform,infeas_p1,infeas_p2,fresh_evals,wall_ns"

_PROBLEM_KEYS = {"players_dim", "num_constraints", "noise_stddev", "game_seed",
                 "map_eig_range", "constraint_eig_range", "c_range", "d_range"}
_SOLVER_KEYS = {"name", "method", "schedule", "alpha_bar", "w4", "cap", "horizon",
                "feasibility"}
_FEAS_KEYS = {"beta", "rule", "n", "r", "m"}
_EVAL_KEYS = {"cloud_candidates", "cadence", "cloud_seed", "record_walltime"}
_TOP_KEYS = {"problem", "solvers", "feasibility", "evaluation", "seeds", "out_dir"}


@dataclass(frozen=True)
class SolverBlock:
    name: str
    method: str
    schedule: str
    alpha_bar: float
    w4: float
    cap: bool
    horizon: int
    feasibility: dict | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    solvers: tuple
    feasibility: dict
    evaluation: dict
    seeds: tuple
    out_dir: str

    def fingerprint(self) -> str:
        payload = json.dumps(
            {"problem": self.problem, "solvers": [vars(s) if not isinstance(s, dict) else s
                                                  for s in self.solvers],
             "feasibility": self.feasibility, "evaluation": self.evaluation,
             "seeds": list(self.seeds)},
            sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    block: str
    seed: int
    fingerprint: str
    rows: list = field(default_factory=list)  # tuples matching CSV_HEADER
    wall_seconds: float = 0.0
    error: str | None = None


def _reject_unknown(mapping: dict, allowed: set, where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing field {key!r} in {where}")
    return mapping[key]


def default_config(seeds=(1, 2, 3, 4, 5), out_dir="out", horizon=5000) -> ExperimentConfig:
    """The shipped benchmark defaults: 2x2 game, 1000 constraints per player,
    alpha_bar = 0.3, w4 = 0.1, beta = 1.0, N_k = ceil(sqrt(k))."""
    problem = {"players_dim": 2, "num_constraints": 1000, "noise_stddev": 0.5,
               "game_seed": 20240}
    solvers = []
    for method in ("korpelevich", "popov"):
        for rule_name, r in (("sqrt", 2.0), ("cbrt", 3.0)):
            solvers.append(SolverBlock(
                name=f"{method}_{rule_name}", method=method,
                schedule="diminishing" if method == "korpelevich" else "parameter_free",
                alpha_bar=0.3, w4=0.1, cap=(method == "korpelevich"),
                horizon=horizon,
                feasibility={"beta": 1.0, "rule": "power", "r": r}))
    return ExperimentConfig(
        problem=problem, solvers=tuple(solvers),
        feasibility={"beta": 1.0, "rule": "power", "r": 2.0},
        evaluation={"cloud_candidates": 20000, "cadence": 50, "cloud_seed": 777,
                    "record_walltime": False},
        seeds=tuple(seeds), out_dir=out_dir)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "config root")

    problem = dict(_require(raw, "problem", "config"))
    _reject_unknown(problem, _PROBLEM_KEYS, "problem block")
    for f in ("players_dim", "num_constraints", "game_seed"):
        _require(problem, f, "problem block")
    problem.setdefault("noise_stddev", 0.5)

    feas = dict(_require(raw, "feasibility", "config"))
    _validate_feas(feas, "feasibility block")

    solver_blocks = []
    for i, blk in enumerate(_require(raw, "solvers", "config")):
        where = f"solvers[{i}]"
        blk = dict(blk)
        _reject_unknown(blk, _SOLVER_KEYS, where)
        if blk.get("feasibility") is not None:
            merged = {**feas, **blk["feasibility"]}
            _validate_feas(merged, f"{where}.feasibility")
            blk["feasibility"] = merged
        solver_blocks.append(SolverBlock(
            name=str(_require(blk, "name", where)),
            method=str(_require(blk, "method", where)),
            schedule=str(blk.get("schedule", "diminishing")),
            alpha_bar=float(blk.get("alpha_bar", 0.3)),
            w4=float(blk.get("w4", 0.1)),
            cap=bool(blk.get("cap", True)),
            horizon=int(_require(blk, "horizon", where)),
            feasibility=blk.get("feasibility")))
    if not solver_blocks:
        raise ConfigError("solvers list must be nonempty")

    evaluation = dict(raw.get("evaluation", {}))
    _reject_unknown(evaluation, _EVAL_KEYS, "evaluation block")
    evaluation.setdefault("cloud_candidates", 20000)
    evaluation.setdefault("cadence", 50)
    evaluation.setdefault("cloud_seed", 777)
    evaluation.setdefault("record_walltime", False)

    seeds = raw.get("seeds")
    if not seeds:
        raise ConfigError("seeds list must be nonempty")

    return ExperimentConfig(problem=problem, solvers=tuple(solver_blocks),
                            feasibility=feas, evaluation=evaluation,
                            seeds=tuple(int(s) for s in seeds),
                            out_dir=str(raw.get("out_dir", "out")))


def _validate_feas(feas: dict, where: str):
    _reject_unknown(feas, _FEAS_KEYS, where)
    beta = float(_require(feas, "beta", where))
    if not 0.0 < beta < 2.0:
        raise ConfigError(f"beta in {where} must lie in (0, 2), got {beta}")
    _build_feas_config(feas)  # surfaces schedule parameter errors early


def _build_feas_config(feas: dict) -> FeasibilityConfig:
    rule = feas.get("rule", "power")
    schedule = SampleSchedule(kind=rule, n=int(feas.get("n", 1)),
                              r=float(feas.get("r", 2.0)),
                              m=float(feas.get("m", 2.0)))
    return FeasibilityConfig(beta=float(feas["beta"]), schedule=schedule)


def build_problem(cfg: ExperimentConfig) -> ProblemSpec:
    p = cfg.problem
    kwargs = {}
    for key in ("map_eig_range", "constraint_eig_range", "c_range", "d_range"):
        if key in p:
            kwargs[key] = tuple(p[key])
    return make_zero_sum_game(int(p["players_dim"]), int(p["num_constraints"]),
                              SeededStream(int(p["game_seed"]), ("game",)),
                              noise_stddev=float(p["noise_stddev"]), **kwargs)


def _cadence_iters(horizon: int, cadence: int):
    iters = list(range(cadence, horizon + 1, cadence))
    if not iters or iters[-1] != horizon:
        iters.append(horizon)
    return iters


def run_single(spec: ProblemSpec, block: SolverBlock, feas_default: dict,
               seed: int, cloud: FeasiblePointCloud, cadence: int,
               fingerprint: str, record_walltime: bool) -> RunRecord:
    feas_cfg = _build_feas_config(block.feasibility or feas_default)
    steps = StepSchedule(kind=block.schedule, alpha_bar=block.alpha_bar,
                         w4=block.w4,
                         lipschitz=spec.oracle.lipschitz if block.cap else None)
    cfg = SolverConfig(method=block.method, steps=steps, feas=feas_cfg,
                       horizon=block.horizon, master_seed=seed)
    record = RunRecord(block=block.name, seed=seed, fingerprint=fingerprint)

    eval_iters = set(_cadence_iters(block.horizon, cadence))
    n = spec.base_set.dim // 2
    groups = getattr(spec.family, "groups", {})
    p1 = groups.get("p1")
    p2 = groups.get("p2")

    t0 = time.perf_counter_ns()
    trace = run_solver(spec, cfg)
    for i, k in enumerate(trace.ks):
        if k not in eval_iters:
            continue
        gaps = {}
        for mode in AVERAGING_MODES:
            gaps[mode] = estimate_modified_dual_gap(trace.averages[mode][i],
                                                    cloud, spec).value
        ref = trace.averages["inv_alpha"][i]
        inf1 = infeasibility_surrogate(ref, spec.family, p1) if len(spec.family) else 0.0
        inf2 = infeasibility_surrogate(ref, spec.family, p2) if len(spec.family) else 0.0
        wall = time.perf_counter_ns() - t0 if record_walltime else 0
        record.rows.append((k, gaps["alpha"], gaps["inv_alpha"], gaps["uniform"],
                            inf1, inf2, trace.fresh_evals[i], wall))
    record.wall_seconds = (time.perf_counter_ns() - t0) / 1e9
    return record


def run_experiment_matrix(cfg: ExperimentConfig):
    """One RunRecord per (solver block x seed); a shared feasible cloud keeps
    gap values comparable across runs. Failed runs are recorded, not fatal."""
    spec = build_problem(cfg)
    ev = cfg.evaluation
    cloud = sample_feasible_points(spec, int(ev["cloud_candidates"]),
                                   SeededStream(int(ev["cloud_seed"]), ("cloud",)))
    fingerprint = cfg.fingerprint()
    records = []
    for block in cfg.solvers:
        for seed in cfg.seeds:
            try:
                records.append(run_single(
                    spec, block, cfg.feasibility, seed, cloud,
                    int(ev["cadence"]), fingerprint,
                    bool(ev["record_walltime"])))
            except Exception as exc:  # keep remaining runs going
                rec = RunRecord(block=block.name, seed=seed,
                                fingerprint=fingerprint, error=str(exc))
                records.append(rec)
    return records


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(records, out_dir) -> list:
    """One CSV per record plus aggregate.csv with per-iteration seed means/stddevs."""
    if not records:
        raise ValueError("no records to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    ok_records = [r for r in records if r.error is None]
    for rec in ok_records:
        path = out / f"{rec.block}_seed{rec.seed}.csv"
        lines = [CSV_HEADER]
        for row in rec.rows:
            lines.append(",".join(_fmt(v) for v in row))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    agg_path = out / "aggregate.csv"
    cols = CSV_HEADER.split(",")[1:]
    header = "block,iter," + ",".join(f"{c}_{s}" for c in cols for s in ("mean", "std"))
    lines = [header]
    for block in dict.fromkeys(r.block for r in ok_records):
        group = [r for r in ok_records if r.block == block]
        iters = [row[0] for row in group[0].rows]
        data = np.array([[row[1:] for row in r.rows] for r in group], dtype=np.float64)
        means = data.mean(axis=0)
        stds = data.std(axis=0)
        for j, it in enumerate(iters):
            cells = [block, str(it)]
            for c in range(len(cols)):
                cells.append(_fmt(means[j, c]))
                cells.append(_fmt(stds[j, c]))
            lines.append(",".join(cells))
    agg_path.write_text("\n".join(lines) + "\n")
    written.append(agg_path)
    return written


def read_csv_rows(path):
    """Parse one per-record CSV back into row tuples (round-trip oracle)."""
    lines = Path(path).read_text().strip().split("\n")
    if lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected header in {path}")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append((int(parts[0]), *(float(p) for p in parts[1:6]),
                     int(parts[6]), int(parts[7])))
    return rows


def read_aggregate(path):
    """aggregate.csv -> {block: {"iter": [...], column: [...]}}."""
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    out: dict = {}
    for line in lines[1:]:
        parts = line.split(",")
        blk = out.setdefault(parts[0], {h: [] for h in header[1:]})
        blk["iter"].append(int(parts[1]))
        for h, v in zip(header[2:], parts[2:]):
            blk[h].append(float(v))
    return out


def emit_plot_svg(aggregate_path, out_path, column: str = "gap_invalpha_mean",
                  width: int = 640, height: int = 420):
    """Self-contained SVG of one log-y series per solver block."""
    agg = read_aggregate(aggregate_path)
    if not agg:
        raise ValueError("empty aggregate")
    pad = 60
    floor = 1e-12
    pts_by_block = {}
    all_x, all_y = [], []
    for block, cols in agg.items():
        xs = cols["iter"]
        ys = [np.log10(max(v, floor)) for v in cols[column]]
        pts_by_block[block] = (xs, ys)
        all_x.extend(xs)
        all_y.extend(ys)
    x0, x1 = min(all_x), max(all_x)
    y0, y1 = min(all_y), max(all_y)
    xr = (x1 - x0) or 1.0
    yr = (y1 - y0) or 1.0

    def to_px(x, y):
        px = pad + (x - x0) / xr * (width - 2 * pad)
        py = height - pad - (y - y0) / yr * (height - 2 * pad)
        return px, py

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="{height - 15}" text-anchor="middle" '
             f'font-size="12">iteration</text>',
             f'<text x="18" y="{height / 2:.1f}" font-size="12" '
             f'transform="rotate(-90 18 {height / 2:.1f})" '
             f'text-anchor="middle">log10 {column}</text>']
    for i, (block, (xs, ys)) in enumerate(pts_by_block.items()):
        color = palette[i % len(palette)]
        coords = [to_px(x, y) for x, y in zip(xs, ys)]
        if len(coords) > 1:
            pstr = " ".join(f"{px:.2f},{py:.2f}" for px, py in coords)
            parts.append(f'<polyline points="{pstr}" fill="none" stroke="{color}" '
                         f'stroke-width="1.5"/>')
        for px, py in coords:
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" '
                         f'fill="{color}"/>')
        ly = 20 + 16 * i
        parts.append(f'<rect x="{width - 190}" y="{ly - 9}" width="10" height="10" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{width - 175}" y="{ly}" font-size="11" '
                     f'class="legend">{block}</text>')
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts) + "\n")
    return Path(out_path)


def summarize(records, aggregate_path) -> dict:
    """Final gap per block/averaging mode plus log-log rate-fit slopes."""
    agg = read_aggregate(aggregate_path)
    summary = {"blocks": {}, "wall_seconds": {}}
    for block, cols in agg.items():
        entry = {"final": {}, "slope": {}}
        for col in ("gap_alpha_mean", "gap_invalpha_mean", "gap_uniform_mean",
                    "infeas_p1_mean", "infeas_p2_mean"):
            entry["final"][col] = cols[col][-1]
        for col in ("gap_alpha_mean", "gap_invalpha_mean", "gap_uniform_mean"):
            vals = cols[col]
            if all(v > 0 for v in vals) and len(vals) >= 3:
                entry["slope"][col] = fit_loglog_rate(cols["iter"], vals)
        summary["blocks"][block] = entry
    for rec in records:
        if rec.error is None:
            summary["wall_seconds"].setdefault(rec.block, []).append(rec.wall_seconds)
    return summary


def write_summary(summary: dict, out_dir):
    lines = []
    for block, entry in summary["blocks"].items():
        lines.append(f"[{block}]")
        for col, v in entry["final"].items():
            lines.append(f"  final {col} = {v:.6g}")
        for col, s in entry["slope"].items():
            lines.append(f"  loglog slope {col} = {s:.4f}")
        walls = summary["wall_seconds"].get(block)
        if walls:
            lines.append(f"  mean run wall time = {np.mean(walls):.3f} s")
    path = Path(out_dir) / "summary.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def replicate_zero_sum_study(seed_count: int = 5, out_dir="out", horizon: int = 5000):
    """The full benchmark: both methods, N_k in {ceil(sqrt(k)), ceil(cbrt(k))},
    all averaging modes, seed_count independent runs."""
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    cfg = default_config(seeds=tuple(range(1, seed_count + 1)), out_dir=str(out_dir),
                         horizon=horizon)
    records = run_experiment_matrix(cfg)
    files = write_csv(records, cfg.out_dir)
    agg_path = Path(cfg.out_dir) / "aggregate.csv"
    emit_plot_svg(agg_path, Path(cfg.out_dir) / "gap.svg")
    summary = summarize(records, agg_path)
    write_summary(summary, cfg.out_dir)

    # soft expectation from the benchmark write-up: sqrt growth beats cbrt
    blocks = summary["blocks"]
    if "korpelevich_sqrt" in blocks and "korpelevich_cbrt" in blocks:
        a = blocks["korpelevich_sqrt"]["final"]["gap_invalpha_mean"]
        b = blocks["korpelevich_cbrt"]["final"]["gap_invalpha_mean"]
        summary["sqrt_beats_cbrt"] = bool(a <= b)
    summary["files"] = [str(f) for f in files]
    return summary

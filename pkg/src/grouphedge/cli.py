"""Config-driven experiment runner.

    grouphedge gen    --config CFG [--out DIR]
    grouphedge run    --config CFG [--out DIR] [--seeds N] [--jobs N]
    grouphedge report --out RUN_DIR
    grouphedge plot   --out RUN_DIR

Configs are JSON.  Unknown keys anywhere are rejected.  A minimal synthetic
config::

    {"task": "regression",
     "data": {"source": "synthetic", "T": 100000, "aggregation": "mean"},
     "ordering": {"mode": "shuffle"},
     "seeds": [0, 1, 2],
     "out": "runs/synth_mean"}

Exit codes: 0 success, 2 config error, 3 data/IO error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .core import ContractError, InvariantViolation, NoActiveExpert, Rounds
from .data import (
    AGGREGATIONS,
    ALWAYS_ON,
    COLORS,
    DEFAULT_PERMUTATION,
    LABEL_SCALINGS,
    PRESETS,
    SHAPES,
    DataError,
    GroupRule,
    LinoptSpec,
    PreprocessSpec,
    Shuffle,
    SortBy,
    SyntheticSpec,
    gen_linopt,
    gen_synthetic,
    ingest_csv,
    order_rounds,
    synthetic_frame,
)
from .eval import (
    CURVE_COLUMNS,
    LedgerSummary,
    benchmark_round_losses,
    baseline_run,
    benchmarks_for,
    csv_text,
    linopt_baseline_run,
    read_csv_rows,
    summary_table,
    write_summary_csv,
)
from .experts import VARIANTS, Dag, Hypercube
from .groupwise import MODES, GroupwiseLearner, run_sequence

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config schema

# section -> {key: default}; REQUIRED marks keys without a default
REQUIRED = object()

TOP_KEYS = {
    "task": "regression",
    "data": REQUIRED,
    "ordering": {"mode": "shuffle"},
    "seeds": [0],
    "hedge_mode": "sample",
    "learner": {},
    "curve_points": 200,
    "out": None,
}
SYNTHETIC_KEYS = {
    "source": "synthetic",
    "T": REQUIRED,
    "d": 20,
    "p_shape": [0.5, 0.3, 0.2],
    "p_color": [0.6, 0.4],
    "aggregation": "mean",
    "permutation": list(DEFAULT_PERMUTATION),
    "seed": 0,
    "indicator_features": True,
    "intercept": True,
    "label_scaling": "dim",
}
CSV_KEYS = {
    "source": "csv",
    "path": REQUIRED,
    "preset": None,
    "preprocess": None,
    "intercept": True,
    "group_indicators": True,
}
PREPROCESS_KEYS = {"numeric": [], "categorical": [], "label": REQUIRED, "groups": REQUIRED}
RULE_KEYS = {"name": REQUIRED, "feature": REQUIRED, "lower": None, "upper": None, "values": None, "closed": "right"}
LINOPT_KEYS = {
    "source": "linopt",
    "T": REQUIRED,
    "dim": REQUIRED,
    "n_groups": 3,
    "membership_prob": 0.5,
    "noise": 0.5,
    "seed": 0,
    "oracle": "hypercube",
    "dag_path": None,
}
ORDER_KEYS = {"mode": REQUIRED, "column": None, "ascending": True}
REGRESSION_LEARNER_KEYS = {"lambda": 1.0, "expert": "vaw"}
LINOPT_LEARNER_KEYS = {"epsilon": None, "horizon": None}


def _fill(section: str, given, schema: dict) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{section}: expected an object, got {type(given).__name__}")
    unknown = sorted(set(given) - set(schema))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {unknown}")
    out = {}
    for key, default in schema.items():
        if key in given:
            out[key] = given[key]
        elif default is REQUIRED:
            raise ConfigError(f"{section}: missing required key {key!r}")
        else:
            out[key] = copy.deepcopy(default)
    return out


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def normalize_config(raw: dict, base_dir: Path | None = None) -> dict:
    """Apply defaults and validate; the result is what gets hashed."""
    cfg = _fill("config", raw, TOP_KEYS)
    _need(cfg["task"] in ("regression", "linopt"), f"task must be 'regression' or 'linopt', got {cfg['task']!r}")
    data = cfg["data"]
    _need(isinstance(data, dict), "data: expected an object")
    source = data.get("source", "synthetic")
    if cfg["task"] == "linopt":
        _need(source == "linopt", "linopt task needs data.source = 'linopt'")
        cfg["data"] = _linopt_data(data, base_dir)
        cfg["learner"] = _fill("learner", cfg["learner"], LINOPT_LEARNER_KEYS)
        eps, hor = cfg["learner"]["epsilon"], cfg["learner"]["horizon"]
        _need(eps is None or (_is_num(eps) and eps > 0), "learner.epsilon must be positive")
        _need(hor is None or (_is_int(hor) and hor >= 1), "learner.horizon must be a positive integer")
    else:
        if source == "synthetic":
            cfg["data"] = _synthetic_data(data)
        elif source == "csv":
            cfg["data"] = _csv_data(data, base_dir)
        else:
            raise ConfigError(f"data.source must be 'synthetic' or 'csv' for regression, got {source!r}")
        cfg["learner"] = _fill("learner", cfg["learner"], REGRESSION_LEARNER_KEYS)
        lam = cfg["learner"]["lambda"]
        _need(_is_num(lam) and lam > 0, "learner.lambda must be positive")
        _need(cfg["learner"]["expert"] in VARIANTS, f"learner.expert must be one of {VARIANTS}")

    order = _fill("ordering", cfg["ordering"], ORDER_KEYS)
    _need(order["mode"] in ("shuffle", "sort"), "ordering.mode must be 'shuffle' or 'sort'")
    if order["mode"] == "sort":
        _need(isinstance(order["column"], str), "ordering.column is required for sort")
        _need(isinstance(order["ascending"], bool), "ordering.ascending must be a boolean")
    cfg["ordering"] = order

    seeds = cfg["seeds"]
    _need(isinstance(seeds, list) and len(seeds) > 0, "seeds must be a non-empty list")
    _need(all(_is_int(s) and s >= 0 for s in seeds), "seeds must be nonnegative integers")
    _need(len(set(seeds)) == len(seeds), "seeds must be distinct")
    _need(cfg["hedge_mode"] in MODES, f"hedge_mode must be one of {MODES}")
    _need(_is_int(cfg["curve_points"]) and cfg["curve_points"] >= 1, "curve_points must be a positive integer")
    _need(cfg["out"] is None or isinstance(cfg["out"], str), "out must be a string path")
    return cfg


def _synthetic_data(data: dict) -> dict:
    d = _fill("data", data, SYNTHETIC_KEYS)
    _need(_is_int(d["T"]) and d["T"] >= 1, f"data.T must be a positive integer, got {d['T']!r}")
    _need(_is_int(d["d"]) and d["d"] >= 1, "data.d must be a positive integer")
    _need(d["aggregation"] in AGGREGATIONS, f"data.aggregation must be one of {AGGREGATIONS}")
    _need(d["label_scaling"] in LABEL_SCALINGS, f"data.label_scaling must be one of {LABEL_SCALINGS}")
    _need(sorted(d["permutation"]) == sorted(SHAPES + COLORS), "data.permutation must list all five groups once")
    try:
        synthetic_spec(d)
    except ContractError as exc:
        raise ConfigError(f"data: {exc}") from None
    return d


def _resolve(path, base_dir: Path | None) -> str:
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    return str(p)


def _csv_data(data: dict, base_dir: Path | None) -> dict:
    d = _fill("data", data, CSV_KEYS)
    _need(isinstance(d["path"], str), "data.path must be a string")
    d["path"] = _resolve(d["path"], base_dir)
    _need((d["preset"] is None) != (d["preprocess"] is None), "data: give exactly one of 'preset' or 'preprocess'")
    if d["preset"] is not None:
        _need(d["preset"] in PRESETS, f"data.preset must be one of {sorted(PRESETS)}")
    else:
        pp = _fill("data.preprocess", d["preprocess"], PREPROCESS_KEYS)
        _need(isinstance(pp["groups"], list) and pp["groups"], "data.preprocess.groups must be a non-empty list")
        pp["groups"] = [_fill(f"data.preprocess.groups[{i}]", g, RULE_KEYS) for i, g in enumerate(pp["groups"])]
        d["preprocess"] = pp
    try:
        preprocess_spec(d)
    except ContractError as exc:
        raise ConfigError(f"data: {exc}") from None
    return d


def _linopt_data(data: dict, base_dir: Path | None) -> dict:
    d = _fill("data", data, LINOPT_KEYS)
    for key in ("T", "dim", "n_groups"):
        _need(_is_int(d[key]) and d[key] >= 1, f"data.{key} must be a positive integer")
    _need(d["oracle"] in ("hypercube", "dag"), "data.oracle must be 'hypercube' or 'dag'")
    if d["oracle"] == "dag":
        _need(isinstance(d["dag_path"], str), "data.dag_path is required for the dag oracle")
        d["dag_path"] = _resolve(d["dag_path"], base_dir)
    try:
        LinoptSpec(d["T"], d["dim"], d["n_groups"], d["membership_prob"], d["noise"], d["oracle"] == "dag", d["seed"])
    except (ContractError, TypeError) as exc:
        raise ConfigError(f"data: {exc}") from None
    return d


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON of the normalized config, minus ``out``."""
    body = {k: v for k, v in cfg.items() if k != "out"}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path, seeds: int | None = None) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if seeds is not None:
        if seeds < 1:
            raise ConfigError("--seeds must be at least 1")
        if isinstance(raw, dict):
            raw = dict(raw, seeds=list(range(seeds)))
    return normalize_config(raw, path.parent)


# ---------------------------------------------------------------- building blocks


def synthetic_spec(d: dict) -> SyntheticSpec:
    return SyntheticSpec(
        T=d["T"], d=d["d"], p_shape=tuple(d["p_shape"]), p_color=tuple(d["p_color"]),
        aggregation=d["aggregation"], permutation=tuple(d["permutation"]), seed=d["seed"],
        indicator_features=d["indicator_features"], intercept=d["intercept"],
        label_scaling=d["label_scaling"],
    )


def preprocess_spec(d: dict) -> PreprocessSpec:
    if d["preset"] is not None:
        spec = PRESETS[d["preset"]]()
    else:
        pp = d["preprocess"]
        rules = [
            GroupRule(g["name"], g["feature"], g["lower"], g["upper"],
                      None if g["values"] is None else tuple(g["values"]), g["closed"])
            for g in pp["groups"]
        ]
        spec = PreprocessSpec(list(pp["numeric"]), list(pp["categorical"]), pp["label"], rules)
    spec.intercept = d["intercept"]
    spec.group_indicators = d["group_indicators"]
    if ALWAYS_ON in [g.name for g in spec.groups]:
        raise ContractError(f"group name {ALWAYS_ON!r} is reserved")
    return spec


def make_oracle(d: dict):
    if d["oracle"] == "dag":
        try:
            graph = Dag.load(d["dag_path"])
        except OSError as exc:
            raise DataError(f"cannot read DAG file {d['dag_path']}: {exc}") from None
        except ContractError as exc:
            raise DataError(f"bad DAG file {d['dag_path']}: {exc}") from None
        if graph.dim != d["dim"]:
            raise ConfigError(f"data.dim = {d['dim']} but the DAG has {graph.dim} edges")
        return graph
    return Hypercube(d["dim"])


def linopt_spec(d: dict) -> LinoptSpec:
    return LinoptSpec(d["T"], d["dim"], d["n_groups"], d["membership_prob"], d["noise"],
                      d["oracle"] == "dag", d["seed"])


def load_rounds(cfg: dict) -> Rounds:
    d = cfg["data"]
    if d["source"] == "synthetic":
        rounds = gen_synthetic(synthetic_spec(d))
    elif d["source"] == "csv":
        rounds = ingest_csv(d["path"], preprocess_spec(d))
    else:
        rounds = gen_linopt(linopt_spec(d))
    return ensure_always_on(rounds)


def ensure_always_on(rounds: Rounds) -> Rounds:
    """Append the always-active subsequence unless it is already the last one."""
    if rounds.groups and rounds.groups[-1] == ALWAYS_ON and np.all(rounds.activity[:, -1] == 1):
        return rounds
    if ALWAYS_ON in rounds.groups:
        raise ContractError(f"group name {ALWAYS_ON!r} is reserved")
    return Rounds(
        rounds.contexts, np.hstack([rounds.activity, np.ones((len(rounds), 1))]), rounds.outcomes,
        list(rounds.groups) + [ALWAYS_ON], rounds.columns, rounds.meta,
    )


def order_for_seed(rounds: Rounds, ordering: dict, seed: int) -> Rounds:
    """Shuffle with ``seed``; ``sort`` then applies a stable sort on top, so
    ties keep the shuffled order."""
    out = order_rounds(rounds, Shuffle(seed))
    if ordering["mode"] == "sort":
        out = order_rounds(out, SortBy(ordering["column"], ordering["ascending"]))
    return out


@dataclass
class SeedResult:
    seed: int
    summary: LedgerSummary
    curves: dict  # group -> csv text


def run_seed(cfg: dict, seed: int, rounds: Rounds | None = None, benchmarks=None) -> SeedResult:
    """One full run: order, algorithm, baseline, benchmarks, curves."""
    if rounds is None:
        rounds = load_rounds(cfg)
    seq = order_for_seed(rounds, cfg["ordering"], seed)
    if cfg["task"] == "linopt":
        d = cfg["data"]
        oracle = make_oracle(d)
        bound_C = float(d["dim"])
        horizon = cfg["learner"]["horizon"] or len(seq)
        root = np.random.SeedSequence(seed)
        alg_seed, base_seed = root.spawn(2)
        learner = GroupwiseLearner.with_ftpl(
            seq.groups, oracle, bound_C, horizon, seed=alg_seed, epsilon=cfg["learner"]["epsilon"],
            mode=cfg["hedge_mode"],
        )
        ledger = run_sequence(learner, seq)
        ledger.baseline_cum = linopt_baseline_run(seq, oracle, bound_C, horizon, seed=base_seed)
        models = benchmarks if benchmarks is not None else benchmarks_for(rounds, oracle)
    else:
        lrn = cfg["learner"]
        learner = GroupwiseLearner.with_vaw(
            seq.groups, seq.dim, lam=lrn["lambda"], variant=lrn["expert"], mode=cfg["hedge_mode"], seed=seed
        )
        ledger = run_sequence(learner, seq)
        ledger.baseline_cum = baseline_run(seq, lrn["lambda"])
        models = benchmarks if benchmarks is not None else benchmarks_for(rounds)
    ledger.attach_benchmarks(models, benchmark_round_losses(seq, models))

    header = f"config_hash={config_hash(cfg)} seed={seed}"
    rows = ledger.curve_rows(cfg["curve_points"])
    curves = {}
    for g in seq.groups:
        curves[g] = csv_text(header, CURVE_COLUMNS, [r for r in rows if r[1] == g])
    return SeedResult(seed, ledger.summary(), curves)


def _worker(args) -> SeedResult:
    cfg, seed = args
    return run_seed(cfg, seed)


def safe_name(group: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", group)


# ---------------------------------------------------------------- commands


def _out_dir(cfg: dict, out: str | None) -> Path:
    target = out or cfg.get("out")
    if not target:
        raise ConfigError("no output directory: pass --out or set 'out' in the config")
    path = Path(target)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from None
    return path


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_gen(cfg: dict, out: str | None = None) -> Path:
    d = cfg["data"]
    if d["source"] == "csv":
        raise ConfigError("gen needs a synthetic or linopt data source")
    out_dir = _out_dir(cfg, out)
    h = config_hash(cfg)
    header = f"# config_hash={h} seed={d['seed']}\n"
    if d["source"] == "synthetic":
        frame = synthetic_frame(synthetic_spec(d))
    else:
        import pandas as pd

        rounds = gen_linopt(linopt_spec(d))
        frame = pd.DataFrame(rounds.outcomes, columns=[f"c{i}" for i in range(rounds.outcomes.shape[1])])
        for g in rounds.groups[:-1]:
            frame[g] = rounds.columns[g].astype(int)
    try:
        body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        (out_dir / "dataset.csv").write_text(header + body)
        _dump_json({"config_hash": h, "seed": d["seed"], "data": d, "rows": len(frame)}, out_dir / "metadata.json")
    except OSError as exc:
        raise ConfigError(f"cannot write to {out_dir}: {exc}") from None
    return out_dir


def cmd_run(cfg: dict, out: str | None = None, jobs: int = 1) -> Path:
    out_dir = _out_dir(cfg, out)
    h = config_hash(cfg)
    rounds = load_rounds(cfg)
    oracle = make_oracle(cfg["data"]) if cfg["task"] == "linopt" else None
    bench = benchmarks_for(rounds, oracle)
    seeds = cfg["seeds"]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(seeds))) as pool:
            results = list(pool.map(_worker, [(cfg, s) for s in seeds]))
    else:
        results = [run_seed(cfg, s, rounds, bench) for s in seeds]

    _dump_json(cfg, out_dir / "config.json")
    _dump_json({
        "config_hash": h,
        "seeds": seeds,
        "groups": list(rounds.groups),
        "rounds": len(rounds),
        "dim": rounds.dim,
        "kernel_backend": kernels.BACKEND,
        "version": __version__,
        "hedge_mode": cfg["hedge_mode"],
        "data_meta": _jsonable(rounds.meta),
        "group_rules": _rules_meta(cfg),
    }, out_dir / "metadata.json")
    for res in results:
        sd = out_dir / f"seed_{res.seed}"
        sd.mkdir(exist_ok=True)
        for g, text in res.curves.items():
            (sd / f"curve_{safe_name(g)}.csv").write_text(text)
        _dump_json(dict(res.summary.to_dict(), config_hash=h, seed=res.seed), sd / "ledger.json")
    write_summary_table(out_dir, [r.summary for r in results], h, seeds)
    return out_dir


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _rules_meta(cfg: dict) -> list | None:
    if cfg["data"]["source"] != "csv":
        return None
    return [
        {"name": g.name, "feature": g.feature, "lower": g.lower, "upper": g.upper,
         "values": None if g.values is None else list(g.values), "closed": g.closed}
        for g in preprocess_spec(cfg["data"]).groups
    ]


def write_summary_table(out_dir: Path, summaries, h: str, seeds) -> list[dict]:
    rows = summary_table(summaries)
    write_summary_csv(rows, out_dir / "summary.csv", f"config_hash={h} seeds={','.join(map(str, seeds))}")
    return rows


def _seed_dirs(run_dir: Path) -> list[Path]:
    dirs = [p for p in run_dir.glob("seed_*") if p.is_dir() and p.name[5:].isdigit()]
    return sorted(dirs, key=lambda p: int(p.name[5:]))


def cmd_report(run_dir) -> list[dict]:
    run_dir = Path(run_dir)
    dirs = _seed_dirs(run_dir)
    if not dirs:
        raise DataError(f"no seed_* directories under {run_dir}")
    summaries, seeds, hashes = [], [], set()
    for sd in dirs:
        try:
            rec = json.loads((sd / "ledger.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read {sd / 'ledger.json'}: {exc}") from None
        try:
            summaries.append(LedgerSummary.from_dict(rec))
        except ContractError as exc:
            raise DataError(f"{sd / 'ledger.json'}: {exc}") from None
        seeds.append(rec.get("seed"))
        hashes.add(rec.get("config_hash"))
    if len(hashes) != 1:
        raise DataError(f"ledgers come from different configs: {sorted(map(str, hashes))}")
    try:
        return write_summary_table(run_dir, summaries, hashes.pop(), seeds)
    except ContractError as exc:
        raise DataError(str(exc)) from None


def _read_curves(run_dir: Path) -> dict[str, list[list[dict]]]:
    """group -> per-seed row lists."""
    dirs = _seed_dirs(run_dir)
    if not dirs:
        raise DataError(f"no seed_* directories under {run_dir}")
    by_group: dict[str, list[list[dict]]] = {}
    for sd in dirs:
        files = sorted(sd.glob("curve_*.csv"))
        if not files:
            raise DataError(f"no curve CSVs in {sd}")
        for f in files:
            try:
                rows = read_csv_rows(f)
            except (OSError, UnicodeDecodeError, ValueError) as exc:
                raise DataError(f"cannot read {f}: {exc}") from None
            if not rows:
                raise DataError(f"curve file {f} is empty")
            if set(rows[0]) != set(CURVE_COLUMNS):
                raise DataError(f"curve file {f} has columns {list(rows[0])}, expected {CURVE_COLUMNS}")
            by_group.setdefault(rows[0]["group"], []).append(rows)
    return by_group


def cmd_plot(run_dir) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run_dir = Path(run_dir)
    curves = _read_curves(run_dir)
    plot_dir = run_dir / "plots"
    plot_dir.mkdir(exist_ok=True)
    written = []
    plt.rcParams["svg.hashsalt"] = "grouphedge"
    for group, per_seed in curves.items():
        try:
            frac = np.array([[float(r["frac_of_group_seen"]) for r in rows] for rows in per_seed])
            alg = np.array([[float(r["alg_regret"]) for r in rows] for rows in per_seed])
            base = np.array([[float(r["baseline_regret"]) for r in rows] for rows in per_seed])
        except (KeyError, ValueError) as exc:
            raise DataError(f"corrupt curve data for group {group!r}: {exc}") from None
        fig, ax = plt.subplots(figsize=(5, 3.6))
        ax.plot(frac.mean(0), base.mean(0), label="baseline_regret")
        ax.plot(frac.mean(0), alg.mean(0), label="alg_regret")
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.set_xlabel("frac_of_group_seen")
        ax.set_ylabel("regret")
        ax.set_title(group)
        ax.legend()
        fig.tight_layout()
        path = plot_dir / f"{safe_name(group)}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grouphedge", description="Groupwise-regret online learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("gen", "write the synthetic dataset CSV"),
        ("run", "run the algorithm and baseline over every seed"),
        ("report", "re-aggregate summary.csv from the per-seed ledgers"),
        ("plot", "render one SVG regret plot per group"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", help="output / run directory (overrides config 'out')")
        p.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config list")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def _run_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    if args.config:
        cfg = load_config(args.config)
        if cfg["out"]:
            return Path(cfg["out"])
    raise ConfigError("pass --out RUN_DIR (or a --config with 'out')")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command in ("gen", "run"):
            if not args.config:
                raise ConfigError(f"{args.command} requires --config")
            cfg = load_config(args.config, args.seeds)
            if args.command == "gen":
                out = cmd_gen(cfg, args.out)
                print(f"wrote {out / 'dataset.csv'}")
            else:
                out = cmd_run(cfg, args.out, args.jobs)
                print(f"wrote run to {out}")
        elif args.command == "report":
            run_dir = _run_dir(args)
            rows = cmd_report(run_dir)
            for r in rows:
                print(f"{r['group']:>20}  n={r['size']:.0f}  baseline {r['baseline_regret_mean']:.3f} "
                      f"+- {r['baseline_regret_std']:.3f}  alg {r['alg_regret_mean']:.3f} "
                      f"+- {r['alg_regret_std']:.3f}  best {r['benchmark_loss']:.3f}")
        else:
            paths = cmd_plot(_run_dir(args))
            print(f"wrote {len(paths)} plot(s)")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, NoActiveExpert) as exc:
        where = getattr(exc, "round_index", None)
        print(f"invariant violation at round {where}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, OSError, UnicodeDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ContractError as exc:
        where = getattr(exc, "round_index", None)
        if where is None:
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"invariant violation at round {where}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

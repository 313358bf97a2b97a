"""Experiment orchestration: flag/config parsing, multi-seed sweeps over a
worker pool, and emission of per-run CSVs, an aggregate summary.json, and
rendered figures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, run_cmaes, run_sobol
from .objectives import make_objective
from .optimizer import OptimizerConfig, RunRecord, run
from .restart import RestartStrategy
from .trust_region import TrustRegionConfig

logger = logging.getLogger(__name__)

MODES = ("newton-bo", "sobol", "cmaes")
RESTART_CHOICES = ("thompson", "max-variance", "random")


@dataclass(frozen=True)
class ExperimentSpec:
    function: str
    dim: int
    max_evals: int
    modes: tuple[str, ...] = ("newton-bo",)
    n_init: int = 50
    batch: int = 5
    num_tr: int = 5
    tr_update: str = "turbo"
    delta_min: float = 0.05
    restart_strategy: str = "thompson"
    seeds: tuple[int, ...] = (0,)
    out_dir: str = "results"
    diagnostics: bool = False
    plot: bool = True


_DEFAULTS = {
    "mode": "newton-bo",
    "n_init": 50,
    "batch": 5,
    "num_tr": 5,
    "tr_update": "turbo",
    "delta_min": 0.05,
    "restart_strategy": "thompson",
    "seeds": "1",
    "out": "results",
    "diagnostics": False,
    "plot": True,
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="newtonbo",
        description="Benchmark runner for trust-region BO with Newton steps and baselines.",
    )
    p.add_argument("--function", choices=("ackley", "griewank"))
    p.add_argument("--dim", type=int)
    p.add_argument("--mode", help="comma-separated subset of " + ",".join(MODES))
    p.add_argument("--max-evals", type=int, dest="max_evals")
    p.add_argument("--n-init", type=int, dest="n_init")
    p.add_argument("--batch", type=int)
    p.add_argument("--num-tr", type=int, dest="num_tr")
    p.add_argument("--tr-update", choices=("turbo", "ratio"), dest="tr_update")
    p.add_argument("--delta-min", type=float, dest="delta_min")
    p.add_argument("--restart-strategy", choices=RESTART_CHOICES, dest="restart_strategy")
    p.add_argument("--seeds", help="seed count N (runs 0..N-1) or comma-separated list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="flat JSON config file; flags override its keys")
    p.add_argument("--diagnostics", action="store_true", default=None)
    p.add_argument("--no-plot", action="store_true", default=None,
                   help="skip figure rendering")
    return p


def _parse_seeds(raw) -> tuple[int, ...]:
    if isinstance(raw, int):
        return tuple(range(raw))
    if isinstance(raw, (list, tuple)):
        return tuple(int(s) for s in raw)
    text = str(raw)
    if "," in text:
        return tuple(int(s) for s in text.split(",") if s.strip())
    return tuple(range(int(text)))


def parse(argv: list[str] | None = None) -> ExperimentSpec:
    """Resolve flags over config-file keys over defaults into a spec."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    file_cfg = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file: {exc}")
        if not isinstance(file_cfg, dict):
            parser.error("config file must hold a flat JSON object")

    def pick(flag_name, key=None):
        key = key or flag_name
        flag = getattr(args, flag_name.replace("-", "_"), None)
        if flag is not None:
            return flag
        if key in file_cfg:
            return file_cfg[key]
        return _DEFAULTS.get(key)

    function = pick("function")
    dim = pick("dim")
    max_evals = pick("max_evals")
    if function is None or dim is None or max_evals is None:
        parser.error("--function, --dim, and --max-evals are required (flag or config)")
    if function not in ("ackley", "griewank"):
        parser.error(f"unknown function {function!r}")

    modes = tuple(m.strip() for m in str(pick("mode")).split(",") if m.strip())
    for m in modes:
        if m not in MODES:
            parser.error(f"unknown mode {m!r}")

    batch = int(pick("batch"))
    num_tr = int(pick("num_tr"))
    if batch != num_tr:
        parser.error("--batch must equal --num-tr (one candidate per trust region)")

    restart_strategy = str(pick("restart_strategy"))
    if restart_strategy not in RESTART_CHOICES:
        parser.error(f"unknown restart strategy {restart_strategy!r}")

    try:
        seeds = _parse_seeds(pick("seeds"))
    except ValueError:
        parser.error("--seeds must be an integer count or a comma-separated list")
    if not seeds:
        parser.error("at least one seed is required")

    plot = pick("plot")
    if args.no_plot:
        plot = False

    try:
        spec = ExperimentSpec(
            function=str(function),
            dim=int(dim),
            max_evals=int(max_evals),
            modes=modes,
            n_init=int(pick("n_init")),
            batch=batch,
            num_tr=num_tr,
            tr_update=str(pick("tr_update")),
            delta_min=float(pick("delta_min")),
            restart_strategy=restart_strategy,
            seeds=seeds,
            out_dir=str(pick("out")),
            diagnostics=bool(pick("diagnostics")),
            plot=bool(plot),
        )
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))
    _validate(spec, parser)
    return spec


def _validate(spec: ExperimentSpec, parser: argparse.ArgumentParser) -> None:
    if spec.dim < 1:
        parser.error("--dim must be at least 1")
    if spec.max_evals < spec.n_init:
        parser.error("--max-evals must be at least --n-init")
    if not 0.0 < spec.delta_min < 0.4:
        parser.error("--delta-min must lie in (0, delta_init)")


def _csv_path(out_dir: Path, mode: str, seed: int) -> Path:
    return out_dir / f"{mode}_{seed}.csv"


def write_csv(record: RunRecord, path: Path, dim: int) -> None:
    """Strict comma-separated output: header row, 17-significant-digit floats."""
    cols = ["eval_index", "iteration", "tr_id", "value", "best_so_far",
            "delta", "grad_norm", "lambda", "restart_flag"]
    header = cols + [f"x{d}" for d in range(dim)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in record.rows:
            fields = [
                str(r.eval_index), str(r.iteration), str(r.tr_id),
                f"{r.value:.16e}", f"{r.best_so_far:.16e}",
                f"{r.delta:.16e}", f"{r.grad_norm:.16e}", f"{r.lam:.16e}",
                str(r.restart_flag),
            ] + [f"{x:.16e}" for x in r.point]
            fh.write(",".join(fields) + "\n")


def run_arm(spec_dict: dict, mode: str, seed: int) -> dict:
    """Run one (mode, seed) arm and write its CSV; returns summary material."""
    spec = ExperimentSpec(**spec_dict)
    obj = make_objective(spec.function, spec.dim)
    if mode == "newton-bo":
        cfg = OptimizerConfig(
            max_evals=spec.max_evals,
            n_init=spec.n_init,
            batch=spec.batch,
            num_tr=spec.num_tr,
            tr_update=spec.tr_update,
            tr_config=TrustRegionConfig(delta_min=spec.delta_min),
            restart=RestartStrategy(kind=spec.restart_strategy.replace("-", "_")),
            seed=seed,
            diagnostics=spec.diagnostics,
        )
        record = run(obj, cfg)
    elif mode == "sobol":
        record = run_sobol(obj, BaselineConfig(kind="sobol", max_evals=spec.max_evals, seed=seed))
    else:
        record = run_cmaes(obj, BaselineConfig(kind="cmaes", max_evals=spec.max_evals, seed=seed))

    out_dir = Path(spec.out_dir)
    write_csv(record, _csv_path(out_dir, mode, seed), spec.dim)
    return {
        "mode": mode,
        "seed": seed,
        "summary": record.summary,
        "best_so_far": [float(v) for v in record.best_so_far],
    }


def _worker_count(n_arms: int) -> int:
    env = os.environ.get("NEWTONBO_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_arms))


def execute(spec: ExperimentSpec) -> int:
    """Run every (seed x mode) arm, then write summary.json and figures."""
    out_dir = Path(spec.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        logger.error("output directory not writable: %s", exc)
        return 1

    arms = [(mode, seed) for mode in spec.modes for seed in spec.seeds]
    spec_dict = asdict(spec)
    workers = _worker_count(len(arms))
    results = []
    if workers == 1:
        for mode, seed in arms:
            results.append(run_arm(spec_dict, mode, seed))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_arm, spec_dict, mode, seed) for mode, seed in arms]
            results = [f.result() for f in futures]

    summary = {"spec": asdict(spec), "arms": {}}
    aborted = False
    for mode in spec.modes:
        arm_results = sorted(
            (r for r in results if r["mode"] == mode), key=lambda r: r["seed"]
        )
        finals = [r["summary"]["final_best_value"] for r in arm_results]
        trajs = np.array([r["best_so_far"] for r in arm_results])
        q25, q50, q75 = np.percentile(trajs, [25, 50, 75], axis=0)
        summary["arms"][mode] = {
            "seeds": [r["seed"] for r in arm_results],
            "final_best": finals,
            "final_best_median": float(np.median(finals)),
            "final_best_q25": float(np.percentile(finals, 25)),
            "final_best_q75": float(np.percentile(finals, 75)),
            "best_trajectory_median": q50.tolist(),
            "best_trajectory_q25": q25.tolist(),
            "best_trajectory_q75": q75.tolist(),
            "runs": [r["summary"] for r in arm_results],
        }
        aborted |= any("aborted" in r["summary"] for r in arm_results)

    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)

    if spec.plot:
        from .plots import render_figures

        render_figures(summary, out_dir)
    return 1 if aborted else 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    spec = parse(argv)
    code = execute(spec)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()

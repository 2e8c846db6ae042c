"""Subcommands: train, sample, eval, reproduce"""

import argparse
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from baselines import sample_autoregressive, train_autoregressive
from evaluation import (
    MetricReport,
    convexity_violation_rate,
    coverage,
    dtm,
    hull_area,
    mmd_test,
    monotonicity_violation_rate,
    w2_1d,
)
from quantile import credible_sets, sample_posterior
from simulators import THETA_STAR, Simulator, make_simulator, simulate_brock_hommes
from storage import (
    append_jsonl,
    init_output_dir,
    load_model,
    read_model_metadata,
    save_model,
    write_csv,
    write_json,
    write_manifest,
    write_matrix_csv,
    write_points_csv,
)
from training import multi_restart_train
from .config import ORACLE_METRICS, ConfigError, ExperimentConfig, apply_full_scale, load_config, with_seed

OBSERVATION_STREAM = 101
SAMPLING_STREAM = 202
EVALUATION_STREAM = 303

FIGURES = {
    "gaussian-shrinkage": "config.yaml",
    "gaussian-features": "config.yaml",
    "brock-hommes-contours": "configs/brock_hommes.yaml",
}
SHRINKAGE_N = (2, 8, 32)
SHRINKAGE_X = 0.5
ABLATION_FEATURES = ("deepset", "identity", "mean")
CONTOUR_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
SCALAR_OBSERVATIONS = ("gaussian", "gaussian_mean")


@contextmanager
def run_log(out_dir: Path):
    """Mirror log records into ``out_dir/run.log`` for the duration of a command."""
    sink = logger.add(out_dir / "run.log", level="DEBUG", mode="w", encoding="utf-8")
    try:
        yield
    finally:
        logger.remove(sink)


def _prepare(config_path, seed: Optional[int], full_scale: bool) -> ExperimentConfig:
    cfg = with_seed(load_config(config_path), seed)
    if full_scale:
        logger.info("Using full-scale network and training settings")
        cfg = apply_full_scale(cfg)
    return cfg


def _output_dir(out, cfg: Optional[ExperimentConfig], default_name: str) -> Path:
    if out is not None:
        return init_output_dir(out)
    if cfg is not None and cfg.experiment.output_dir:
        return init_output_dir(cfg.experiment.output_dir)
    return init_output_dir(name=cfg.experiment.name if cfg is not None else default_name)


def _train_model(cfg: ExperimentConfig, simulator: Simulator, out_dir: Path):
    network = cfg.network.network_config(simulator)
    checkpoint_dir = out_dir / "checkpoints" if cfg.training.checkpoint_every else None
    result = multi_restart_train(cfg.training.train_config(cfg.seed, checkpoint_dir), network, simulator)
    return result


# -- observed data --------------------------------------------------------

def pseudo_observation(simulator: Simulator, theta: Sequence[float], seed: int) -> np.ndarray:
    """Data simulated at a known parameter, on a stream derived from ``seed``."""
    rng = np.random.default_rng([seed, OBSERVATION_STREAM])
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != simulator.param_dim:
        raise ValueError(f"theta has {theta.size} coordinates, simulator '{simulator.name}' expects {simulator.param_dim}")
    if simulator.name == "brock_hommes":
        return simulate_brock_hommes(simulator.config, theta, rng)[None, :]
    return simulator.simulate_data(theta[None, :], rng)[0]


def resolve_observation(simulator: Simulator, x: Optional[float] = None, x_file: Optional[str] = None,
                        theta_star: Optional[Sequence[float]] = None, seed: int = 0) -> np.ndarray:
    """One (d_X, n) data matrix from a scalar, a CSV file (d_X rows) or a pseudo-observation."""
    given = [v is not None for v in (x, x_file, theta_star)]
    if sum(given) != 1:
        raise ValueError("exactly one of --x, --x-file or --theta-star is required")
    if x_file is not None:
        data = pd.read_csv(x_file, header=None).to_numpy(dtype=np.float64)
        if data.shape[0] != simulator.data_dim:
            raise ValueError(f"{x_file}: data has {data.shape[0]} rows, expected d_X = {simulator.data_dim} "
                             f"(provided shape {data.shape}, expected ({simulator.data_dim}, n))")
        return data
    if theta_star is not None:
        return pseudo_observation(simulator, theta_star, seed)
    if simulator.name not in SCALAR_OBSERVATIONS:
        raise ValueError(f"a scalar x is only meaningful for the gaussian simulators; pass --x-file or --theta-star for '{simulator.name}'")
    return simulator.observed_data(x)


def _model_simulator(model_path) -> Simulator:
    spec = read_model_metadata(model_path).get("simulator")
    if not spec:
        raise ValueError(f"{model_path} does not record its simulator")
    return make_simulator(spec["kind"], spec["params"])


def _credible_frame(sets) -> pd.DataFrame:
    frames = []
    for cred in sets:
        frame = pd.DataFrame(cred.points, columns=[f"theta_{k + 1}" for k in range(cred.dim)])
        frame.insert(0, "level", cred.tau)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def _hull_records(sets) -> List[dict]:
    return [record for cred in sets for record in cred.to_records()]


# -- commands -------------------------------------------------------------

def cmd_train(config: str, out: Optional[str] = None, seed: Optional[int] = None, full_scale: bool = False) -> Path:
    """Train with restarts; write model.npz, loss_history.csv, restarts.csv and the manifest."""
    cfg = _prepare(config, seed, full_scale)
    out_dir = _output_dir(out, cfg, "train")
    with run_log(out_dir):
        logger.info(f"Initializing training for experiment '{cfg.experiment.name}'...")
        simulator = cfg.simulator.build()
        result = _train_model(cfg, simulator, out_dir)
        model_path = save_model(result.best.model, out_dir / "model.npz",
                                simulator={"kind": cfg.simulator.kind, "params": cfg.simulator.params})
        history_path = write_csv(result.best.history_frame(), out_dir / "loss_history.csv")
        restarts = pd.DataFrame(
            [(c.seed, c.held_out_loss) for c in result.candidates], columns=["seed", "held_out_loss"]
        )
        restarts_path = write_csv(restarts, out_dir / "restarts.csv")
        write_manifest(out_dir, "train", cfg.model_dump(mode="json"), cfg.seed,
                       [model_path, history_path, restarts_path, out_dir / "run.log"],
                       extra={"selected_seed": result.best.seed, "failed_seeds": result.failed_seeds})
        logger.success(f"Training completed successfully; outputs in {out_dir}")
    return out_dir


def cmd_sample(model: str, n: int = 2000, tau: Optional[Sequence[float]] = None, x: Optional[float] = None,
               x_file: Optional[str] = None, theta_star: Optional[Sequence[float]] = None,
               out: Optional[str] = None, seed: int = 0) -> Path:
    """samples.csv of full-posterior draws; with tau levels also credible.csv and hulls.json."""
    potential = load_model(model)
    simulator = _model_simulator(model)
    observed = resolve_observation(simulator, x, x_file, theta_star, seed)
    out_dir = _output_dir(out, None, "sample")
    with run_log(out_dir):
        logger.info(f"Sampling {n} posterior draws from {model}...")
        rng = np.random.default_rng([seed, SAMPLING_STREAM])
        draws = sample_posterior(potential, observed, n, rng)
        outputs = [write_points_csv(draws.points, out_dir / "samples.csv"), out_dir / "run.log"]
        if tau:
            levels = sorted(float(t) for t in tau)
            sets = credible_sets(potential, observed, levels, n, rng)
            outputs.append(write_csv(_credible_frame(sets), out_dir / "credible.csv"))
            outputs.append(write_json(_hull_records(sets), out_dir / "hulls.json"))
        outputs.append(write_matrix_csv(observed, out_dir / "observation.csv"))
        write_manifest(out_dir, "sample", {"model": str(model), "n": n, "tau": tau, "x": x, "x_file": x_file,
                                           "theta_star": theta_star}, seed, outputs)
        logger.success(f"Sampling completed successfully; outputs in {out_dir}")
    return out_dir


def _observations(cfg: ExperimentConfig, simulator: Simulator) -> List[tuple]:
    ev = cfg.evaluation
    if simulator.name in SCALAR_OBSERVATIONS:
        values = ev.x_values or [SHRINKAGE_X]
        return [({"x": value}, simulator.observed_data(value)) for value in values]
    theta = ev.theta_star or THETA_STAR.tolist()
    return [({"theta_star": list(theta)}, pseudo_observation(simulator, theta, cfg.seed))]


def evaluate_metrics(cfg: ExperimentConfig, potential, simulator: Simulator) -> List[MetricReport]:
    """Every configured metric at every configured observation."""
    ev = cfg.evaluation
    missing = [m for m in ev.metrics if m in ORACLE_METRICS and not simulator.has_oracle]
    if missing:
        raise ValueError(f"metrics {missing} need a posterior oracle; simulator '{simulator.name}' has none")
    rng = np.random.default_rng([cfg.seed, EVALUATION_STREAM])
    reports: List[MetricReport] = []

    def report(metric: str, value: float, sizes: Dict[str, int], where: dict, **metadata) -> None:
        reports.append(MetricReport(metric=metric, value=value, sizes=sizes, metadata={**where, **metadata}, seed=cfg.seed))

    chain = None
    for where, observed in _observations(cfg, simulator):
        logger.info(f"Evaluating {ev.metrics} at {where}...")
        oracle = simulator.posterior_oracle(observed) if simulator.has_oracle else None
        for metric in ev.metrics:
            if metric == "mmd":
                generated = sample_posterior(potential, observed, ev.n_samples, rng).points
                test = mmd_test(generated, oracle.sample(ev.n_samples, rng), rng, ev.alpha, ev.permutations)
                report("mmd", test.value, {"generated": ev.n_samples, "oracle": ev.n_samples}, where,
                       kernel="rbf", bandwidth=test.bandwidth, bandwidth_rule="median",
                       null_threshold=test.threshold, alpha=ev.alpha, p_value=test.p_value,
                       permutations=ev.permutations)
            elif metric == "w2":
                generated = sample_posterior(potential, observed, ev.n_samples, rng).points
                reference = oracle.sample(ev.n_samples, rng)
                for k in range(simulator.param_dim):
                    report("w2", w2_1d(generated[:, k], reference[:, k]),
                           {"generated": ev.n_samples, "oracle": ev.n_samples}, where, coordinate=k)
            elif metric == "coverage":
                for tau in ev.tau_levels:
                    result = coverage(potential, observed, tau, ev.n_samples, ev.n_test, rng)
                    report("coverage", result.fraction, {"set": ev.n_samples, "test": ev.n_test}, where,
                           tau=tau, degenerate_pairs=[list(p) for p in result.degenerate_pairs])
            elif metric == "hull_area":
                for cred in credible_sets(potential, observed, ev.tau_levels, ev.n_samples, rng):
                    for pair, hull in cred.hulls.items():
                        report("hull_area", hull_area(hull), {"set": ev.n_samples}, where,
                               tau=cred.tau, pair=list(pair), degenerate=hull.degenerate)
            elif metric == "monotonicity":
                result = monotonicity_violation_rate(potential, observed, rng, ev.diagnostic_pairs)
                report("monotonicity", result.rate, {"pairs": result.pairs}, where, worst=result.worst)
            elif metric == "convexity":
                result = convexity_violation_rate(potential, observed, rng, ev.diagnostic_pairs)
                report("convexity", result.rate, {"pairs": result.pairs}, where, worst=result.worst)
            elif metric == "baseline_mmd":
                if chain is None:
                    chain = train_autoregressive(cfg.training.train_config(cfg.seed), simulator,
                                                 network=cfg.network.network_config(simulator), ar=cfg.baseline)
                generated = sample_autoregressive(chain, observed, ev.n_samples, rng)
                test = mmd_test(generated, oracle.sample(ev.n_samples, rng), rng, ev.alpha, ev.permutations)
                report("baseline_mmd", test.value, {"generated": ev.n_samples, "oracle": ev.n_samples}, where,
                       kernel="rbf", bandwidth=test.bandwidth, bandwidth_rule="median",
                       null_threshold=test.threshold, alpha=ev.alpha, conditioning=chain.conditioning)

    if "dtm" in ev.metrics:
        sampler = lambda data, count, r: sample_posterior(potential, data, count, r).points
        prior = lambda data, count, r: simulator.sample_prior(count, r)
        value = dtm(sampler, simulator, ev.dtm_j, ev.dtm_i, rng)
        reference = dtm(prior, simulator, ev.dtm_j, ev.dtm_i, rng)
        report("dtm", value, {"J": ev.dtm_j, "I": ev.dtm_i}, {}, J=ev.dtm_j, I=ev.dtm_i, prior_dtm=reference)
    return reports


def cmd_eval(model: str, config: str, out: Optional[str] = None, seed: Optional[int] = None) -> Path:
    """metrics.jsonl with one MetricReport per line."""
    cfg = with_seed(load_config(config), seed)
    potential = load_model(model)
    simulator = cfg.simulator.build()
    if potential.d != simulator.param_dim:
        raise ValueError(f"model has d = {potential.d}, simulator '{simulator.name}' has d = {simulator.param_dim}")
    out_dir = _output_dir(out, cfg, "eval")
    with run_log(out_dir):
        reports = evaluate_metrics(cfg, potential, simulator)
        path = out_dir / "metrics.jsonl"
        path.unlink(missing_ok=True)
        append_jsonl([r.model_dump() for r in reports], path)
        write_manifest(out_dir, "eval", cfg.model_dump(mode="json"), cfg.seed, [path, out_dir / "run.log"],
                       extra={"model": str(model)})
        logger.success(f"Evaluation completed successfully: {len(reports)} records in {path}")
    return out_dir


def _reproduce_shrinkage(cfg: ExperimentConfig, out_dir: Path) -> List[Path]:
    outputs = []
    areas = []
    for n in SHRINKAGE_N:
        panel = out_dir / f"n{n}"
        panel.mkdir(parents=True, exist_ok=True)
        params = {**cfg.simulator.params, "n_obs": n}
        simulator = make_simulator("gaussian", params)
        logger.info(f"Panel n={n}: training...")
        result = _train_model(cfg, simulator, panel)
        observed = simulator.observed_data(SHRINKAGE_X)
        rng = np.random.default_rng([cfg.seed, SAMPLING_STREAM, n])
        sets = credible_sets(result.best.model, observed, cfg.evaluation.tau_levels, cfg.evaluation.n_samples, rng)
        outputs.append(save_model(result.best.model, panel / "model.npz", simulator={"kind": "gaussian", "params": params}))
        outputs.append(write_csv(_credible_frame(sets), panel / "credible.csv"))
        outputs.append(write_json(_hull_records(sets), panel / "hulls.json"))
        areas += [(n, cred.tau, cred.area((0, 1))) for cred in sets]
    outputs.append(write_csv(pd.DataFrame(areas, columns=["n", "level", "area"]), out_dir / "areas.csv"))
    return outputs


def _reproduce_features(cfg: ExperimentConfig, out_dir: Path) -> List[Path]:
    ev = cfg.evaluation
    rows = []
    for n in SHRINKAGE_N:
        simulator = make_simulator("gaussian", {**cfg.simulator.params, "n_obs": n})
        observed = simulator.observed_data(SHRINKAGE_X)
        oracle = simulator.posterior_oracle(observed)
        for k, kind in enumerate(ABLATION_FEATURES):
            network = cfg.network.model_copy(update={"features": kind}).network_config(simulator)
            logger.info(f"Ablation n={n}, features={kind}: training...")
            model = multi_restart_train(cfg.training.train_config(cfg.seed), network, simulator).best.model
            chain = train_autoregressive(cfg.training.train_config(cfg.seed), simulator, network=network, ar=cfg.baseline)
            samplers = {
                "quantile": lambda data, count, r: sample_posterior(model, data, count, r).points,
                "autoregressive": lambda data, count, r: sample_autoregressive(chain, data, count, r),
            }
            for method, sampler in samplers.items():
                rng = np.random.default_rng([cfg.seed, EVALUATION_STREAM, n, k])
                test = mmd_test(sampler(observed, ev.n_samples, rng), oracle.sample(ev.n_samples, rng), rng,
                                ev.alpha, ev.permutations)
                error = dtm(sampler, simulator, ev.dtm_j, ev.dtm_i, rng)
                rows.append((method, kind, n, test.value, test.threshold, error))
    frame = pd.DataFrame(rows, columns=["method", "features", "n", "mmd", "mmd_threshold", "dtm"])
    return [write_csv(frame, out_dir / "features.csv")]


def _reproduce_contours(cfg: ExperimentConfig, out_dir: Path) -> List[Path]:
    simulator = cfg.simulator.build()
    result = _train_model(cfg, simulator, out_dir)
    theta_star = cfg.evaluation.theta_star or THETA_STAR.tolist()
    observed = pseudo_observation(simulator, theta_star, cfg.seed)
    rng = np.random.default_rng([cfg.seed, SAMPLING_STREAM])
    sets = credible_sets(result.best.model, observed, CONTOUR_LEVELS, cfg.evaluation.n_samples, rng)
    inside = [
        (cred.tau, pair[0], pair[1], bool(hull.contains(np.asarray(theta_star)[list(pair)][None, :])[0]))
        for cred in sets for pair, hull in cred.hulls.items()
    ]
    return [
        save_model(result.best.model, out_dir / "model.npz", simulator={"kind": cfg.simulator.kind, "params": cfg.simulator.params}),
        write_matrix_csv(observed, out_dir / "observation.csv"),
        write_csv(_credible_frame(sets), out_dir / "credible.csv"),
        write_json({"theta_star": list(theta_star), "hulls": _hull_records(sets)}, out_dir / "hulls.json"),
        write_csv(pd.DataFrame(inside, columns=["level", "i", "j", "contains_theta_star"]), out_dir / "containment.csv"),
    ]


def cmd_reproduce(figure: str, config: Optional[str] = None, out: Optional[str] = None,
                  seed: Optional[int] = None, full_scale: bool = False) -> Path:
    """Data bundle for one figure id at desk scale."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure id '{figure}'; valid ids: {', '.join(FIGURES)}")
    cfg = _prepare(config or FIGURES[figure], seed, full_scale)
    expected = "brock_hommes" if figure == "brock-hommes-contours" else "gaussian"
    if cfg.simulator.kind != expected:
        raise ConfigError(f"figure '{figure}' needs a {expected} config, got simulator.kind = {cfg.simulator.kind}",
                          ["simulator.kind"])
    out_dir = _output_dir(out, None, figure)
    with run_log(out_dir):
        logger.info(f"Reproducing '{figure}'...")
        build = {
            "gaussian-shrinkage": _reproduce_shrinkage,
            "gaussian-features": _reproduce_features,
            "brock-hommes-contours": _reproduce_contours,
        }[figure]
        outputs = build(cfg, out_dir)
        write_manifest(out_dir, f"reproduce {figure}", cfg.model_dump(mode="json"), cfg.seed,
                       outputs + [out_dir / "run.log"])
        logger.success(f"Figure data for '{figure}' written successfully to {out_dir}")
    return out_dir


# -- argparse wiring --------------------------------------------------------

def _run(handler: Callable[..., Path], **kwargs) -> int:
    handler(**kwargs)
    return 0


def setup_commands(subparsers: argparse._SubParsersAction):
    """Register the subcommands; each sets ``args.handler`` to a callable returning an exit code."""

    train_p = subparsers.add_parser("train", help="train a potential model from a config")
    train_p.add_argument("--config", default="config.yaml")
    train_p.add_argument("--out")
    train_p.add_argument("--seed", type=int)
    train_p.add_argument("--paper-scale", "--full-scale", dest="full_scale", action="store_true")
    train_p.set_defaults(handler=lambda a: _run(cmd_train, config=a.config, out=a.out, seed=a.seed,
                                                full_scale=a.full_scale))

    sample_p = subparsers.add_parser("sample", help="draw posterior samples and credible sets")
    sample_p.add_argument("--model", required=True)
    sample_p.add_argument("--n", type=int, default=2000)
    sample_p.add_argument("--tau", type=float, nargs="+")
    sample_p.add_argument("--x", type=float)
    sample_p.add_argument("--x-file")
    sample_p.add_argument("--theta-star", type=float, nargs="+")
    sample_p.add_argument("--out")
    sample_p.add_argument("--seed", type=int, default=0)
    sample_p.set_defaults(handler=lambda a: _run(cmd_sample, model=a.model, n=a.n, tau=a.tau, x=a.x,
                                                 x_file=a.x_file, theta_star=a.theta_star, out=a.out, seed=a.seed))

    eval_p = subparsers.add_parser("eval", help="compute metrics for a trained model")
    eval_p.add_argument("--model", required=True)
    eval_p.add_argument("--config", default="config.yaml")
    eval_p.add_argument("--out")
    eval_p.add_argument("--seed", type=int)
    eval_p.set_defaults(handler=lambda a: _run(cmd_eval, model=a.model, config=a.config, out=a.out, seed=a.seed))

    repro_p = subparsers.add_parser("reproduce", help="emit figure data bundles")
    repro_p.add_argument("figure")
    repro_p.add_argument("--config")
    repro_p.add_argument("--out")
    repro_p.add_argument("--seed", type=int)
    repro_p.add_argument("--paper-scale", "--full-scale", dest="full_scale", action="store_true")
    repro_p.set_defaults(handler=lambda a: _run(cmd_reproduce, figure=a.figure, config=a.config, out=a.out,
                                                seed=a.seed, full_scale=a.full_scale))

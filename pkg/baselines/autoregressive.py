"""Autoregressive chain of one-dimensional implicit quantile nets, the comparison sampler"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from autodiff import AdamState, Graph, NonFiniteError, adam_step, lr_schedule
from networks import FeatureMap, NetworkConfig, observation_batch
from simulators import Simulator
from training import TrainConfig, TrainingAborted
from .pinball import PinballNet, crps_graph, quantile_monotonicity


class AutoRegConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    width: int = Field(default=64, ge=1)
    hidden_layers: int = Field(default=3, ge=1)
    mc_draws: int = Field(default=8, ge=1)
    conditioning: Literal["sampled", "simulated"] = "sampled"
    ordering: Optional[List[int]] = None


@dataclass
class AutoRegChain:
    nets: List[PinballNet]
    features: FeatureMap
    ordering: List[int]
    conditioning: str = "sampled"
    history: List[List[float]] = field(default_factory=list)

    @property
    def d(self) -> int:
        return len(self.ordering)

    def conditioning_rows(self, feats: np.ndarray, coords: np.ndarray, k: int) -> np.ndarray:
        """[f(X), first k coordinates in chain order]"""
        return np.hstack([feats, coords[:, :k]])


def _check_ordering(ordering: Optional[Sequence[int]], d: int) -> List[int]:
    if ordering is None:
        return list(range(d))
    ordering = [int(k) for k in ordering]
    if sorted(ordering) != list(range(d)):
        raise ValueError(f"ordering must be a permutation of 0..{d - 1}, got {ordering}")
    return ordering


def _chain_draws(nets: Sequence[PinballNet], feats: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Coordinates in chain order from the given nets; ``taus`` has one column per net."""
    coords = np.zeros((len(feats), len(nets)))
    for k, net in enumerate(nets):
        cond = np.hstack([feats, coords[:, :k]])
        coords[:, k] = net.quantile(taus[:, k], cond)
    return coords


def train_autoregressive(cfg: TrainConfig, simulator: Simulator, ordering: Optional[Sequence[int]] = None,
                         network: Optional[NetworkConfig] = None, ar: Optional[AutoRegConfig] = None) -> AutoRegChain:
    """Train nets one coordinate at a time with the Monte Carlo CRPS loss.

    The feature map is trained together with the first net and frozen after.
    Net k conditions on the features and the first k-1 coordinates, which come
    from the already trained nets ("sampled") or from the simulator ("simulated").
    """
    ar = ar or AutoRegConfig()
    d = simulator.param_dim
    ordering = _check_ordering(ordering if ordering is not None else ar.ordering, d)
    network = network or NetworkConfig(param_dim=d, data_dim=simulator.data_dim, n_obs=simulator.n_obs, features="manual")
    rng = np.random.default_rng(cfg.seed)
    features = FeatureMap(network.features, network.data_dim, network.q1, network.q2, network.feature_width,
                          rng, n_obs=network.n_obs, momentum=network.centering_momentum)
    chain = AutoRegChain(nets=[], features=features, ordering=ordering, conditioning=ar.conditioning)
    logger.info(f"Initializing autoregressive chain over coordinates {ordering} ({ar.conditioning} conditioning)...")

    for k, coord in enumerate(ordering):
        net = PinballNet(f"ar.{coord}", features.q + k, rng, width=ar.width, hidden_layers=ar.hidden_layers)
        joint = k == 0
        features.training = joint
        params = net.parameters() + (features.parameters() if joint else [])
        state = AdamState(lr=cfg.learning_rate)
        consecutive = 0
        losses_per_epoch = []
        for epoch in range(cfg.epochs):
            state.lr = lr_schedule(epoch, cfg.learning_rate, cfg.lr_decay)
            losses = []
            for _ in range(cfg.iterations_per_epoch):
                batch = simulator.simulate(cfg.batch_size, rng)
                obs_value = observation_batch(batch.x, features.data_dim)
                graph = Graph(f"crps.{coord}")
                obs = graph.placeholder("obs", (None, None, features.data_dim))
                feats, batch_mean = features.build(graph, obs, obs_value, training=joint)
                parts = [] if feats is None else [feats]
                if k > 0:
                    if ar.conditioning == "simulated":
                        prev = batch.theta[:, ordering[:k]]
                    else:
                        feats_value = features.evaluate(batch.x, "inference")
                        prev = _chain_draws(chain.nets, feats_value, rng.uniform(size=(cfg.batch_size, k)))
                    parts.append(graph.constant(prev, name="previous"))
                cond = graph.concat(parts, axis=1) if parts else None
                taus = rng.uniform(0.0, 1.0, size=(cfg.batch_size, ar.mc_draws))
                loss = crps_graph(graph, net, cond, batch.theta[:, coord], taus)
                try:
                    value = float(graph.forward({"obs": obs_value}, loss))
                    grads = graph.backward(loss, wrt=[p.name for p in params])
                    updated, state = adam_step(state, {p.name: p.value for p in params}, grads)
                except NonFiniteError as exc:
                    consecutive += 1
                    logger.warning(f"Skipping non-finite CRPS iteration for coordinate {coord}: {exc}")
                    if consecutive >= cfg.max_nonfinite:
                        raise TrainingAborted(f"{consecutive} consecutive non-finite iterations (coordinate {coord})",
                                              {"coordinate": coord, "epoch": epoch + 1}) from exc
                    continue
                consecutive = 0
                for p in params:
                    p.value = updated[p.name]
                if joint and batch_mean is not None:
                    features.update_running_mean(batch_mean.value)
                losses.append(value)
            mean_loss = float(np.mean(losses)) if losses else float("nan")
            losses_per_epoch.append(mean_loss)
            logger.debug(f"Coordinate {coord} epoch {epoch + 1}/{cfg.epochs}: crps={mean_loss:.6f}")
        features.training = False
        chain.nets.append(net)
        chain.history.append(losses_per_epoch)
        logger.success(f"Quantile net for coordinate {coord} trained successfully")
    return chain


def sample_autoregressive(chain: AutoRegChain, x: np.ndarray, N: int, rng: np.random.Generator,
                          taus: Optional[np.ndarray] = None) -> np.ndarray:
    """N joint draws; coordinate k is net_k(tau_k, f(x), earlier coordinates). Returns (N, d) in parameter order."""
    if N < 1:
        raise ValueError(f"sample count must be >= 1, got {N}")
    feats = chain.features.evaluate(x, "inference")
    if feats.shape[0] != 1:
        raise ValueError(f"expected a single data matrix, got a batch of {feats.shape[0]}")
    if taus is None:
        taus = rng.uniform(0.0, 1.0, size=(N, chain.d))
    taus = np.asarray(taus, dtype=np.float64).reshape(N, chain.d)
    coords = _chain_draws(chain.nets, np.repeat(feats, N, axis=0), taus)
    theta = np.empty_like(coords)
    theta[:, chain.ordering] = coords
    return theta


def chain_monotonicity(chain: AutoRegChain, x: np.ndarray, rng: np.random.Generator, pairs: int = 1000) -> List[float]:
    """Per-net fraction of non-crossing quantile pairs, conditioning on draws from the chain at ``x``."""
    feats = chain.features.evaluate(x, "inference")
    draws = np.repeat(feats, pairs, axis=0)
    coords = _chain_draws(chain.nets, draws, rng.uniform(size=(pairs, chain.d)))
    rates = []
    for k, net in enumerate(chain.nets):
        rate = quantile_monotonicity(net, chain.conditioning_rows(draws, coords, k), rng, pairs)
        if rate < 1.0:
            logger.warning(f"Quantile crossing for coordinate {chain.ordering[k]}: {1.0 - rate:.4f} of pairs")
        rates.append(rate)
    return rates

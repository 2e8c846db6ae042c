"""Training loop with on-the-fly simulation, and multi-restart model selection"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from autodiff import AdamState, NonFiniteError, adam_step, lr_schedule
from networks import NetworkConfig, PotentialModel
from simulators import Simulator
from storage import save_model
from .loss import loss_and_grads, loss_L1

HELD_OUT_STREAM = 7919


class TrainingAborted(RuntimeError):
    """Too many consecutive non-finite iterations, or every restart failed"""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=30, ge=0)
    iterations_per_epoch: int = Field(default=100, ge=1)
    batch_size: int = Field(default=128, ge=2)
    restarts: int = Field(default=3, ge=1)
    seed: int
    learning_rate: float = Field(default=0.01, gt=0.0)
    lr_decay: float = Field(default=0.99, gt=0.0, le=1.0)
    held_out_factor: int = Field(default=10, ge=1)
    max_nonfinite: int = Field(default=10, ge=1)
    checkpoint_every: int = Field(default=0, ge=0)
    checkpoint_dir: Optional[Path] = None


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    lr: float


@dataclass
class TrainResult:
    model: PotentialModel
    history: List[EpochRecord] = field(default_factory=list)
    seed: Optional[int] = None
    held_out_loss: Optional[float] = None

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.epoch, r.mean_loss, r.lr) for r in self.history],
            columns=["epoch", "mean_loss", "lr"],
        )


@dataclass
class RestartResult:
    best: TrainResult
    candidates: List[TrainResult]
    failed_seeds: List[int] = field(default_factory=list)


def train(cfg: TrainConfig, network: NetworkConfig, simulator: Simulator, rng: np.random.Generator,
          model: Optional[PotentialModel] = None, seed: Optional[int] = None) -> TrainResult:
    """Fresh mini-batch and source draws every iteration; Adam with per-epoch learning-rate decay."""
    if model is None:
        model = PotentialModel(network, rng)
    model.train()
    params = model.parameters()
    state = AdamState(lr=lr_schedule(0, cfg.learning_rate, cfg.lr_decay))
    result = TrainResult(model=model, seed=seed)
    consecutive = 0
    label = f"seed {seed}" if seed is not None else "run"

    for epoch in range(cfg.epochs):
        state.lr = lr_schedule(epoch, cfg.learning_rate, cfg.lr_decay)
        losses = []
        for iteration in range(cfg.iterations_per_epoch):
            batch = simulator.simulate(cfg.batch_size, rng)
            try:
                value, grads, batch_mean = loss_and_grads(model, batch)
                updated, state = adam_step(state, {p.name: p.value for p in params}, grads)
            except NonFiniteError as exc:
                consecutive += 1
                logger.warning(f"Skipping iteration {iteration} of epoch {epoch + 1} ({label}): {exc}")
                if consecutive >= cfg.max_nonfinite:
                    raise TrainingAborted(
                        f"{consecutive} consecutive non-finite iterations ({label})",
                        {"epoch": epoch + 1, "iteration": iteration, "consecutive": consecutive, "last_error": str(exc)},
                    ) from exc
                continue
            consecutive = 0
            for p in params:
                p.value = updated[p.name]
                p.project()
            if batch_mean is not None:
                model.features.update_running_mean(batch_mean)
            losses.append(value)

        mean_loss = float(np.mean(losses)) if losses else float("nan")
        result.history.append(EpochRecord(epoch + 1, mean_loss, state.lr))
        logger.debug(f"Epoch {epoch + 1}/{cfg.epochs} ({label}): loss={mean_loss:.6f} lr={state.lr:.6g}")

        if cfg.checkpoint_every and cfg.checkpoint_dir and (epoch + 1) % cfg.checkpoint_every == 0:
            Path(cfg.checkpoint_dir).mkdir(parents=True, exist_ok=True)
            save_model(model, Path(cfg.checkpoint_dir) / f"checkpoint_{label.replace(' ', '')}_epoch{epoch + 1:03d}.npz")
            model.train()

    model.eval()
    return result


def held_out_batch(cfg: TrainConfig, simulator: Simulator):
    rng = np.random.default_rng([cfg.seed, HELD_OUT_STREAM])
    return simulator.simulate(cfg.held_out_factor * cfg.batch_size, rng)


def multi_restart_train(cfg: TrainConfig, network: NetworkConfig, simulator: Simulator) -> RestartResult:
    """Train ``cfg.restarts`` models with seeds seed, seed+1, ... and keep the lowest held-out loss."""
    held_out = held_out_batch(cfg, simulator)
    candidates: List[TrainResult] = []
    failed: List[int] = []
    for r in range(cfg.restarts):
        seed = cfg.seed + r
        logger.info(f"Training restart {r + 1}/{cfg.restarts} (seed {seed})...")
        try:
            result = train(cfg, network, simulator, np.random.default_rng(seed), seed=seed)
        except TrainingAborted as exc:
            logger.warning(f"Restart with seed {seed} aborted: {exc}")
            failed.append(seed)
            continue
        result.held_out_loss = loss_L1(result.model, held_out, training=False)
        logger.info(f"Restart {r + 1} held-out loss: {result.held_out_loss:.6f}")
        candidates.append(result)

    if not candidates:
        raise TrainingAborted(f"all {cfg.restarts} restarts aborted", {"failed_seeds": failed})
    best = min(candidates, key=lambda c: c.held_out_loss)
    logger.success(f"Selected seed {best.seed} with held-out loss {best.held_out_loss:.6f}")
    return RestartResult(best=best, candidates=candidates, failed_seeds=failed)

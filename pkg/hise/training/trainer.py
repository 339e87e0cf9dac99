from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hise.config import RunConfig
from hise.data.records import DatasetSplit
from hise.errors import TrainingError
from hise.evaluation import MetricsReport, evaluate
from hise.model.embed import embed_base_batch, embed_batch
from hise.numcore import ParamBinding, Tape, adam_step
from hise.training.objective import ObjectiveTerms, momentum_update, objective_summary, total_objective
from hise.training.state import TrainState

logger = logging.getLogger(__name__)


def cosine_learning_rate(step: int, total: int, lr: float) -> float:
    """lr * (1 + cos(pi * step / total)) / 2; the base rate when there are no steps."""
    if total <= 0:
        return lr
    progress = min(step, total) / total
    return lr * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class TrainResult:
    state: TrainState
    final: MetricsReport
    history: list[dict[str, Any]] = field(default_factory=list)


class Trainer:
    """Mini-batch training over a bijective split.

    One step: fused and base embeddings on a fresh tape, momentum keys on a second tape
    without gradients, total objective, backward, Adam, momentum update, then both keys
    enter their banks.
    """

    def __init__(self, config: RunConfig, split: DatasetSplit) -> None:
        split.require_bijective()
        self.config = config
        self.split = split
        self.pairs = split.pairs()
        self.warnings: Counter[str] = Counter()

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.pairs) / self.config.train.batch_size)

    @property
    def total_steps(self) -> int:
        return self.steps_per_epoch * self.config.train.epochs

    def batches(self, epoch: int) -> list[list[int]]:
        order = np.random.default_rng([self.config.seed, epoch]).permutation(len(self.pairs))
        size = self.config.train.batch_size
        return [order[i : i + size].tolist() for i in range(0, len(order), size)]

    def learning_rate(self, step: int) -> float:
        if self.config.train.cosine_schedule:
            return cosine_learning_rate(step, self.total_steps, self.config.train.lr)
        return self.config.train.lr

    def step(self, state: TrainState, indices: list[int]) -> ObjectiveTerms:
        videos = [self.pairs[i][0] for i in indices]
        texts = [self.pairs[i][1] for i in indices]

        tape = Tape()
        live = ParamBinding(tape, state.params)
        batch = embed_batch(videos, texts, live, self.config)

        key_tape = Tape()
        key_videos, key_texts = embed_base_batch(
            videos, texts, ParamBinding(key_tape, state.momentum, trainable=False)
        )
        terms = total_objective(
            batch, key_videos.data, key_texts.data, state.video_bank, state.text_bank, self.config.loss
        )
        loss = terms.total.item()
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss}", state.step)

        tape.backward(terms.total)
        updated = adam_step(state.params, live.grads(), state.adam, lr=self.learning_rate(state.step))
        state.params = state.params.replace(updated)
        state.momentum = momentum_update(state.params, state.momentum, self.config.train.momentum)
        state.video_bank.push(key_videos.data)
        state.text_bank.push(key_texts.data)
        state.step += 1

        self.warnings.update(tape.warnings)
        logger.debug("step %d: %s", state.step, objective_summary(terms.as_dict()))
        return terms

    def run_epoch(self, state: TrainState) -> float:
        losses = [self.step(state, indices).total.item() for indices in self.batches(state.epoch)]
        state.epoch += 1
        return float(np.mean(losses)) if losses else 0.0

    def run(self, state: TrainState | None = None) -> TrainResult:
        """Trains from `state` (a fresh model by default) up to `train.epochs` epochs.

        A final evaluation always runs, so zero epochs still yields one report.
        """
        state = state if state is not None else TrainState.fresh(self.config)
        history: list[dict[str, Any]] = []
        last: MetricsReport | None = None
        eval_every = self.config.train.eval_every
        if state.epoch >= self.config.train.epochs:
            logger.info("nothing to train: already at epoch %d of %d", state.epoch, self.config.train.epochs)

        while state.epoch < self.config.train.epochs:
            mean_loss = self.run_epoch(state)
            entry: dict[str, Any] = {"epoch": state.epoch, "step": state.step, "mean_loss": mean_loss}
            logger.info("epoch %d/%d: mean loss %.6f", state.epoch, self.config.train.epochs, mean_loss)
            if eval_every and state.epoch % eval_every == 0:
                report = evaluate(state.params, self.split, self.config)
                entry["metrics"] = report.to_dict()
                last = report
                logger.info(
                    "epoch %d: R@1 t2v %.1f v2t %.1f, R@Sum %.1f",
                    state.epoch,
                    report.t2v.r1,
                    report.v2t.r1,
                    report.r_sum,
                )
            else:
                last = None
            history.append(entry)

        if last is None:
            last = evaluate(state.params, self.split, self.config)
            logger.info("final: R@1 t2v %.1f v2t %.1f, R@Sum %.1f", last.t2v.r1, last.v2t.r1, last.r_sum)
        for name, count in sorted(self.warnings.items()):
            logger.warning("%s (%d times)", name, count)
        return TrainResult(state=state, final=last, history=history)

"""Direct point-cloud Gaussianization: the batch itself is the parameter.

The N x d matrix is treated as free variables and a selected batch loss
is minimized with Adam (or plain SGD).  Everything is seeded, so a
(seed, config) pair reproduces the trajectory bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import mmd_loss, sliced_w2_loss
from .calibration import CalibrationTable, standardized_wristband_loss
from .errors import ContractViolation, OptimizationFailure
from .generators import RngStream
from .pairwise import KernelConfig, LossValueGrad
from .wristband_map import validate_point_batch

__all__ = ["LOSS_KINDS", "AdamState", "OptimizeConfig", "adam_step", "optimize_point_cloud"]

LOSS_KINDS = ("wristband_pairwise", "wristband_spectral", "mmd", "sliced_w2")


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), step=0)


@dataclass(frozen=True)
class OptimizeConfig:
    loss: str = "wristband_pairwise"
    steps: int = 2000
    lr: float = 0.05
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    schedule: str = "constant"
    seed: int = 0
    log_stride: int = 10
    sliced_projections: int = 128
    freeze_projections: bool = False

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ContractViolation(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.steps < 1:
            raise ContractViolation(f"steps must be >= 1, got {self.steps}")
        if not (self.lr > 0.0 and math.isfinite(self.lr)):
            raise ContractViolation(f"lr must be positive, got {self.lr}")
        if self.optimizer not in ("adam", "sgd"):
            raise ContractViolation(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.schedule not in ("constant", "cosine"):
            raise ContractViolation(f"schedule must be 'constant' or 'cosine', got {self.schedule!r}")
        if self.log_stride < 1:
            raise ContractViolation(f"log_stride must be >= 1, got {self.log_stride}")


def adam_step(params, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ContractViolation(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}"
        )
    t = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m=m, v=v, step=t)


def _make_loss_fn(opt_cfg: OptimizeConfig, kernel_cfg: KernelConfig,
                  table: CalibrationTable | None):
    if opt_cfg.loss in ("wristband_pairwise", "wristband_spectral"):
        if table is None:
            raise ContractViolation(f"loss {opt_cfg.loss!r} requires a calibration table")
        expected = "pairwise" if opt_cfg.loss == "wristband_pairwise" else "spectral"
        if table.loss_path != expected:
            raise ContractViolation(
                f"calibration table was built for the {table.loss_path!r} path, "
                f"but the optimizer requested {expected!r}"
            )

        def loss_fn(x, step):
            return standardized_wristband_loss(x, table)

        return loss_fn
    if opt_cfg.loss == "mmd":
        def loss_fn(x, step):
            return mmd_loss(x)

        return loss_fn
    # sliced_w2: fresh seeded projections each step unless frozen.
    root = RngStream(opt_cfg.seed, "sliced_w2/projections")

    def loss_fn(x, step):
        label = "frozen" if opt_cfg.freeze_projections else f"step{step:06d}"
        return sliced_w2_loss(x, opt_cfg.sliced_projections, root.child(label))

    return loss_fn


def optimize_point_cloud(initial, opt_cfg: OptimizeConfig, kernel_cfg: KernelConfig,
                         table: CalibrationTable | None = None):
    """Minimize the selected loss over the free points.

    Returns (final_batch, trajectory), where trajectory is a list of
    (step, loss_value) pairs sampled every `log_stride` steps plus the
    final step.  A non-finite loss aborts with the failing step index.
    """
    x = validate_point_batch(initial).copy()
    loss_fn = _make_loss_fn(opt_cfg, kernel_cfg, table)
    state = AdamState.zeros(x.shape)
    trajectory: list[tuple[int, float]] = []

    for step in range(opt_cfg.steps):
        lvg: LossValueGrad = loss_fn(x, step)
        if not math.isfinite(lvg.value) or not np.all(np.isfinite(lvg.grad)):
            raise OptimizationFailure(
                f"non-finite loss or gradient at step {step} (loss={lvg.value!r})", step
            )
        if step % opt_cfg.log_stride == 0 or step == opt_cfg.steps - 1:
            trajectory.append((step, lvg.value))
        lr = opt_cfg.lr
        if opt_cfg.schedule == "cosine":
            lr = opt_cfg.lr * 0.5 * (1.0 + math.cos(math.pi * step / opt_cfg.steps))
        if opt_cfg.optimizer == "adam":
            x, state = adam_step(
                x, lvg.grad, state, lr, opt_cfg.beta1, opt_cfg.beta2, opt_cfg.adam_eps
            )
        else:
            x = x - lr * lvg.grad
    return x, trajectory

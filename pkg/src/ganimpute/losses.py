"""Training objectives: gradient-penalty Wasserstein losses, mask-prediction
cross-entropy losses, hints, and the fixed-value masking function.

All loss functions return a :class:`LossValue` whose ``value`` is a 0-dim torch
tensor (so gradients can flow when the inputs carry a graph) and whose
``components`` sum to the value exactly.

Critic convention: the critic is trained to score the second-pass re-imputation
("fake") above the first-pass imputation ("real"); minimizing
``mean D(fake) - mean D(real) + penalty`` separates the two, and the generator
minimizes ``-mean D(fake)`` to close the gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .data import DataMatrix, MaskMatrix, NoiseSource, _as_float_matrix
from .errors import DataError
from .networks import Network, critic_score

GAIN_CLAMP_EPS = 1e-7


@dataclass(frozen=True)
class LossValue:
    """A scalar loss and its named additive breakdown (components sum to value)."""

    value: torch.Tensor
    components: dict[str, torch.Tensor]

    def item(self) -> float:
        return float(self.value.detach())

    def component(self, name: str) -> float:
        return float(self.components[name].detach())


def _to_tensor(x: DataMatrix | MaskMatrix | np.ndarray | torch.Tensor) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    if isinstance(x, (DataMatrix, MaskMatrix)):
        return torch.tensor(x.values, dtype=torch.float64)
    return torch.tensor(np.asarray(x, dtype=np.float64), dtype=torch.float64)


def _paired_tensors(a, b, what: str) -> tuple[torch.Tensor, torch.Tensor]:
    ta, tb = _to_tensor(a), _to_tensor(b)
    if ta.shape != tb.shape:
        raise DataError(f"{what}: shape mismatch {tuple(ta.shape)} vs {tuple(tb.shape)}")
    if ta.ndim != 2:
        raise DataError(f"{what}: expected 2-D batches, got {tuple(ta.shape)}")
    return ta, tb


def gradient_penalty(
    critic: Network,
    real: DataMatrix | np.ndarray | torch.Tensor,
    fake: DataMatrix | np.ndarray | torch.Tensor,
    rng: NoiseSource | None = None,
    lam: float = 10.0,
    t: np.ndarray | None = None,
) -> LossValue:
    """Two-sided gradient penalty on per-sample interpolates.

    Each sample is interpolated as ``y = t * fake + (1 - t) * real`` with its
    own scalar ``t`` (drawn U(0,1) from ``rng`` unless given explicitly), and
    the penalty is ``lam * mean((||grad_y D(y)|| - 1)^2)`` where D is the
    critic's per-sample scalar score.
    """
    real_t, fake_t = _paired_tensors(real, fake, "gradient_penalty")
    b = real_t.shape[0]
    if t is None:
        if rng is None:
            raise DataError("gradient_penalty needs an rng (or explicit t)")
        t_arr = rng.uniform(b, 1)
    else:
        t_arr = np.asarray(t, dtype=np.float64).reshape(b, 1)
        if ((t_arr < 0.0) | (t_arr > 1.0)).any():
            raise DataError("interpolation coefficients must lie in [0, 1]")
    t_t = torch.tensor(t_arr, dtype=real_t.dtype)
    with torch.enable_grad():
        y = (t_t * fake_t + (1.0 - t_t) * real_t).detach().requires_grad_(True)
        scores = critic_score(critic, y)
        grads = torch.autograd.grad(scores.sum(), y, create_graph=True)[0]
        norms = grads.norm(2, dim=1)
        penalty = lam * ((norms - 1.0) ** 2).mean()
    return LossValue(penalty, {"penalty_term": penalty})


def igani_critic_loss(
    critic: Network,
    v: DataMatrix | np.ndarray | torch.Tensor,
    v_hat: DataMatrix | np.ndarray | torch.Tensor,
    rng: NoiseSource | None = None,
    lam: float = 10.0,
    t: np.ndarray | None = None,
) -> LossValue:
    """Critic objective: separate re-imputed batches from first-pass batches.

    ``mean D(v_hat) - mean D(v) + gradient penalty``, minimized by the critic.
    """
    v_t, v_hat_t = _paired_tensors(v, v_hat, "igani_critic_loss")
    with torch.enable_grad():
        wasserstein = critic_score(critic, v_hat_t).mean() - critic_score(critic, v_t).mean()
    gp = gradient_penalty(critic, v_t, v_hat_t, rng=rng, lam=lam, t=t)
    value = wasserstein + gp.value
    return LossValue(value, {"wasserstein_term": wasserstein, "penalty_term": gp.value})


def igani_generator_loss(critic: Network, v_hat: DataMatrix | np.ndarray | torch.Tensor) -> LossValue:
    """Generator objective: raise the critic's score of re-imputed batches."""
    v_hat_t = _to_tensor(v_hat)
    if v_hat_t.ndim != 2:
        raise DataError(f"expected a 2-D batch, got {tuple(v_hat_t.shape)}")
    value = -critic_score(critic, v_hat_t).mean()
    return LossValue(value, {"adversarial_term": value})


@dataclass(frozen=True)
class HintMatrix:
    """A mask copy with exactly one entry per row replaced by 0.5."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_float_matrix(self.values, "HintMatrix values")
        if not np.isin(arr, (0.0, 0.5, 1.0)).all():
            raise DataError("hint entries must be 0.0, 0.5, or 1.0")
        halves = (arr == 0.5).sum(axis=1)
        if not (halves == 1).all():
            raise DataError("each hint row must contain exactly one 0.5 entry")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def gain_hint(m: MaskMatrix, rng: NoiseSource) -> HintMatrix:
    """Hint for the mask predictor: the mask with one random entry per row set to 0.5."""
    h = m.values.copy()
    cols = rng.integers(0, m.n_features, size=m.n_samples)
    h[np.arange(m.n_samples), cols] = 0.5
    return HintMatrix(h)


def _clamped_mask_prediction(m_hat, m) -> tuple[torch.Tensor, torch.Tensor]:
    pred_t, m_t = _paired_tensors(m_hat, m, "mask prediction loss")
    with torch.no_grad():
        lo = float(pred_t.min())
        hi = float(pred_t.max())
    if lo < 0.0 or hi > 1.0:
        raise DataError(f"mask predictions must lie in [0, 1]; saw [{lo}, {hi}]")
    clamped = pred_t.clamp(GAIN_CLAMP_EPS, 1.0 - GAIN_CLAMP_EPS)
    return clamped, m_t


def gain_discriminator_loss(m_hat, m) -> LossValue:
    """Per-entry cross-entropy of the predicted mask against the true mask.

    ``-mean_batch sum_features [m log m_hat + (1 - m) log(1 - m_hat)]`` with the
    prediction clamped away from 0 and 1.
    """
    pred, m_t = _clamped_mask_prediction(m_hat, m)
    ce = -(m_t * torch.log(pred) + (1.0 - m_t) * torch.log(1.0 - pred)).sum(dim=1).mean()
    return LossValue(ce, {"cross_entropy_term": ce})


def gain_generator_loss(m_hat, m) -> LossValue:
    """Generator side of the mask game: make missing slots look observed.

    ``-mean_batch sum_features (1 - m) log m_hat``.
    """
    pred, m_t = _clamped_mask_prediction(m_hat, m)
    value = -((1.0 - m_t) * torch.log(pred)).sum(dim=1).mean()
    return LossValue(value, {"adversarial_term": value})


def misgan_mask_fn(x, m, tau: float = 0.0):
    """Fill the unobserved slots of ``x`` with the constant ``tau``: x*m + tau*(1-m).

    Works on matching numpy arrays, torch tensors (soft masks included), or a
    DataMatrix/MaskMatrix pair; the result has the kind of ``x``.
    """
    if isinstance(x, DataMatrix) and isinstance(m, MaskMatrix):
        if x.values.shape != m.values.shape:
            raise DataError(
                f"data shape {x.values.shape} does not match mask shape {m.values.shape}"
            )
        return x.with_values(x.values * m.values + tau * (1.0 - m.values))
    if isinstance(x, torch.Tensor) != isinstance(m, torch.Tensor):
        raise DataError("misgan_mask_fn needs both arguments of the same kind")
    if isinstance(x, torch.Tensor):
        if x.shape != m.shape:
            raise DataError(f"shape mismatch: {tuple(x.shape)} vs {tuple(m.shape)}")
        return x * m + tau * (1.0 - m)
    x_arr = np.asarray(x, dtype=np.float64)
    m_arr = np.asarray(m, dtype=np.float64)
    if x_arr.shape != m_arr.shape:
        raise DataError(f"shape mismatch: {x_arr.shape} vs {m_arr.shape}")
    return x_arr * m_arr + tau * (1.0 - m_arr)

"""Two-pass generative imputation and its exact inverse.

The imputer mixes observed data with noise, runs a generator over the mixture,
and splices generated values into the missing slots only:

    u = x  where observed, z    where missing
    v = x  where observed, g(u) where missing

Observed entries of ``v`` equal the corresponding entries of ``x`` bitwise.
Because equality ``u == v`` identifies the observed slots (the missing ones
collide only on a measure-zero set for continuous noise), the pair ``(u, v)``
can be inverted exactly back to the observed data, the mask, and the noise at
the missing slots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import torch

from .data import DataMatrix, MaskMatrix, NoiseSource, check_paired
from .errors import DataError
from .networks import Network, forward

GeneratorFn = Union[Network, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class GenerativeImputer:
    """A generator function g plus the feature width it operates on."""

    g: GeneratorFn
    data_dim: int

    def __post_init__(self) -> None:
        if self.data_dim < 1:
            raise DataError("data_dim must be positive")
        if isinstance(self.g, Network):
            if self.g.in_dim != self.data_dim or self.g.out_dim != self.data_dim:
                raise DataError(
                    f"generator maps {self.g.in_dim} -> {self.g.out_dim}, "
                    f"expected {self.data_dim} -> {self.data_dim}"
                )


def _g_eval(g: GeneratorFn, u: np.ndarray) -> np.ndarray:
    """Evaluate the generator deterministically on a numpy batch."""
    if isinstance(g, Network):
        restore = g.mode
        g.mode = "eval"
        try:
            out = forward(g, u)
        finally:
            g.mode = restore
    else:
        out = np.asarray(g(u), dtype=np.float64)
    if out.shape != u.shape:
        raise DataError(f"generator returned shape {out.shape} for input {u.shape}")
    return out


def _check_noise(z: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != shape:
        raise DataError(f"noise shape {z.shape} does not match data shape {shape}")
    if not np.isfinite(z).all():
        raise DataError("noise must be finite")
    return z


def impute(imp: GenerativeImputer, x: DataMatrix, m: MaskMatrix, z: np.ndarray) -> tuple[DataMatrix, DataMatrix]:
    """Return (u, v): the noise-mixed input and the imputed matrix.

    Missing entries of ``x`` are never read; observed entries pass through to
    both outputs unchanged (bitwise).
    """
    check_paired(x, m)
    if x.n_features != imp.data_dim:
        raise DataError(f"data has {x.n_features} features, imputer expects {imp.data_dim}")
    z = _check_noise(z, x.values.shape)
    observed = m.values > 0.5
    u = np.where(observed, x.values, z)
    v = np.where(observed, x.values, _g_eval(imp.g, u))
    return x.with_values(u), x.with_values(v)


def recover_mask(u: DataMatrix, v: DataMatrix, tol: float = 0.0) -> MaskMatrix:
    """Infer the observation mask from an imputation pair: 1 where |u - v| <= tol.

    With continuous noise, ``u == v`` exactly at observed slots and (almost
    surely) nowhere else; a missing slot where the generator happens to
    reproduce the noise value is misclassified — a measure-zero event.
    """
    if u.values.shape != v.values.shape:
        raise DataError(f"shape mismatch: {u.values.shape} vs {v.values.shape}")
    if tol < 0.0:
        raise DataError("tol must be non-negative")
    return MaskMatrix((np.abs(u.values - v.values) <= tol).astype(np.float64))


def invert(imp: GenerativeImputer, u: DataMatrix, v: DataMatrix, tol: float = 0.0) -> tuple[DataMatrix, MaskMatrix, DataMatrix]:
    """Recover (observed data, mask, noise-at-missing-slots) from (u, v).

    Exact up to generator determinism: re-running the generator on ``u``
    reproduces the values spliced into ``v``, so subtraction cancels them.
    Missing slots of the recovered data and observed slots of the recovered
    noise are zero by construction.
    """
    m = recover_mask(u, v, tol)
    missing = 1.0 - m.values
    g_u = _g_eval(imp.g, u.values) * missing
    x_obs = v.values - g_u
    # Grouping as u - (v - g_u) rather than (u - v) + g_u keeps the
    # cancellation at missing slots exact: v - g_u is a bitwise zero there.
    z_miss = u.values - x_obs
    return u.with_values(x_obs), m, u.with_values(z_miss)


def impute_tensors(
    g_net: Network,
    x: torch.Tensor,
    m: torch.Tensor,
    z: torch.Tensor,
    rng: NoiseSource | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Torch-graph version of :func:`impute` used inside training loops.

    Gradients flow through the generator output at missing slots (and through
    ``x`` itself where it is a non-leaf, as in the second imputation pass).
    """
    observed = m > 0.5
    u = torch.where(observed, x, z)
    from .networks import _forward_tensor  # local import avoids a public alias

    v = torch.where(observed, x, _forward_tensor(g_net, u, rng))
    return u, v


def sample_noise_like(x: DataMatrix, rng: NoiseSource) -> np.ndarray:
    """Convenience: draw a noise matrix matching a data matrix's shape."""
    return rng.noise(x.n_samples, x.n_features)

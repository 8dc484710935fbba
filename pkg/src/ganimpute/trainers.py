"""Training loops for the three adversarial imputers and the one-step predictor.

The iterative imputer trains per minibatch with an escalating critic schedule:
the critic takes ``critic_updates_base + epoch // critic_updates_epoch_div``
updates before each single generator update, with the minibatch noise drawn
once and shared across that block (resampling is configurable). The mask-game
imputer and the three-pair imputer update each player once per minibatch.

Every random draw (init, batching, noise, re-masking, dropout, interpolation)
comes from child streams of one seeded :class:`~ganimpute.data.NoiseSource`,
so repeated runs with the same config are bitwise identical. A non-finite loss
aborts training with the epoch and minibatch attached.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from .data import DataMatrix, MaskMatrix, NoiseSource, check_paired, reshuffle_mask
from .errors import ConfigError, DataError, TrainingDivergedError
from .imputer import GenerativeImputer, impute_tensors
from .losses import (
    gain_discriminator_loss,
    gain_generator_loss,
    gain_hint,
    igani_critic_loss,
    igani_generator_loss,
)
from .networks import (
    Network,
    _forward_tensor,
    build_mlp,
    clone_network,
    critic_spec,
    data_generator_spec,
    forward,
    gain_discriminator_spec,
    imputer_generator_spec,
    load_network,
    mask_generator_spec,
    predictor_spec,
    save_network,
)

METHOD_NAMES = ("igani", "gain", "misgan")

ProgressFn = Callable[[int, dict[str, float]], None]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all trainers. Defaults are the full-scale ones."""

    n_epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-4
    critic_updates_base: int = 30
    critic_updates_epoch_div: int = 10
    lambda_gp: float = 10.0
    seed: int = 0
    optimizer: str = "adam"
    adam_beta1: float = 0.5
    adam_beta2: float = 0.9
    noise: str = "uniform01"
    noise_scale: float = 1.0
    resample_noise_per_critic_step: bool = False
    gain_reconstruction_alpha: float = 0.0
    misgan_tau: float = 0.0
    predictor_epochs: int = 100
    predictor_patience: int = 10
    predictor_val_fraction: float = 0.1
    debug_checks: bool = False
    energy_distance_samples: int = 512

    def __post_init__(self) -> None:
        if self.n_epochs < 1 or self.batch_size < 1:
            raise ConfigError("n_epochs and batch_size must be positive")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be positive")
        if self.critic_updates_base < 1 or self.critic_updates_epoch_div < 1:
            raise ConfigError("critic update schedule parameters must be positive")
        if self.lambda_gp < 0.0:
            raise ConfigError("lambda_gp must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        for beta in (self.adam_beta1, self.adam_beta2):
            if not 0.0 <= beta < 1.0:
                raise ConfigError("adam betas must lie in [0, 1)")
        if self.noise not in ("uniform01", "standard_normal"):
            raise ConfigError(f"unknown noise distribution {self.noise!r}")
        if not self.noise_scale > 0.0:
            raise ConfigError("noise_scale must be positive")
        if self.gain_reconstruction_alpha < 0.0:
            raise ConfigError("gain_reconstruction_alpha must be non-negative")
        if self.predictor_epochs < 1 or self.predictor_patience < 1:
            raise ConfigError("predictor epochs/patience must be positive")
        if not 0.0 <= self.predictor_val_fraction < 1.0:
            raise ConfigError("predictor_val_fraction must lie in [0, 1)")
        if self.energy_distance_samples < 2:
            raise ConfigError("energy_distance_samples must be at least 2")


def critic_updates_for_epoch(cfg: TrainConfig, epoch: int) -> int:
    """Critic updates per generator update at the given epoch."""
    return cfg.critic_updates_base + epoch // cfg.critic_updates_epoch_div


def config_hash(cfg: TrainConfig) -> str:
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class TrainedImputer:
    """A trained imputer plus everything needed to audit and reload it."""

    method: str
    imputer: GenerativeImputer
    auxiliaries: dict[str, Network]
    config: TrainConfig
    loss_history: list[dict[str, float]]
    update_blocks: list[tuple[int, int]] = field(default_factory=list)
    observed_checks: int = 0


@dataclass
class PredictorModel:
    """One-step-ahead predictor with its training trace."""

    net: Network
    config: TrainConfig
    loss_history: list[dict[str, float]]
    best_epoch: int = 0


def _make_optimizer(cfg: TrainConfig, params: list[torch.Tensor]) -> torch.optim.Optimizer:
    if cfg.optimizer == "adam":
        return torch.optim.Adam(params, lr=cfg.learning_rate, betas=(cfg.adam_beta1, cfg.adam_beta2))
    return torch.optim.SGD(params, lr=cfg.learning_rate)


def _check_training_inputs(x: DataMatrix, m: MaskMatrix, cfg: TrainConfig) -> None:
    check_paired(x, m)
    if not x.normalized:
        raise DataError("trainers expect normalized data; apply transform() first")
    if not isinstance(cfg, TrainConfig):
        raise ConfigError("cfg must be a TrainConfig")


def _epoch_batches(n: int, batch_size: int, rng: NoiseSource) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def _finite_or_raise(value: float, what: str, epoch: int, batch: int) -> float:
    if not math.isfinite(value):
        raise TrainingDivergedError(
            f"{what} became non-finite at epoch {epoch}, minibatch {batch}",
            epoch=epoch,
            batch=batch,
        )
    return value


def _assert_observed_preserved(v: torch.Tensor, x: torch.Tensor, observed: torch.Tensor) -> None:
    if not torch.equal(v[observed], x[observed]):
        raise AssertionError("observed entries were altered by imputation")


def _row_reshuffle(m_rows: np.ndarray, rng: NoiseSource) -> np.ndarray:
    return reshuffle_mask(MaskMatrix(m_rows), rng).values


def _slot_noise(rng: NoiseSource, b: int, d: int, cfg: TrainConfig) -> torch.Tensor:
    """Noise destined for the missing slots of an input, at the configured scale.

    The scale applies only here — latent codes fed to the mask/data generators
    keep the raw distribution.
    """
    return torch.tensor(cfg.noise_scale * rng.noise(b, d), dtype=torch.float64)


def train_igani(
    x: DataMatrix,
    m: MaskMatrix,
    cfg: TrainConfig,
    progress: ProgressFn | None = None,
) -> TrainedImputer:
    """Train the two-pass iterative imputer with a gradient-penalty critic.

    Per minibatch: draw noise once; run the scheduled number of critic updates,
    each on a freshly re-masked second pass; then one generator update through
    both passes.
    """
    from .evaluation import energy_distance  # local import; evaluation imports us

    _check_training_inputs(x, m, cfg)
    d = x.n_features
    root = NoiseSource(cfg.noise, cfg.seed)
    g_net = build_mlp(imputer_generator_spec(d), root.child("generator-init")).set_mode("train")
    critic = build_mlp(critic_spec(d), root.child("critic-init"))
    g_net.enable_grad()
    critic.enable_grad()
    g_opt = _make_optimizer(cfg, g_net.params)
    d_opt = _make_optimizer(cfg, critic.params)

    batch_rng = root.child("batching")
    noise_rng = root.child("noise")
    remask_rng = root.child("remask")
    dropout_rng = root.child("dropout")
    gp_rng = root.child("interpolation")
    energy_rng = root.child("energy-subsample")

    x_all = torch.tensor(x.values * m.values, dtype=torch.float64)
    m_all = torch.tensor(m.values, dtype=torch.float64)

    history: list[dict[str, float]] = []
    update_blocks: list[tuple[int, int]] = []
    observed_checks = 0

    for epoch in range(cfg.n_epochs):
        n_critic = critic_updates_for_epoch(cfg, epoch)
        critic_losses: list[float] = []
        generator_losses: list[float] = []
        epoch_tail: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        for batch_idx, rows in enumerate(_epoch_batches(x.n_samples, cfg.batch_size, batch_rng)):
            xb = x_all[rows]
            mb = m_all[rows]
            mb_np = m.values[rows]
            observed = mb > 0.5
            z = _slot_noise(noise_rng, len(rows), d, cfg)

            block_updates = 0
            for _ in range(n_critic):
                if cfg.resample_noise_per_critic_step:
                    z = _slot_noise(noise_rng, len(rows), d, cfg)
                with torch.no_grad():
                    _, v = impute_tensors(g_net, xb, mb, z, dropout_rng)
                    n_np = _row_reshuffle(mb_np, remask_rng)
                    n_t = torch.tensor(n_np, dtype=torch.float64)
                    _, v_hat = impute_tensors(g_net, v, n_t, z, dropout_rng)
                if cfg.debug_checks:
                    _assert_observed_preserved(v, xb, observed)
                    observed_checks += 1
                d_loss = igani_critic_loss(critic, v, v_hat, rng=gp_rng, lam=cfg.lambda_gp)
                d_opt.zero_grad()
                d_loss.value.backward()
                d_opt.step()
                critic_losses.append(_finite_or_raise(d_loss.item(), "critic loss", epoch, batch_idx))
                block_updates += 1

            if cfg.resample_noise_per_critic_step:
                z = _slot_noise(noise_rng, len(rows), d, cfg)
            _, v = impute_tensors(g_net, xb, mb, z, dropout_rng)
            n_np = _row_reshuffle(mb_np, remask_rng)
            n_t = torch.tensor(n_np, dtype=torch.float64)
            _, v_hat = impute_tensors(g_net, v, n_t, z, dropout_rng)
            g_loss = igani_generator_loss(critic, v_hat)
            g_opt.zero_grad()
            g_loss.value.backward()
            g_opt.step()
            generator_losses.append(_finite_or_raise(g_loss.item(), "generator loss", epoch, batch_idx))
            update_blocks.append((epoch, block_updates))
            epoch_tail = (
                v.detach().cpu().numpy(),
                v_hat.detach().cpu().numpy(),
                n_np,
            )

        assert epoch_tail is not None
        v_np, v_hat_np, n_np = epoch_tail
        remasked = n_np < 0.5
        if remasked.any():
            first_pass = v_np[remasked]
            second_pass = v_hat_np[remasked]
            cap = cfg.energy_distance_samples
            if first_pass.size > cap:
                pick = energy_rng.permutation(first_pass.size)[:cap]
                first_pass = first_pass[pick]
                second_pass = second_pass[pick]
            epoch_energy = energy_distance(second_pass, first_pass)
        else:
            epoch_energy = float("nan")
        record = {
            "critic_loss": float(np.mean(critic_losses)),
            "generator_loss": float(np.mean(generator_losses)),
            "energy_distance": epoch_energy,
            "critic_updates_per_generator_update": float(n_critic),
        }
        history.append(record)
        if progress is not None:
            progress(epoch, record)

    g_net.set_mode("eval")
    return TrainedImputer(
        method="igani",
        imputer=GenerativeImputer(g_net, d),
        auxiliaries={"critic": critic},
        config=cfg,
        loss_history=history,
        update_blocks=update_blocks,
        observed_checks=observed_checks,
    )


def train_gain(
    x: DataMatrix,
    m: MaskMatrix,
    cfg: TrainConfig,
    progress: ProgressFn | None = None,
) -> TrainedImputer:
    """Train the mask-game imputer: the discriminator predicts the mask from
    the imputed batch plus a hint; the generator makes missing slots pass as
    observed. One discriminator and one generator update per minibatch."""
    _check_training_inputs(x, m, cfg)
    d = x.n_features
    root = NoiseSource(cfg.noise, cfg.seed)
    g_net = build_mlp(imputer_generator_spec(d), root.child("generator-init")).set_mode("train")
    disc = build_mlp(gain_discriminator_spec(d), root.child("discriminator-init"))
    g_net.enable_grad()
    disc.enable_grad()
    g_opt = _make_optimizer(cfg, g_net.params)
    d_opt = _make_optimizer(cfg, disc.params)

    batch_rng = root.child("batching")
    noise_rng = root.child("noise")
    hint_rng = root.child("hint")
    dropout_rng = root.child("dropout")

    x_all = torch.tensor(x.values * m.values, dtype=torch.float64)
    m_all = torch.tensor(m.values, dtype=torch.float64)

    history: list[dict[str, float]] = []
    observed_checks = 0
    alpha = cfg.gain_reconstruction_alpha

    for epoch in range(cfg.n_epochs):
        d_losses: list[float] = []
        g_losses: list[float] = []
        for batch_idx, rows in enumerate(_epoch_batches(x.n_samples, cfg.batch_size, batch_rng)):
            xb = x_all[rows]
            mb = m_all[rows]
            observed = mb > 0.5
            z = _slot_noise(noise_rng, len(rows), d, cfg)
            hint = torch.tensor(gain_hint(MaskMatrix(m.values[rows]), hint_rng).values, dtype=torch.float64)

            with torch.no_grad():
                u = torch.where(observed, xb, z)
                g_out = _forward_tensor(g_net, u, dropout_rng)
                v = torch.where(observed, xb, g_out)
            if cfg.debug_checks:
                _assert_observed_preserved(v, xb, observed)
                observed_checks += 1
            pred = _forward_tensor(disc, torch.cat([hint, v], dim=1), None)
            d_loss = gain_discriminator_loss(pred, mb)
            d_opt.zero_grad()
            d_loss.value.backward()
            d_opt.step()
            d_losses.append(_finite_or_raise(d_loss.item(), "discriminator loss", epoch, batch_idx))

            u = torch.where(observed, xb, z)
            g_out = _forward_tensor(g_net, u, dropout_rng)
            v = torch.where(observed, xb, g_out)
            pred = _forward_tensor(disc, torch.cat([hint, v], dim=1), None)
            g_loss_value = gain_generator_loss(pred, mb).value
            if alpha > 0.0:
                n_observed = mb.sum().clamp(min=1.0)
                reconstruction = (mb * (g_out - xb) ** 2).sum() / n_observed
                g_loss_value = g_loss_value + alpha * reconstruction
            g_opt.zero_grad()
            g_loss_value.backward()
            g_opt.step()
            g_losses.append(_finite_or_raise(float(g_loss_value.detach()), "generator loss", epoch, batch_idx))

        record = {
            "discriminator_loss": float(np.mean(d_losses)),
            "generator_loss": float(np.mean(g_losses)),
        }
        history.append(record)
        if progress is not None:
            progress(epoch, record)

    g_net.set_mode("eval")
    return TrainedImputer(
        method="gain",
        imputer=GenerativeImputer(g_net, d),
        auxiliaries={"discriminator": disc},
        config=cfg,
        loss_history=history,
        observed_checks=observed_checks,
    )


def train_misgan(
    x: DataMatrix,
    m: MaskMatrix,
    cfg: TrainConfig,
    progress: ProgressFn | None = None,
) -> TrainedImputer:
    """Train the three-pair imputer: a mask generator against real masks, a
    data generator against constant-filled real data, and an imputer whose
    output must pass for data-generator samples. Each critic and each
    generator updates once per minibatch with gradient-penalty losses."""
    _check_training_inputs(x, m, cfg)
    d = x.n_features
    tau = cfg.misgan_tau
    root = NoiseSource(cfg.noise, cfg.seed)
    g_imp = build_mlp(imputer_generator_spec(d), root.child("imputer-init")).set_mode("train")
    g_mask = build_mlp(mask_generator_spec(d), root.child("mask-generator-init"))
    g_data = build_mlp(data_generator_spec(d), root.child("data-generator-init"))
    d_mask = build_mlp(critic_spec(d), root.child("mask-critic-init"))
    d_data = build_mlp(critic_spec(d), root.child("data-critic-init"))
    d_imp = build_mlp(critic_spec(d), root.child("imputer-critic-init"))
    nets = [g_imp, g_mask, g_data, d_mask, d_data, d_imp]
    for net in nets:
        net.enable_grad()
    opts = {id(net): _make_optimizer(cfg, net.params) for net in nets}

    batch_rng = root.child("batching")
    noise_rng = root.child("noise")
    dropout_rng = root.child("dropout")
    gp_rng = root.child("interpolation")

    x_all = torch.tensor(x.values * m.values, dtype=torch.float64)
    m_all = torch.tensor(m.values, dtype=torch.float64)

    history: list[dict[str, float]] = []
    observed_checks = 0

    def _step(net: Network, loss: torch.Tensor) -> None:
        opt = opts[id(net)]
        opt.zero_grad()
        loss.backward()
        opt.step()

    for epoch in range(cfg.n_epochs):
        sums = {name: 0.0 for name in (
            "mask_critic_loss", "data_critic_loss", "imputer_critic_loss",
            "mask_generator_loss", "data_generator_loss", "imputer_generator_loss",
        )}
        n_batches = 0
        for batch_idx, rows in enumerate(_epoch_batches(x.n_samples, cfg.batch_size, batch_rng)):
            xb = x_all[rows]
            mb = m_all[rows]
            observed = mb > 0.5
            b = len(rows)
            z_imp = _slot_noise(noise_rng, b, d, cfg)
            z_mask = torch.tensor(noise_rng.noise(b, d), dtype=torch.float64)
            z_data = torch.tensor(noise_rng.noise(b, d), dtype=torch.float64)

            with torch.no_grad():
                soft_mask = _forward_tensor(g_mask, z_mask, None)
                gen_data = _forward_tensor(g_data, z_data, None)
                _, v = impute_tensors(g_imp, xb, mb, z_imp, dropout_rng)
            if cfg.debug_checks:
                _assert_observed_preserved(v, xb, observed)
                observed_checks += 1

            real_masked = xb * mb + tau * (1.0 - mb)
            fake_masked = gen_data * soft_mask + tau * (1.0 - soft_mask)

            losses = {}
            dm_loss = igani_critic_loss(d_mask, mb, soft_mask, rng=gp_rng, lam=cfg.lambda_gp)
            _step(d_mask, dm_loss.value)
            losses["mask_critic_loss"] = dm_loss.item()
            dx_loss = igani_critic_loss(d_data, real_masked, fake_masked, rng=gp_rng, lam=cfg.lambda_gp)
            _step(d_data, dx_loss.value)
            losses["data_critic_loss"] = dx_loss.item()
            di_loss = igani_critic_loss(d_imp, gen_data, v, rng=gp_rng, lam=cfg.lambda_gp)
            _step(d_imp, di_loss.value)
            losses["imputer_critic_loss"] = di_loss.item()

            soft_mask = _forward_tensor(g_mask, z_mask, None)
            gm_loss = igani_generator_loss(d_mask, soft_mask)
            _step(g_mask, gm_loss.value)
            losses["mask_generator_loss"] = gm_loss.item()

            with torch.no_grad():
                soft_mask_fixed = _forward_tensor(g_mask, z_mask, None)
            gen_data = _forward_tensor(g_data, z_data, None)
            gx_loss = igani_generator_loss(d_data, gen_data * soft_mask_fixed + tau * (1.0 - soft_mask_fixed))
            _step(g_data, gx_loss.value)
            losses["data_generator_loss"] = gx_loss.item()

            _, v = impute_tensors(g_imp, xb, mb, z_imp, dropout_rng)
            gi_loss = igani_generator_loss(d_imp, v)
            _step(g_imp, gi_loss.value)
            losses["imputer_generator_loss"] = gi_loss.item()

            for name, value in losses.items():
                sums[name] += _finite_or_raise(value, name, epoch, batch_idx)
            n_batches += 1

        record = {name: total / n_batches for name, total in sums.items()}
        history.append(record)
        if progress is not None:
            progress(epoch, record)

    g_imp.set_mode("eval")
    return TrainedImputer(
        method="misgan",
        imputer=GenerativeImputer(g_imp, d),
        auxiliaries={
            "mask_generator": g_mask,
            "data_generator": g_data,
            "mask_critic": d_mask,
            "data_critic": d_data,
            "imputer_critic": d_imp,
        },
        config=cfg,
        loss_history=history,
        observed_checks=observed_checks,
    )


TRAINERS: dict[str, Callable[..., TrainedImputer]] = {
    "igani": train_igani,
    "gain": train_gain,
    "misgan": train_misgan,
}


def train_predictor(
    series: DataMatrix,
    cfg: TrainConfig,
    progress: ProgressFn | None = None,
) -> PredictorModel:
    """Train a one-step-ahead predictor on consecutive row pairs by MSE.

    The last ``predictor_val_fraction`` of the pairs is held out for early
    stopping; the best-validation weights are restored at the end.
    """
    if not series.normalized:
        raise DataError("train_predictor expects normalized data")
    if series.n_samples < 2:
        raise DataError("need at least two rows to form prediction pairs")
    d = series.n_features
    inputs = series.values[:-1]
    targets = series.values[1:]
    n_pairs = inputs.shape[0]
    n_val = int(np.floor(cfg.predictor_val_fraction * n_pairs))
    use_val = n_val >= 1 and n_pairs - n_val >= 1
    n_train = n_pairs - n_val if use_val else n_pairs

    root = NoiseSource(cfg.noise, cfg.seed)
    net = build_mlp(predictor_spec(d), root.child("predictor-init")).set_mode("train")
    net.enable_grad()
    opt = _make_optimizer(cfg, net.params)
    batch_rng = root.child("batching")
    dropout_rng = root.child("dropout")

    x_train = torch.tensor(inputs[:n_train], dtype=torch.float64)
    y_train = torch.tensor(targets[:n_train], dtype=torch.float64)
    if use_val:
        x_val = torch.tensor(inputs[n_train:], dtype=torch.float64)
        y_val = torch.tensor(targets[n_train:], dtype=torch.float64)

    history: list[dict[str, float]] = []
    best_state: list[torch.Tensor] | None = None
    best_val = float("inf")
    best_epoch = 0
    stale = 0

    for epoch in range(cfg.predictor_epochs):
        batch_losses: list[float] = []
        for batch_idx, rows in enumerate(_epoch_batches(n_train, cfg.batch_size, batch_rng)):
            xb = x_train[rows]
            yb = y_train[rows]
            pred = _forward_tensor(net, xb, dropout_rng)
            loss = ((pred - yb) ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
            batch_losses.append(_finite_or_raise(float(loss.detach()), "predictor loss", epoch, batch_idx))
        record = {"train_mse": float(np.mean(batch_losses))}
        if use_val:
            net.set_mode("eval")
            with torch.no_grad():
                val_mse = float(((_forward_tensor(net, x_val, None) - y_val) ** 2).mean())
            net.set_mode("train")
            record["val_mse"] = _finite_or_raise(val_mse, "predictor validation loss", epoch, 0)
            if val_mse < best_val:
                best_val = val_mse
                best_epoch = epoch
                best_state = [p.detach().clone() for p in net.params]
                stale = 0
            else:
                stale += 1
        history.append(record)
        if progress is not None:
            progress(epoch, record)
        if use_val and stale >= cfg.predictor_patience:
            break

    if best_state is not None:
        with torch.no_grad():
            for p, saved in zip(net.params, best_state):
                p.copy_(saved)
    else:
        best_epoch = len(history) - 1
    net.set_mode("eval")
    return PredictorModel(net=net, config=cfg, loss_history=history, best_epoch=best_epoch)


def predict(model: PredictorModel, inputs: DataMatrix) -> DataMatrix:
    """One-step-ahead predictions for each input row (deterministic)."""
    out = forward(model.net, inputs.values)
    return inputs.with_values(out)


# --- persistence -----------------------------------------------------------

def write_loss_history_csv(history: list[dict[str, float]], path: str | Path) -> None:
    lines = ["epoch,loss_name,value"]
    for epoch, record in enumerate(history):
        for name in sorted(record):
            lines.append(f"{epoch},{name},{record[name]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_loss_history_csv(path: str | Path) -> list[dict[str, float]]:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0] != "epoch,loss_name,value":
        raise DataError(f"{path} is not a loss-history CSV")
    history: list[dict[str, float]] = []
    for line in text[1:]:
        epoch_s, name, value_s = line.split(",", 2)
        epoch = int(epoch_s)
        while len(history) <= epoch:
            history.append({})
        history[epoch][name] = float(value_s)
    return history


def save_trained_imputer(trained: TrainedImputer, dir_path: str | Path) -> None:
    """Write a checkpoint directory: networks, config, loss history, diagnostics."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    chash = config_hash(trained.config)
    meta = {
        "method": trained.method,
        "data_dim": trained.imputer.data_dim,
        "config": dataclasses.asdict(trained.config),
        "config_hash": chash,
        "auxiliaries": sorted(trained.auxiliaries),
        "observed_checks": trained.observed_checks,
    }
    (dir_path / "method.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    generator = trained.imputer.g
    if not isinstance(generator, Network):
        raise DataError("only network-backed imputers can be checkpointed")
    save_network(generator, dir_path / "generator.bin", seed=trained.config.seed, config_hash=chash)
    for name, net in trained.auxiliaries.items():
        save_network(net, dir_path / f"{name}.bin", seed=trained.config.seed, config_hash=chash)
    write_loss_history_csv(trained.loss_history, dir_path / "loss_history.csv")
    (dir_path / "update_blocks.json").write_text(
        json.dumps([[int(e), int(c)] for e, c in trained.update_blocks]) + "\n"
    )


def load_trained_imputer(dir_path: str | Path) -> TrainedImputer:
    """Reload a checkpoint directory bit-exactly (networks in eval mode)."""
    dir_path = Path(dir_path)
    meta_path = dir_path / "method.json"
    if not meta_path.exists():
        raise DataError(f"{dir_path} is not a checkpoint directory (no method.json)")
    meta = json.loads(meta_path.read_text())
    cfg = TrainConfig(**meta["config"])
    generator = load_network(dir_path / "generator.bin")
    auxiliaries = {name: load_network(dir_path / f"{name}.bin") for name in meta["auxiliaries"]}
    history = read_loss_history_csv(dir_path / "loss_history.csv")
    blocks_path = dir_path / "update_blocks.json"
    blocks = [(int(e), int(c)) for e, c in json.loads(blocks_path.read_text())] if blocks_path.exists() else []
    return TrainedImputer(
        method=meta["method"],
        imputer=GenerativeImputer(generator, meta["data_dim"]),
        auxiliaries=auxiliaries,
        config=cfg,
        loss_history=history,
        update_blocks=blocks,
        observed_checks=meta.get("observed_checks", 0),
    )

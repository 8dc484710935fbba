"""Feed-forward network construction, evaluation, and serialization.

Networks are small dense/ReLU/dropout/sigmoid stacks described by a list of
:class:`LayerSpec` entries. torch (CPU) provides the tensor math and the
automatic differentiation needed for gradient-penalty training; every random
choice (weight init, dropout masks) is drawn from the package's own
:class:`~ganimpute.data.NoiseSource`, never from torch's global RNG, so builds
and forward passes are reproducible bitwise from a seed.

Parameters serialize to a flat little-endian float64 binary file plus a JSON
sidecar (layer list, seed, config hash) written next to it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data import NoiseSource
from .errors import DataError

_DTYPES = {"float64": torch.float64, "float32": torch.float32}

_LAYER_KINDS = ("dense", "relu", "dropout", "sigmoid")


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a feed-forward stack."""

    kind: str
    in_dim: int | None = None
    out_dim: int | None = None
    drop_prob: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _LAYER_KINDS:
            raise DataError(f"unknown layer kind {self.kind!r}")
        if self.kind == "dense":
            if not (isinstance(self.in_dim, int) and isinstance(self.out_dim, int)):
                raise DataError("dense layers need integer in_dim and out_dim")
            if self.in_dim < 1 or self.out_dim < 1:
                raise DataError("dense dimensions must be positive")
        if self.kind == "dropout":
            if self.drop_prob is None or not 0.0 <= self.drop_prob < 1.0:
                raise DataError("dropout needs drop_prob in [0, 1)")


def dense(in_dim: int, out_dim: int) -> LayerSpec:
    return LayerSpec("dense", in_dim=in_dim, out_dim=out_dim)


def relu() -> LayerSpec:
    return LayerSpec("relu")


def dropout(drop_prob: float) -> LayerSpec:
    return LayerSpec("dropout", drop_prob=drop_prob)


def sigmoid() -> LayerSpec:
    return LayerSpec("sigmoid")


def _validate_stack(layers: tuple[LayerSpec, ...]) -> tuple[int, int]:
    """Check layer compatibility; return (input width, output width)."""
    if not layers:
        raise DataError("network spec is empty")
    if layers[0].kind != "dense":
        raise DataError("the first layer must be dense (it fixes the input width)")
    if not any(spec.kind == "dense" for spec in layers):
        raise DataError("network needs at least one dense layer")
    width = layers[0].in_dim
    assert width is not None
    in_width = width
    for i, spec in enumerate(layers):
        if spec.kind == "dense":
            assert spec.in_dim is not None and spec.out_dim is not None
            if spec.in_dim != width:
                raise DataError(
                    f"layer {i}: dense in_dim {spec.in_dim} does not match "
                    f"incoming width {width}"
                )
            width = spec.out_dim
    return in_width, width


class Network:
    """A built feed-forward network: layer specs plus parameter tensors.

    ``params`` holds, for each dense layer in order, a weight tensor of shape
    (in_dim, out_dim) followed by a bias tensor of shape (out_dim,). ``mode``
    is ``"train"`` (dropout active) or ``"eval"`` (deterministic).
    """

    def __init__(self, layers: tuple[LayerSpec, ...], params: list[torch.Tensor], dtype: str = "float64") -> None:
        self.layers = tuple(layers)
        self.in_dim, self.out_dim = _validate_stack(self.layers)
        if dtype not in _DTYPES:
            raise DataError(f"unknown dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
        self.dtype = dtype
        n_dense = sum(1 for s in self.layers if s.kind == "dense")
        if len(params) != 2 * n_dense:
            raise DataError(
                f"expected {2 * n_dense} parameter tensors for {n_dense} dense "
                f"layers, got {len(params)}"
            )
        torch_dtype = _DTYPES[dtype]
        self.params = [p if p.dtype == torch_dtype else p.to(torch_dtype) for p in params]
        self.mode = "eval"

    @property
    def torch_dtype(self) -> torch.dtype:
        return _DTYPES[self.dtype]

    def set_mode(self, mode: str) -> "Network":
        if mode not in ("train", "eval"):
            raise DataError(f"mode must be 'train' or 'eval', got {mode!r}")
        self.mode = mode
        return self

    def has_dropout(self) -> bool:
        return any(s.kind == "dropout" and s.drop_prob and s.drop_prob > 0.0 for s in self.layers)

    def param_count(self) -> int:
        return sum(p.numel() for p in self.params)

    def enable_grad(self, flag: bool = True) -> "Network":
        for p in self.params:
            p.requires_grad_(flag)
        return self


def build_mlp(layers: list[LayerSpec] | tuple[LayerSpec, ...], rng: NoiseSource, dtype: str = "float64") -> Network:
    """Build a network with He-style uniform fan-in weight init and zero biases.

    Two builds from the same seed are bitwise identical.
    """
    specs = tuple(layers)
    _validate_stack(specs)
    torch_dtype = _DTYPES.get(dtype)
    if torch_dtype is None:
        raise DataError(f"unknown dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
    params: list[torch.Tensor] = []
    for spec in specs:
        if spec.kind != "dense":
            continue
        assert spec.in_dim is not None and spec.out_dim is not None
        limit = float(np.sqrt(6.0 / spec.in_dim))
        w = (2.0 * rng.uniform(spec.in_dim, spec.out_dim) - 1.0) * limit
        params.append(torch.tensor(w, dtype=torch_dtype))
        params.append(torch.zeros(spec.out_dim, dtype=torch_dtype))
    return Network(specs, params, dtype=dtype)


def _forward_tensor(net: Network, x: torch.Tensor, rng: NoiseSource | None) -> torch.Tensor:
    if x.ndim != 2:
        raise DataError(f"network input must be 2-D, got shape {tuple(x.shape)}")
    if x.shape[1] != net.in_dim:
        raise DataError(
            f"network input width {x.shape[1]} does not match expected {net.in_dim}"
        )
    out = x.to(net.torch_dtype)
    p_idx = 0
    for spec in net.layers:
        if spec.kind == "dense":
            w, b = net.params[p_idx], net.params[p_idx + 1]
            p_idx += 2
            out = out @ w + b
        elif spec.kind == "relu":
            out = torch.relu(out)
        elif spec.kind == "sigmoid":
            out = torch.sigmoid(out)
        else:  # dropout
            p = spec.drop_prob or 0.0
            if net.mode == "train" and p > 0.0:
                if rng is None:
                    raise DataError("train-mode forward through dropout needs an rng")
                keep = (rng.uniform(*out.shape) >= p).astype(np.float64) / (1.0 - p)
                out = out * torch.tensor(keep, dtype=net.torch_dtype)
    return out


def forward(net: Network, inputs: np.ndarray | torch.Tensor, rng: NoiseSource | None = None):
    """Run the network on a (batch, in_dim) matrix.

    torch tensors stay tensors (gradients flow if the caller set them up);
    numpy arrays come back as numpy arrays, evaluated without autograd.
    """
    if isinstance(inputs, torch.Tensor):
        return _forward_tensor(net, inputs, rng)
    arr = np.asarray(inputs, dtype=np.float64)
    with torch.no_grad():
        out = _forward_tensor(net, torch.tensor(arr, dtype=net.torch_dtype), rng)
    return out.cpu().numpy().astype(np.float64)


def critic_score(net: Network, y: torch.Tensor) -> torch.Tensor:
    """Per-sample scalar critic score: the network output averaged over width."""
    return _forward_tensor(net, y, None).mean(dim=1)


def param_vector(net: Network) -> np.ndarray:
    """All parameters flattened to one float64 vector (weights then bias, per layer)."""
    with torch.no_grad():
        parts = [p.detach().cpu().to(torch.float64).reshape(-1).numpy() for p in net.params]
    return np.concatenate(parts) if parts else np.zeros(0)


def set_param_vector(net: Network, vec: np.ndarray) -> None:
    """Overwrite all parameters from a flat vector (inverse of :func:`param_vector`)."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.size != net.param_count():
        raise DataError(f"expected {net.param_count()} parameters, got {vec.size}")
    offset = 0
    with torch.no_grad():
        for p in net.params:
            n = p.numel()
            chunk = torch.tensor(vec[offset:offset + n], dtype=net.torch_dtype).reshape(p.shape)
            p.copy_(chunk)
            offset += n


def clone_network(net: Network) -> Network:
    cloned = [p.detach().clone() for p in net.params]
    out = Network(net.layers, cloned, dtype=net.dtype)
    out.mode = net.mode
    return out


def _spec_to_dict(spec: LayerSpec) -> dict:
    out: dict = {"kind": spec.kind}
    if spec.kind == "dense":
        out["in_dim"] = spec.in_dim
        out["out_dim"] = spec.out_dim
    if spec.kind == "dropout":
        out["drop_prob"] = spec.drop_prob
    return out


def _spec_from_dict(d: dict) -> LayerSpec:
    return LayerSpec(
        d["kind"],
        in_dim=d.get("in_dim"),
        out_dim=d.get("out_dim"),
        drop_prob=d.get("drop_prob"),
    )


def save_network(net: Network, path: str | Path, seed: int | None = None, config_hash: str | None = None) -> None:
    """Write parameters as flat little-endian float64 plus a ``<path>.json`` sidecar."""
    path = Path(path)
    flat = param_vector(net).astype("<f8")
    path.write_bytes(flat.tobytes())
    sidecar = {
        "format": "flat-float64-le",
        "dtype": net.dtype,
        "layers": [_spec_to_dict(s) for s in net.layers],
        "param_count": int(flat.size),
        "seed": seed,
        "config_hash": config_hash,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_network(path: str | Path) -> Network:
    """Reload a network saved by :func:`save_network` (bit-exact, eval mode)."""
    path = Path(path)
    sidecar_path = Path(str(path) + ".json")
    if not path.exists() or not sidecar_path.exists():
        raise DataError(f"missing network file or sidecar for {path}")
    sidecar = json.loads(sidecar_path.read_text())
    layers = tuple(_spec_from_dict(d) for d in sidecar["layers"])
    flat = np.frombuffer(path.read_bytes(), dtype="<f8").astype(np.float64)
    if flat.size != sidecar["param_count"]:
        raise DataError(
            f"{path}: expected {sidecar['param_count']} parameters, file holds {flat.size}"
        )
    dtype = sidecar.get("dtype", "float64")
    torch_dtype = _DTYPES[dtype]
    params: list[torch.Tensor] = []
    offset = 0
    for spec in layers:
        if spec.kind != "dense":
            continue
        assert spec.in_dim is not None and spec.out_dim is not None
        n_w = spec.in_dim * spec.out_dim
        w = torch.tensor(flat[offset:offset + n_w].reshape(spec.in_dim, spec.out_dim), dtype=torch_dtype)
        offset += n_w
        b = torch.tensor(flat[offset:offset + spec.out_dim], dtype=torch_dtype)
        offset += spec.out_dim
        params.extend([w, b])
    if offset != flat.size:
        raise DataError(f"{path}: parameter count does not match the layer list")
    return Network(layers, params, dtype=dtype)


# Default architectures. Imputing generators are wide (512) with light dropout;
# critics are narrower (256) with no dropout; the one-step-ahead predictor uses
# 424-wide hidden layers. The critic's full-width output is reduced to a scalar
# per sample by critic_score.

def imputer_generator_spec(d: int, hidden: int = 512, drop_prob: float = 0.05) -> list[LayerSpec]:
    return [
        dense(d, hidden), relu(), dropout(drop_prob),
        dense(hidden, hidden), relu(), dropout(drop_prob),
        dense(hidden, d),
    ]


def critic_spec(d: int, hidden: int = 256) -> list[LayerSpec]:
    return [
        dense(d, hidden), relu(),
        dense(hidden, hidden), relu(),
        dense(hidden, d),
    ]


def gain_discriminator_spec(d: int, hidden: int = 256) -> list[LayerSpec]:
    """Mask predictor: input is hint and data concatenated (width 2d), sigmoid output."""
    return [
        dense(2 * d, hidden), relu(),
        dense(hidden, hidden), relu(),
        dense(hidden, d), sigmoid(),
    ]


def mask_generator_spec(d: int, hidden: int = 256) -> list[LayerSpec]:
    """Noise-to-soft-mask generator, sigmoid output in (0, 1)."""
    return [
        dense(d, hidden), relu(),
        dense(hidden, hidden), relu(),
        dense(hidden, d), sigmoid(),
    ]


def data_generator_spec(d: int, hidden: int = 256) -> list[LayerSpec]:
    return [
        dense(d, hidden), relu(),
        dense(hidden, hidden), relu(),
        dense(hidden, d),
    ]


def predictor_spec(d: int, hidden: int = 424, drop_prob: float = 0.05) -> list[LayerSpec]:
    return [
        dense(d, hidden), relu(), dropout(drop_prob),
        dense(hidden, hidden), relu(), dropout(drop_prob),
        dense(hidden, d),
    ]

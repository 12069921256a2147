"""
Layer primitives for the scenario networks.

Dense and 1-D transposed-convolution layers with relu/tanh/identity heads,
plus the parameter-free reshape/truncate glue the generator needs.

Every layer exposes:
    forward(x)             -> (output, cache)
    backward(cache, grad)  -> (grad_input, {param_name: grad})

`forward`, `backward` and `backprop` chain a list of layers. All arrays are
float64 numpy arrays; layers are plain containers and never keep state
between calls, so forward passes are deterministic functions of parameters
and input.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

DTYPE = np.float64


class Activation(str, Enum):
    """Elementwise activation applied after the affine part of a layer."""
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"


def as_tensor(values: Any) -> np.ndarray:
    """Return `values` as a C-contiguous float64 array."""
    return np.ascontiguousarray(values, dtype=DTYPE)


def activation_forward(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return np.maximum(z, 0.0)
    if kind == Activation.TANH:
        return np.tanh(z)
    return z


def activation_backward(kind: Activation, z: np.ndarray, out: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the pre-activation `z` given the gradient at `out`."""
    if kind == Activation.RELU:
        return grad * (z > 0.0)
    if kind == Activation.TANH:
        return grad * (1.0 - out * out)
    return grad


def glorot_init(
    in_dim: int,
    out_dim: int,
    seed: int,
    shape: Optional[Sequence[int]] = None
) -> np.ndarray:
    """
    Glorot/Xavier uniform initialization.

    Entries are drawn from U[-sqrt(6/(in_dim+out_dim)), +sqrt(6/(in_dim+out_dim))].

    Args:
        in_dim: Fan-in
        out_dim: Fan-out
        seed: RNG seed; equal seeds give bitwise-equal tensors
        shape: Output shape. Defaults to (in_dim, out_dim)

    Returns:
        Initialized float64 array
    """
    if in_dim < 1 or out_dim < 1:
        raise ValueError(f"Glorot dims must be positive, got ({in_dim}, {out_dim})")

    limit = np.sqrt(6.0 / (in_dim + out_dim))
    rng = np.random.default_rng(seed)
    return rng.uniform(-limit, limit, size=tuple(shape or (in_dim, out_dim))).astype(DTYPE)


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Derive `count` independent integer seeds from one base seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


# ==================== Layers ====================

@dataclass
class DenseLayer:
    """Fully connected layer: activation(x @ weights + bias)."""
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY

    kind = "dense"
    param_names = ("weights", "bias")

    def __post_init__(self):
        self.weights = as_tensor(self.weights)
        self.bias = as_tensor(self.bias)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ValueError(
                f"Dense shapes inconsistent: weights {self.weights.shape}, bias {self.bias.shape}"
            )

    @classmethod
    def create(cls, in_dim: int, out_dim: int, activation: Activation, seed: int) -> "DenseLayer":
        return cls(
            weights=glorot_init(in_dim, out_dim, seed),
            bias=np.zeros(out_dim, dtype=DTYPE),
            activation=activation
        )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"Dense layer expects [batch, {self.in_dim}], got {list(x.shape)}")
        z = x @ self.weights + self.bias
        out = activation_forward(self.activation, z)
        return out, (x, z, out)

    def backward(self, cache: tuple, grad: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        x, z, out = cache
        if grad.shape != out.shape:
            raise ValueError(f"Dense gradient shape {list(grad.shape)} != output {list(out.shape)}")
        dz = activation_backward(self.activation, z, out, grad)
        grads = {"weights": x.T @ dz, "bias": dz.sum(axis=0)}
        return dz @ self.weights.T, grads

    def describe(self) -> dict:
        return {"kind": self.kind, "in_dim": self.in_dim, "out_dim": self.out_dim,
                "activation": self.activation.value}


@dataclass
class TConv1dLayer:
    """
    1-D transposed convolution without padding or cropping.

    kernels has shape [in_channels, out_channels, kernel_len]. Input position i
    scatters input[i] * kernel into output positions i*stride .. i*stride+kernel_len-1,
    so L_out = (L_in - 1) * stride + kernel_len.
    """
    kernels: np.ndarray
    bias: np.ndarray
    stride: int = 1
    activation: Activation = Activation.IDENTITY

    kind = "tconv1d"
    param_names = ("kernels", "bias")

    def __post_init__(self):
        self.kernels = as_tensor(self.kernels)
        self.bias = as_tensor(self.bias)
        self.activation = Activation(self.activation)
        if self.stride < 1:
            raise ValueError(f"Stride must be positive, got {self.stride}")
        if self.kernels.ndim != 3 or self.bias.shape != (self.kernels.shape[1],):
            raise ValueError(
                f"TConv1d shapes inconsistent: kernels {self.kernels.shape}, bias {self.bias.shape}"
            )

    @classmethod
    def create(
        cls,
        in_channels: int,
        out_channels: int,
        kernel_len: int,
        stride: int,
        activation: Activation,
        seed: int
    ) -> "TConv1dLayer":
        kernels = glorot_init(
            in_channels * kernel_len,
            out_channels * kernel_len,
            seed,
            shape=(in_channels, out_channels, kernel_len)
        )
        return cls(kernels, np.zeros(out_channels, dtype=DTYPE), stride, activation)

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[1]

    @property
    def kernel_len(self) -> int:
        return self.kernels.shape[2]

    def output_length(self, input_length: int) -> int:
        return (input_length - 1) * self.stride + self.kernel_len

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"TConv1d layer expects [batch, {self.in_channels}, length], got {list(x.shape)}"
            )
        batch, _, length = x.shape
        span = self.stride * (length - 1) + 1

        # contributions[b, o, i, k] = sum_c x[b, c, i] * kernels[c, o, k]
        contributions = np.einsum("bci,cok->boik", x, self.kernels)
        z = np.zeros((batch, self.out_channels, self.output_length(length)), dtype=DTYPE)
        for k in range(self.kernel_len):
            z[:, :, k:k + span:self.stride] += contributions[:, :, :, k]
        z += self.bias[None, :, None]

        out = activation_forward(self.activation, z)
        return out, (x, z, out)

    def backward(self, cache: tuple, grad: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        x, z, out = cache
        if grad.shape != out.shape:
            raise ValueError(f"TConv1d gradient shape {list(grad.shape)} != output {list(out.shape)}")
        dz = activation_backward(self.activation, z, out, grad)

        span = self.stride * (x.shape[2] - 1) + 1
        # gathered[b, o, i, k] = dz[b, o, i*stride + k]
        gathered = np.stack(
            [dz[:, :, k:k + span:self.stride] for k in range(self.kernel_len)],
            axis=-1
        )
        grads = {
            "kernels": np.einsum("bci,boik->cok", x, gathered),
            "bias": dz.sum(axis=(0, 2))
        }
        return np.einsum("cok,boik->bci", self.kernels, gathered), grads

    def describe(self) -> dict:
        return {"kind": self.kind, "in_channels": self.in_channels, "out_channels": self.out_channels,
                "kernel_len": self.kernel_len, "stride": self.stride,
                "activation": self.activation.value}


@dataclass
class Reshape:
    """Reshape [batch, prod(shape)] to [batch, *shape]."""
    shape: tuple[int, ...]

    kind = "reshape"
    param_names = ()

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        if int(np.prod(x.shape[1:])) != int(np.prod(self.shape)):
            raise ValueError(f"Cannot reshape {list(x.shape)} to [batch, {list(self.shape)}]")
        return x.reshape((x.shape[0],) + self.shape), (x.shape,)

    def backward(self, cache: tuple, grad: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        (input_shape,) = cache
        return grad.reshape(input_shape), {}

    def describe(self) -> dict:
        return {"kind": self.kind, "shape": list(self.shape)}


@dataclass
class Truncate:
    """Keep the first `length` positions of [batch, channels, L] and flatten to [batch, channels*length]."""
    length: int

    kind = "truncate"
    param_names = ()

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        if x.ndim != 3 or x.shape[2] < self.length:
            raise ValueError(f"Truncate to {self.length} needs [batch, channels, >= {self.length}], got {list(x.shape)}")
        out = x[:, :, :self.length].reshape(x.shape[0], -1)
        return out, (x.shape,)

    def backward(self, cache: tuple, grad: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        (input_shape,) = cache
        full = np.zeros(input_shape, dtype=DTYPE)
        full[:, :, :self.length] = grad.reshape(input_shape[0], input_shape[1], self.length)
        return full, {}

    def describe(self) -> dict:
        return {"kind": self.kind, "length": self.length}


Layer = Union[DenseLayer, TConv1dLayer, Reshape, Truncate]


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    return layer.forward(as_tensor(x))[0]


def tconv1d_forward(layer: TConv1dLayer, x: np.ndarray) -> np.ndarray:
    return layer.forward(as_tensor(x))[0]


# ==================== Networks ====================

@dataclass
class Gradients:
    """Reverse-mode gradients of a layer list: one dict per layer plus the input gradient."""
    params: list[dict[str, np.ndarray]] = field(default_factory=list)
    input: Optional[np.ndarray] = None


def forward(layers: Sequence[Layer], x: np.ndarray) -> tuple[np.ndarray, list[tuple]]:
    """Run `x` through `layers`, returning the output and per-layer caches."""
    out = as_tensor(x)
    caches = []
    for layer in layers:
        out, cache = layer.forward(out)
        caches.append(cache)
    return out, caches


def backward(layers: Sequence[Layer], caches: list[tuple], grad: np.ndarray) -> Gradients:
    """Propagate `grad` (at the network output) back through cached layers."""
    grads: list[dict[str, np.ndarray]] = [{} for _ in layers]
    for i in range(len(layers) - 1, -1, -1):
        grad, grads[i] = layers[i].backward(caches[i], grad)
    return Gradients(params=grads, input=grad)


def backprop(layers: Sequence[Layer], x: np.ndarray, loss_grad: np.ndarray) -> Gradients:
    """
    Exact reverse-mode gradients of <loss_grad, network(x)>.

    Returns gradients for every parameter and for `x` itself, which lets a
    frozen network pass gradients through to whatever produced its input.
    """
    out, caches = forward(layers, x)
    loss_grad = as_tensor(loss_grad)
    if loss_grad.shape != out.shape:
        raise ValueError(f"Loss gradient shape {list(loss_grad.shape)} != network output {list(out.shape)}")
    return backward(layers, caches, loss_grad)


def parameters(layers: Sequence[Layer], prefix: str = "") -> dict[str, np.ndarray]:
    """Map "prefix.index.name" to each parameter array, in layer order."""
    params = {}
    for i, layer in enumerate(layers):
        for name in layer.param_names:
            key = f"{prefix}.{i}.{name}" if prefix else f"{i}.{name}"
            params[key] = getattr(layer, name)
    return params


def build_layer(descriptor: dict, params: dict[str, np.ndarray]) -> Layer:
    """Rebuild a layer from its `describe()` output and its parameter arrays."""
    kind = descriptor.get("kind")
    if kind == DenseLayer.kind:
        return DenseLayer(params["weights"], params["bias"], descriptor["activation"])
    if kind == TConv1dLayer.kind:
        return TConv1dLayer(params["kernels"], params["bias"], int(descriptor["stride"]),
                            descriptor["activation"])
    if kind == Reshape.kind:
        return Reshape(tuple(descriptor["shape"]))
    if kind == Truncate.kind:
        return Truncate(int(descriptor["length"]))
    raise ValueError(f"Unknown layer kind: {kind}")

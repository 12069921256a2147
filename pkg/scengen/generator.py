"""
Scenario generator trained by moment matching.

The default architecture is noise -> dense 128 (ReLU) -> reshape [32, 4] ->
three 1-D transposed convolutions (32, 16, 1 filters) giving length
4 -> 13 -> 40 -> 81, of which the first 72 values are kept. Shallower
transposed-convolution stacks and dense-only stacks are available for
architecture studies.

Training minimizes the squared MMD between encoder latents of generated
and real batches, plus a weighted reconstruction-consistency term that
keeps generated curves on the auto-encoder's manifold. Gradients flow
through the frozen auto-encoder into the generator only.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .autoencoder import AutoEncoder, mse_grad, mse_loss
from .dataset import SAMPLE_DIM
from .errors import DataError, TrainingDivergence
from .layers import (
    Activation,
    DenseLayer,
    Layer,
    Reshape,
    TConv1dLayer,
    Truncate,
    as_tensor,
    backward,
    forward,
    parameters,
    spawn_seeds,
)
from .optim import Optimizer, UpdateRule

logger = logging.getLogger(__name__)

NOISE_DIM = 100
DENSE_UNITS = 128
RESHAPE = (32, 4)
# (filters, kernel_len, stride, activation) per transposed convolution
TCONV_SCHEDULE = (
    (32, 4, 3, Activation.RELU),
    (16, 4, 3, Activation.RELU),
    (1, 3, 2, Activation.TANH),
)
LENGTH_CHAIN = (4, 13, 40, 81)

# Every transposed-convolution depth ends at length 81
TCONV_SCHEDULES = {
    1: ((1, 21, 20, Activation.TANH),),
    2: ((16, 4, 4, Activation.RELU), (1, 6, 5, Activation.TANH)),
    3: TCONV_SCHEDULE,
}
ARCHITECTURES = ("tconv1", "tconv2", "tconv3", "dense1", "dense2", "dense3")
DEFAULT_ARCHITECTURE = "tconv3"
DEFAULT_CONSISTENCY = 1.0


@dataclass(frozen=True)
class MmdConfig:
    """Kernel bandwidth (nu), the shared batch size N = M and the consistency weight."""
    bandwidth: float
    batch_size: int = 32
    estimator: str = "v-statistic"
    consistency: float = DEFAULT_CONSISTENCY

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"Bandwidth must be positive, got {self.bandwidth}")
        if self.consistency < 0:
            raise ValueError(f"Consistency weight must be non-negative, got {self.consistency}")


def _split_architecture(architecture: str) -> tuple[str, int]:
    if architecture not in ARCHITECTURES:
        raise ValueError(f"Unknown generator architecture '{architecture}' (choose from {', '.join(ARCHITECTURES)})")
    return architecture[:-1], int(architecture[-1])


def _dense(in_dim: int, out_dim: int, activation: Activation) -> dict:
    return {"kind": DenseLayer.kind, "in_dim": in_dim, "out_dim": out_dim, "activation": activation.value}


def blueprint(architecture: str, noise_dim: int) -> list[dict]:
    """Layer descriptors, as `describe()` reports them, of a generator architecture."""
    kind, depth = _split_architecture(architecture)
    if kind == "dense":
        widths = [noise_dim] + [DENSE_UNITS] * depth + [SAMPLE_DIM]
        activations = [Activation.RELU] * depth + [Activation.TANH]
        return [_dense(a, b, act) for a, b, act in zip(widths[:-1], widths[1:], activations)]

    layers = [_dense(noise_dim, DENSE_UNITS, Activation.RELU), {"kind": Reshape.kind, "shape": list(RESHAPE)}]
    in_channels = RESHAPE[0]
    for filters, kernel_len, stride, activation in TCONV_SCHEDULES[depth]:
        layers.append({
            "kind": TConv1dLayer.kind, "in_channels": in_channels, "out_channels": filters,
            "kernel_len": kernel_len, "stride": stride, "activation": activation.value,
        })
        in_channels = filters
    layers.append({"kind": Truncate.kind, "length": SAMPLE_DIM})
    return layers


def _init_layer(descriptor: dict, seed: int) -> Layer:
    kind = descriptor["kind"]
    if kind == DenseLayer.kind:
        return DenseLayer.create(descriptor["in_dim"], descriptor["out_dim"],
                                 Activation(descriptor["activation"]), seed)
    if kind == TConv1dLayer.kind:
        return TConv1dLayer.create(descriptor["in_channels"], descriptor["out_channels"],
                                   descriptor["kernel_len"], descriptor["stride"],
                                   Activation(descriptor["activation"]), seed)
    if kind == Reshape.kind:
        return Reshape(tuple(descriptor["shape"]))
    return Truncate(descriptor["length"])


class ScenarioGenerator:
    """Noise-to-curve network producing [B, 72] normalized scenarios."""

    def __init__(self, layers: Sequence[Layer], noise_dim: int, architecture: str = DEFAULT_ARCHITECTURE):
        self.layers: list[Layer] = list(layers)
        self.noise_dim = int(noise_dim)
        self.architecture = architecture
        self.mmd_config: Optional[MmdConfig] = None
        self._check_structure()

    @classmethod
    def create(
        cls,
        noise_dim: int = NOISE_DIM,
        seed: int = 0,
        architecture: str = DEFAULT_ARCHITECTURE
    ) -> "ScenarioGenerator":
        descriptors = blueprint(architecture, noise_dim)
        trainable = (DenseLayer.kind, TConv1dLayer.kind)
        seeds = iter(spawn_seeds(seed, sum(d["kind"] in trainable for d in descriptors)))
        layers = [_init_layer(d, next(seeds) if d["kind"] in trainable else 0) for d in descriptors]
        return cls(layers, noise_dim, architecture)

    @classmethod
    def from_layers(
        cls,
        layers: Sequence[Layer],
        noise_dim: int,
        architecture: str = DEFAULT_ARCHITECTURE
    ) -> "ScenarioGenerator":
        return cls(layers, noise_dim, architecture)

    def _check_structure(self) -> None:
        expected = blueprint(self.architecture, self.noise_dim)
        actual = [layer.describe() for layer in self.layers]
        if len(actual) != len(expected):
            raise ValueError(
                f"Generator '{self.architecture}' needs {len(expected)} layers, got {len(actual)}"
            )
        for i, (found, wanted) in enumerate(zip(actual, expected)):
            if found != wanted:
                raise ValueError(f"Generator layer {i} is {found}, expected {wanted}")

        if self.architecture == DEFAULT_ARCHITECTURE and self.length_chain() != LENGTH_CHAIN:
            raise ValueError(f"Generator length chain {self.length_chain()} != {LENGTH_CHAIN}")

    @property
    def input_dense(self) -> DenseLayer:
        return self.layers[0]

    @property
    def tconvs(self) -> list[TConv1dLayer]:
        return [layer for layer in self.layers if isinstance(layer, TConv1dLayer)]

    def length_chain(self) -> tuple[int, ...]:
        """Sequence lengths through the transposed convolutions; empty for dense stacks."""
        if not self.tconvs:
            return ()
        lengths = [RESHAPE[1]]
        for layer in self.tconvs:
            lengths.append(layer.output_length(lengths[-1]))
        return tuple(lengths)

    def generate(self, noise: np.ndarray) -> np.ndarray:
        noise = as_tensor(noise)
        if noise.ndim != 2 or noise.shape[1] != self.noise_dim:
            raise ValueError(f"Noise must be [batch, {self.noise_dim}], got {list(noise.shape)}")
        return forward(self.layers, noise)[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return parameters(self.layers, "generator")

    def describe(self) -> dict:
        return {
            "architecture": self.architecture,
            "layers": [layer.describe() for layer in self.layers],
            "noise_dim": self.noise_dim,
        }


def sample_noise(count: int, noise_dim: int, seed: int) -> np.ndarray:
    """i.i.d. standard normal noise, deterministic per seed."""
    if count < 1:
        raise ValueError(f"Noise count must be positive, got {count}")
    return np.random.default_rng(seed).standard_normal((count, noise_dim))


def generate(gen: ScenarioGenerator, noise: np.ndarray) -> np.ndarray:
    return gen.generate(noise)


# ==================== MMD ====================

def gaussian_kernel(x: np.ndarray, y: np.ndarray, bandwidth: float) -> float:
    """k(x, y) = exp(-||x - y||^2 / (2 * bandwidth))."""
    if not bandwidth > 0:
        raise ValueError(f"Bandwidth must be positive, got {bandwidth}")
    diff = as_tensor(x) - as_tensor(y)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * bandwidth)))


def _kernel_matrix(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * bandwidth))


def _check_populations(gen_latents: np.ndarray, real_latents: np.ndarray, bandwidth: float) -> None:
    if not bandwidth > 0:
        raise ValueError(f"Bandwidth must be positive, got {bandwidth}")
    if gen_latents.ndim != 2 or real_latents.ndim != 2 or gen_latents.shape[1] != real_latents.shape[1]:
        raise ValueError(f"Population shapes incompatible: {list(gen_latents.shape)} vs {list(real_latents.shape)}")
    if gen_latents.shape[0] != real_latents.shape[0]:
        raise ValueError(f"MMD needs equal population sizes, got {gen_latents.shape[0]} and {real_latents.shape[0]}")
    if gen_latents.shape[0] < 1:
        raise ValueError("MMD needs non-empty populations")


def mmd2(gen_latents: np.ndarray, real_latents: np.ndarray, bandwidth: float) -> float:
    """
    Biased (V-statistic) squared MMD with a Gaussian kernel.

    Diagonal kernel terms are included, so the estimate is non-negative up
    to rounding; tiny negatives are clamped to 0.
    """
    x, y = as_tensor(gen_latents), as_tensor(real_latents)
    _check_populations(x, y, bandwidth)
    value = (
        _kernel_matrix(x, x, bandwidth).mean()
        + _kernel_matrix(y, y, bandwidth).mean()
        - 2.0 * _kernel_matrix(x, y, bandwidth).mean()
    )
    return max(float(value), 0.0)


def mmd2_grad(gen_latents: np.ndarray, real_latents: np.ndarray, bandwidth: float) -> tuple[float, np.ndarray]:
    """mmd2 and its analytic gradient w.r.t. the generated latents."""
    x, y = as_tensor(gen_latents), as_tensor(real_latents)
    _check_populations(x, y, bandwidth)
    n, m = x.shape[0], y.shape[0]

    k_xx = _kernel_matrix(x, x, bandwidth)
    k_yy = _kernel_matrix(y, y, bandwidth)
    k_xy = _kernel_matrix(x, y, bandwidth)
    value = k_xx.mean() + k_yy.mean() - 2.0 * k_xy.mean()

    # d k(a, b) / d a = -k(a, b) (a - b) / bandwidth
    pull_xx = x * k_xx.sum(axis=1, keepdims=True) - k_xx @ x
    pull_xy = x * k_xy.sum(axis=1, keepdims=True) - k_xy @ y
    grad = (-2.0 / (n * n) * pull_xx + 2.0 / (n * m) * pull_xy) / bandwidth
    return max(float(value), 0.0), grad


def median_bandwidth(real_latents: np.ndarray) -> float:
    """Median of pairwise squared Euclidean distances (median heuristic)."""
    points = as_tensor(real_latents)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError(f"Median heuristic needs at least 2 points, got shape {list(points.shape)}")
    median = float(np.median(pdist(points, "sqeuclidean")))
    if median <= 0.0:
        raise DataError("Median pairwise distance is 0; latents are degenerate")
    return median


def sample_mmd(generated: np.ndarray, real: np.ndarray) -> float:
    """
    Data-space V-statistic MMD^2 between two sample sets of any sizes.

    The bandwidth comes from the median heuristic on `real`, which makes the
    value comparable across models with different encoders.
    """
    x, y = as_tensor(generated), as_tensor(real)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1] or not len(x):
        raise ValueError(f"Population shapes incompatible: {list(x.shape)} vs {list(y.shape)}")
    bandwidth = median_bandwidth(y)
    value = (
        _kernel_matrix(x, x, bandwidth).mean()
        + _kernel_matrix(y, y, bandwidth).mean()
        - 2.0 * _kernel_matrix(x, y, bandwidth).mean()
    )
    return max(float(value), 0.0)


# ==================== Training ====================

@dataclass
class GeneratorStep:
    """Objective value and generator gradients of one mini-batch."""
    loss: float
    mmd2: float
    consistency: float
    grads: list[dict[str, np.ndarray]]


def generator_objective(
    gen: ScenarioGenerator,
    ae: AutoEncoder,
    noise: np.ndarray,
    real_latents: np.ndarray,
    bandwidth: float,
    consistency: float = DEFAULT_CONSISTENCY
) -> GeneratorStep:
    """
    MMD^2(E(G(z)), real_latents) + consistency * MSE(G(z), D(E(G(z)))).

    The second term is the auto-encoder's reconstruction error on the
    generated curves. Gradients are taken w.r.t. generator parameters only.
    """
    fake, gen_caches = forward(gen.layers, noise)
    fake_latents, enc_caches = forward(ae.encoder, fake)
    mmd, latent_grad = mmd2_grad(fake_latents, real_latents, bandwidth)

    fake_grad = np.zeros_like(fake)
    recon_error = 0.0
    if consistency > 0.0:
        recon, dec_caches = forward(ae.decoder, fake_latents)
        recon_error = mse_loss(fake, recon)
        recon_grad = consistency * mse_grad(fake, recon)
        latent_grad = latent_grad + backward(ae.decoder, dec_caches, recon_grad).input
        fake_grad -= recon_grad

    fake_grad += backward(ae.encoder, enc_caches, latent_grad).input
    grads = backward(gen.layers, gen_caches, fake_grad)
    return GeneratorStep(
        loss=mmd + consistency * recon_error,
        mmd2=mmd,
        consistency=recon_error,
        grads=grads.params,
    )


def train_generator(
    gen: ScenarioGenerator,
    frozen_encoder: AutoEncoder,
    train: np.ndarray,
    epochs: int = 500,
    batch_size: int = 32,
    lr: float = 0.001,
    seed: int = 0,
    bandwidth: Optional[float] = None,
    consistency: float = DEFAULT_CONSISTENCY,
    optimizer: UpdateRule = UpdateRule.ADAM,
    log_every: int = 50
) -> tuple[ScenarioGenerator, list[float]]:
    """
    Train the generator by minimizing latent-space MMD^2.

    Per mini-batch of real samples: draw fresh noise of the same size,
    generate, encode both populations with the frozen encoder, compute
    MMD^2 plus the weighted consistency term, backpropagate through the
    auto-encoder into the generator, and update generator parameters only.

    Args:
        gen: Generator to train in place
        frozen_encoder: Trained auto-encoder; frozen on entry, never updated
        train: Normalized training samples, [N, 72]
        bandwidth: Kernel bandwidth; None uses the median heuristic on the
            encoded training set, computed once before the loop
        consistency: Weight of the reconstruction-consistency term; 0 trains
            on latent MMD^2 alone
        optimizer: Update rule for generator parameters

    Returns:
        (gen, per-epoch mean MMD^2)
    """
    if not frozen_encoder.trained:
        raise ValueError("Generator training needs a trained auto-encoder")
    frozen_encoder.freeze()

    data = as_tensor(train)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DataError("Generator training set is empty")
    n = data.shape[0]

    real_latents = frozen_encoder.encode(data)
    if bandwidth is None:
        bandwidth = median_bandwidth(real_latents)
    gen.mmd_config = MmdConfig(bandwidth=float(bandwidth), batch_size=batch_size, consistency=float(consistency))
    logger.info(
        f"Generator training ({gen.architecture}, {UpdateRule(optimizer).value}): {n} samples, "
        f"bandwidth={bandwidth:.6g}, consistency={consistency:g}, batch={batch_size}"
    )

    rng = np.random.default_rng(seed)
    updater = Optimizer(gen.layers, learning_rate=lr, rule=optimizer)
    history: list[float] = []

    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        total_mmd = 0.0
        total_recon = 0.0
        for start in range(0, n, batch_size):
            real = real_latents[order[start:start + batch_size]]
            noise = rng.standard_normal((len(real), gen.noise_dim))

            step = generator_objective(gen, frozen_encoder, noise, real, bandwidth, consistency)
            if not np.isfinite(step.loss):
                raise TrainingDivergence(f"MMD loss diverged at epoch {epoch}")
            updater.step(step.grads)
            total_mmd += step.mmd2 * len(real)
            total_recon += step.consistency * len(real)

        history.append(total_mmd / n)
        if epoch % log_every == 0 or epoch == epochs:
            logger.info(f"Generator epoch {epoch}/{epochs}: mmd2={history[-1]:.6f} consistency={total_recon / n:.6f}")

    return gen, history

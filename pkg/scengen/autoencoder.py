"""
Dimensionality-reduction auto-encoder.

Encoder 72 -> 64 -> 32 -> 16 (ReLU), decoder 16 -> 16 -> 32 -> 64 -> 72
(ReLU, tanh head), trained on reconstruction MSE. Once trained, the encoder
is frozen and defines the latent space the generator's MMD loss lives in.
"""

import logging
from typing import Sequence

import numpy as np

from .dataset import SAMPLE_DIM
from .errors import DataError, TrainingDivergence
from .layers import (
    Activation,
    DenseLayer,
    Layer,
    as_tensor,
    backward,
    forward,
    parameters,
    spawn_seeds,
)
from .optim import Adam

logger = logging.getLogger(__name__)

LATENT_DIM = 16
ENCODER_HIDDEN = (64, 32)
DECODER_HIDDEN = (16, 32, 64)


class AutoEncoder:
    """Encoder/decoder pair of dense layers."""

    def __init__(self, encoder: Sequence[DenseLayer], decoder: Sequence[DenseLayer], trained: bool = False):
        self.encoder = list(encoder)
        self.decoder = list(decoder)
        self.trained = trained
        self.frozen = False

        if self.encoder[-1].out_dim != self.decoder[0].in_dim:
            raise ValueError(
                f"Encoder output {self.encoder[-1].out_dim} != decoder input {self.decoder[0].in_dim}"
            )

    @classmethod
    def create(cls, seed: int = 0, latent_dim: int = LATENT_DIM, input_dim: int = SAMPLE_DIM) -> "AutoEncoder":
        """Fresh Glorot-initialized auto-encoder with the standard widths."""
        enc_widths = [input_dim, *ENCODER_HIDDEN, latent_dim]
        dec_widths = [latent_dim, *DECODER_HIDDEN, input_dim]
        seeds = iter(spawn_seeds(seed, len(enc_widths) + len(dec_widths) - 2))

        encoder = [
            DenseLayer.create(a, b, Activation.RELU, next(seeds))
            for a, b in zip(enc_widths[:-1], enc_widths[1:])
        ]
        decoder = [
            DenseLayer.create(a, b, Activation.RELU, next(seeds))
            for a, b in zip(dec_widths[:-1], dec_widths[1:])
        ]
        decoder[-1].activation = Activation.TANH
        return cls(encoder, decoder)

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].out_dim

    @property
    def layers(self) -> list[Layer]:
        return [*self.encoder, *self.decoder]

    def freeze(self) -> None:
        """Mark the auto-encoder read-only; further training is refused."""
        self.frozen = True

    def encode(self, batch: np.ndarray) -> np.ndarray:
        return forward(self.encoder, as_tensor(batch))[0]

    def decode(self, latents: np.ndarray) -> np.ndarray:
        return forward(self.decoder, as_tensor(latents))[0]

    def reconstruct(self, batch: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(batch))

    def parameters(self) -> dict[str, np.ndarray]:
        return {**parameters(self.encoder, "encoder"), **parameters(self.decoder, "decoder")}

    def describe(self) -> dict:
        return {
            "encoder": [layer.describe() for layer in self.encoder],
            "decoder": [layer.describe() for layer in self.decoder],
            "latent_dim": self.latent_dim,
        }


def encode(ae: AutoEncoder, batch: np.ndarray) -> np.ndarray:
    return ae.encode(batch)


def decode(ae: AutoEncoder, latents: np.ndarray) -> np.ndarray:
    return ae.decode(latents)


def reconstruct(ae: AutoEncoder, batch: np.ndarray) -> np.ndarray:
    return ae.reconstruct(batch)


def mse_loss(x_r: np.ndarray, x_d: np.ndarray) -> float:
    """Mean squared difference over all entries."""
    x_r, x_d = as_tensor(x_r), as_tensor(x_d)
    if x_r.shape != x_d.shape:
        raise ValueError(f"MSE shape mismatch: {list(x_r.shape)} vs {list(x_d.shape)}")
    return float(np.mean((x_r - x_d) ** 2))


def mse_grad(x_r: np.ndarray, x_d: np.ndarray) -> np.ndarray:
    """Gradient of mse_loss w.r.t. the reconstruction x_d."""
    return 2.0 * (x_d - x_r) / x_d.size


def train_autoencoder(
    ae: AutoEncoder,
    train: np.ndarray,
    epochs: int = 500,
    batch_size: int = 32,
    lr: float = 0.001,
    seed: int = 0,
    log_every: int = 50
) -> tuple[AutoEncoder, list[float]]:
    """
    Train the auto-encoder with Adam on shuffled mini-batches.

    Args:
        ae: Model to train in place
        train: Normalized training samples, [N, 72]
        epochs: Passes over the training set
        batch_size: Mini-batch size; the last batch of an epoch may be short
        lr: Adam learning rate
        seed: Shuffling seed
        log_every: Epoch interval for progress logging

    Returns:
        (ae, per-epoch mean reconstruction MSE)
    """
    if ae.frozen:
        raise ValueError("Auto-encoder is frozen; its encoder is in use by a generator")

    data = as_tensor(train)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DataError("Auto-encoder training set is empty")
    n = data.shape[0]
    if n < batch_size:
        logger.warning(f"Training set ({n}) smaller than batch size ({batch_size}); using one short batch")

    rng = np.random.default_rng(seed)
    optimizer = Adam(ae.layers, learning_rate=lr)
    history: list[float] = []

    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch = data[order[start:start + batch_size]]

            latents, enc_caches = forward(ae.encoder, batch)
            recon, dec_caches = forward(ae.decoder, latents)
            loss = mse_loss(batch, recon)
            if not np.isfinite(loss):
                raise TrainingDivergence(f"Auto-encoder loss diverged at epoch {epoch}")

            dec_grads = backward(ae.decoder, dec_caches, mse_grad(batch, recon))
            enc_grads = backward(ae.encoder, enc_caches, dec_grads.input)
            optimizer.step(enc_grads.params + dec_grads.params)
            total += loss * len(batch)

        history.append(total / n)
        if epoch % log_every == 0 or epoch == epochs:
            logger.info(f"AE epoch {epoch}/{epochs}: mse={history[-1]:.6f}")

    ae.trained = True
    return ae, history

from .checkpoint import load_checkpoint, save_checkpoint
from .config import NetSpec, TrainConfig, latent_length
from .estimator import AEGANSynthesizer
from .losses import gradient_norms, gradient_penalty, loss_ae, loss_c, loss_d, loss_g
from .train import (
    SynthModel,
    generate_encoded,
    synthesize,
    train,
    train_autoencoder,
    train_disjoint,
    train_gan,
    train_joint,
)

__all__ = [
    "AEGANSynthesizer",
    "NetSpec",
    "SynthModel",
    "TrainConfig",
    "generate_encoded",
    "gradient_norms",
    "gradient_penalty",
    "latent_length",
    "load_checkpoint",
    "loss_ae",
    "loss_c",
    "loss_d",
    "loss_g",
    "save_checkpoint",
    "synthesize",
    "train",
    "train_autoencoder",
    "train_disjoint",
    "train_gan",
    "train_joint",
]

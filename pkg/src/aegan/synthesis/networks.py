"""Fully-connected networks of the model: Enc, Dec, G, D and the auxiliary classifier C."""

from __future__ import annotations

import torch
from torch import nn

from .config import NetSpec


def _mlp(sizes, slope, batch_norm=False):
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append(nn.Linear(a, b))
        if i < len(sizes) - 2:
            if batch_norm:
                layers.append(nn.BatchNorm1d(b))
            layers.append(nn.LeakyReLU(slope))
    return nn.Sequential(*layers)


def build_encoder(spec: NetSpec) -> nn.Module:
    return _mlp([spec.total_width, *spec.enc_hidden, spec.latent_len], spec.slope)


def build_decoder(spec: NetSpec) -> nn.Module:
    return _mlp([spec.latent_len, *spec.dec_hidden, spec.total_width], spec.slope)


def build_generator(spec: NetSpec) -> nn.Module:
    return _mlp([spec.z_dim, *spec.g_hidden, spec.latent_len], spec.slope, batch_norm=spec.g_batch_norm)


def build_discriminator(spec: NetSpec) -> nn.Module:
    # no normalization in the critic: the gradient penalty is per-sample
    return _mlp([spec.latent_len, *spec.d_hidden, 1], spec.slope)


def build_classifier(spec: NetSpec) -> nn.Module:
    return _mlp([spec.classifier_in, *spec.c_hidden, spec.n_classes], spec.slope)


def build_networks(spec: NetSpec, use_classifier: bool = True) -> dict[str, nn.Module]:
    nets = {
        "encoder": build_encoder(spec),
        "decoder": build_decoder(spec),
        "generator": build_generator(spec),
        "discriminator": build_discriminator(spec),
    }
    if use_classifier:
        nets["classifier"] = build_classifier(spec)
    return nets


def target_mask(spec: NetSpec) -> torch.Tensor:
    """Boolean mask selecting every encoded column except the target span."""
    mask = torch.ones(spec.total_width, dtype=torch.bool)
    mask[spec.target_offset:spec.target_offset + spec.target_width] = False
    return mask


def target_index(rows: torch.Tensor, spec: NetSpec) -> torch.Tensor:
    """Class index of each row's target span (argmax, or nearest label for width 1)."""
    block = rows[:, spec.target_offset:spec.target_offset + spec.target_width]
    if spec.target_width == 1 and spec.n_classes > 1:
        v = block[:, 0].clamp(-1.0, 1.0)
        return torch.round((v + 1.0) / 2.0 * (spec.n_classes - 1)).long()
    return block.argmax(dim=1)

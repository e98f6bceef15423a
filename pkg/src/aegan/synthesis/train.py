"""Autoencoder pre-training, latent WGAN-GP training with the auxiliary classifier, sampling."""

from __future__ import annotations

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..encoding import EncodedMatrix, EncoderState, decode_table
from ..exceptions import TrainingDivergenceError
from ..schema_io import RawTable
from .config import NetSpec, TrainConfig
from .losses import gradient_norms, gradient_penalty, loss_ae, loss_c, loss_d, loss_g
from .networks import (
    build_classifier,
    build_decoder,
    build_discriminator,
    build_encoder,
    build_generator,
    target_index,
    target_mask,
)

log = logging.getLogger(__name__)


@contextmanager
def execution_mode(deterministic: bool):
    """Single-threaded, deterministic kernels for reproducible runs."""
    if not deterministic:
        yield
        return
    threads = torch.get_num_threads()
    was_det = torch.are_deterministic_algorithms_enabled()
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    try:
        yield
    finally:
        torch.set_num_threads(threads)
        torch.use_deterministic_algorithms(was_det)


@dataclass
class SynthModel:
    state: EncoderState
    spec: NetSpec
    config: TrainConfig
    nets: dict[str, nn.Module]
    history: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.state.total_width != self.spec.total_width:
            raise ValueError("encoder state width does not match the network input width")

    def parameters_finite(self) -> bool:
        return all(torch.isfinite(p).all() for net in self.nets.values() for p in net.parameters())


def _check(value: float, what: str, epoch: int):
    if not math.isfinite(value):
        raise TrainingDivergenceError(f"{what} became non-finite at epoch {epoch}")


def _batches(n: int, batch_size: int, gen: torch.Generator):
    perm = torch.randperm(n, generator=gen)
    for i in range(0, n, batch_size):
        yield perm[i:i + batch_size]


def _as_tensor(encoded) -> torch.Tensor:
    values = encoded.values if isinstance(encoded, EncodedMatrix) else encoded
    return torch.as_tensor(np.asarray(values), dtype=torch.float32)


def _ae_epoch(enc, dec, opt, x, batch_size, gen) -> float:
    total = 0.0
    for idx in _batches(len(x), batch_size, gen):
        batch = x[idx]
        loss = loss_ae(batch, dec(enc(batch)))
        opt.zero_grad()
        loss.backward()
        opt.step()
        total += loss.item() * len(idx)
    return total / len(x)


def _fit_autoencoder(enc, dec, x, cfg: TrainConfig, epochs: int, gen, history) -> None:
    opt = torch.optim.Adam([*enc.parameters(), *dec.parameters()], lr=cfg.ae_lr, betas=cfg.betas)
    best, stale = math.inf, 0
    for epoch in range(epochs):
        loss = _ae_epoch(enc, dec, opt, x, cfg.batch_size, gen)
        _check(loss, "autoencoder loss", epoch)
        history.setdefault("ae_loss", []).append(loss)
        if best - loss < cfg.min_delta:
            stale += 1
            if stale >= cfg.patience:
                log.info("autoencoder converged after %d epochs (loss %.3g)", epoch + 1, loss)
                break
        else:
            stale = 0
        best = min(best, loss)


def train_autoencoder(encoded, spec: NetSpec, cfg: TrainConfig, epochs: int | None = None):
    """Train Enc/Dec on reconstruction loss until convergence or ``epochs`` (default ``cfg.ae_epochs``).

    Convergence means ``cfg.patience`` consecutive epochs improving the best
    loss by less than ``cfg.min_delta``. Returns ``(encoder, decoder, history)``.
    """
    x = _as_tensor(encoded)
    history: dict[str, list[float]] = {}
    with execution_mode(cfg.deterministic), torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        enc, dec = build_encoder(spec), build_decoder(spec)
        gen = torch.Generator().manual_seed(cfg.seed)
        _fit_autoencoder(enc, dec, x, cfg, cfg.ae_epochs if epochs is None else epochs, gen, history)
    return enc, dec, history


def _gan_phase(x, nets, spec: NetSpec, cfg: TrainConfig, history, gen, cotrain_epochs: int = 0):
    enc, dec = nets["encoder"], nets["decoder"]
    gnet, dnet = nets["generator"], nets["discriminator"]
    cnet = nets.get("classifier") if cfg.use_classifier else None
    mask = target_mask(spec)
    real_labels = target_index(x, spec)

    opt_d = torch.optim.Adam(dnet.parameters(), lr=cfg.gan_lr, betas=cfg.betas)
    opt_g = torch.optim.Adam(gnet.parameters(), lr=cfg.gan_lr, betas=cfg.betas)
    opt_c = torch.optim.Adam(cnet.parameters(), lr=cfg.gan_lr, betas=cfg.betas) if cnet is not None else None
    opt_ae = (
        torch.optim.Adam([*enc.parameters(), *dec.parameters()], lr=cfg.ae_lr, betas=cfg.betas)
        if cotrain_epochs > 0 else None
    )
    for p in [*enc.parameters(), *dec.parameters()]:
        p.requires_grad_(cotrain_epochs > 0)

    step = 0
    for epoch in range(cfg.gan_epochs):
        cotrain = epoch < cotrain_epochs
        if cotrain_epochs and epoch == cotrain_epochs:
            for p in [*enc.parameters(), *dec.parameters()]:
                p.requires_grad_(False)
        sums = dict.fromkeys(("d_loss", "gp", "wgap", "g_loss", "c_loss", "ae_loss"), 0.0)
        counts = dict.fromkeys(sums, 0)
        for idx in _batches(len(x), cfg.batch_size, gen):
            batch = x[idx]
            bs = len(idx)
            if cotrain:
                loss = loss_ae(batch, dec(enc(batch)))
                opt_ae.zero_grad()
                loss.backward()
                opt_ae.step()
                sums["ae_loss"] += loss.item()
                counts["ae_loss"] += 1
            with torch.no_grad():
                real = enc(batch)
                fake = gnet(torch.randn(bs, spec.z_dim))

            eps = torch.rand(bs, 1)
            norms = gradient_norms(dnet, real, fake, eps)
            d_real, d_fake = dnet(real), dnet(fake)
            ld = loss_d(d_real, d_fake, norms, cfg.gp_lambda)
            opt_d.zero_grad()
            ld.backward()
            opt_d.step()
            sums["d_loss"] += ld.item()
            sums["gp"] += gradient_penalty(norms).item()
            sums["wgap"] += (d_real.mean() - d_fake.mean()).item()
            for k in ("d_loss", "gp", "wgap"):
                counts[k] += 1
            step += 1
            if step % cfg.n_critic:
                continue

            fake = gnet(torch.randn(bs, spec.z_dim))
            rows = dec(fake)
            d_fake = dnet(fake)
            if cnet is not None:
                synth_labels = target_index(rows.detach(), spec)
                lg = loss_g(d_fake, cnet(rows[:, mask]), synth_labels)
            else:
                lg = loss_g(d_fake)
            opt_g.zero_grad()
            lg.backward()
            opt_g.step()
            sums["g_loss"] += lg.item()
            counts["g_loss"] += 1

            if cnet is not None:
                with torch.no_grad():
                    recon = dec(enc(batch))
                lc = loss_c(cnet(recon[:, mask]), real_labels[idx], cnet(rows.detach()[:, mask]), synth_labels)
                opt_c.zero_grad()
                lc.backward()
                opt_c.step()
                sums["c_loss"] += lc.item()
                counts["c_loss"] += 1

        for k, total in sums.items():
            if counts[k]:
                value = total / counts[k]
                _check(value, k, epoch)
                history.setdefault(k, []).append(value)
        if epoch % 50 == 0 or epoch == cfg.gan_epochs - 1:
            log.info(
                "gan epoch %d: d=%.4f g=%s gap=%.4f",
                epoch, history["d_loss"][-1],
                f"{history['g_loss'][-1]:.4f}" if history.get("g_loss") else "n/a",
                history["wgap"][-1],
            )


def train_gan(encoded, encoder, decoder, cfg: TrainConfig, spec: NetSpec | None = None,
              history: dict | None = None, cotrain_epochs: int = 0) -> SynthModel:
    """Train G, D (and C) on the latent codes of a trained autoencoder.

    With ``cotrain_epochs == 0`` (disjoint training) Enc and Dec are frozen;
    otherwise they keep minimizing the reconstruction loss during the first
    ``cotrain_epochs`` GAN epochs.
    """
    state = encoded.state
    spec = spec or NetSpec.from_state(state)
    x = _as_tensor(encoded)
    history = {k: list(v) for k, v in (history or {}).items()}
    with execution_mode(cfg.deterministic), torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed + 1)
        nets = {
            "encoder": encoder,
            "decoder": decoder,
            "generator": build_generator(spec),
            "discriminator": build_discriminator(spec),
        }
        if cfg.use_classifier:
            nets["classifier"] = build_classifier(spec)
        gen = torch.Generator().manual_seed(cfg.seed + 1)
        _gan_phase(x, nets, spec, cfg, history, gen, cotrain_epochs=cotrain_epochs)
    for net in nets.values():
        net.eval()
        for p in net.parameters():
            p.requires_grad_(False)
    return SynthModel(state, spec, cfg, nets, history)


def train_disjoint(encoded: EncodedMatrix, cfg: TrainConfig, spec: NetSpec | None = None) -> SynthModel:
    """Autoencoder to convergence, then GAN and classifier with Enc/Dec frozen."""
    spec = spec or NetSpec.from_state(encoded.state)
    enc, dec, history = train_autoencoder(encoded, spec, cfg)
    return train_gan(encoded, enc, dec, cfg, spec, history)


def train_joint(encoded: EncodedMatrix, cfg: TrainConfig, spec: NetSpec | None = None) -> SynthModel:
    """Pre-train the autoencoder for ``cfg.pretrain_epochs``, then co-train it with the GAN."""
    spec = spec or NetSpec.from_state(encoded.state)
    enc, dec, history = train_autoencoder(encoded, spec, cfg, epochs=cfg.pretrain_epochs)
    return train_gan(encoded, enc, dec, cfg, spec, history, cotrain_epochs=cfg.ae_epochs - cfg.pretrain_epochs)


def train(encoded: EncodedMatrix, cfg: TrainConfig, spec: NetSpec | None = None) -> SynthModel:
    return train_joint(encoded, cfg, spec) if cfg.joint else train_disjoint(encoded, cfg, spec)


def generate_encoded(model: SynthModel, n: int, seed: int, chunk: int = 8192) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    gnet, dec = model.nets["generator"], model.nets["decoder"]
    gnet.eval()
    dec.eval()
    out = []
    with torch.no_grad(), execution_mode(model.config.deterministic), torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        for start in range(0, n, chunk):
            z = torch.randn(min(chunk, n - start), model.spec.z_dim)
            out.append(dec(gnet(z)).double().numpy())
    return np.vstack(out)


def synthesize(model: SynthModel, n: int, seed: int = 0) -> RawTable:
    """Draw ``n`` synthetic rows: noise -> G -> Dec -> inverse encoding."""
    return decode_table(generate_encoded(model, n, seed), model.state)

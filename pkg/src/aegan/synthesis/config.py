from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

from ..encoding import EncoderState
from ..exceptions import ConfigError


def latent_length(total_width: int, lo: int = 32, hi: int = 256) -> int:
    """Latent size grows with the encoded width: clamp(ceil(width / 4), lo, hi)."""
    return int(min(max(math.ceil(total_width / 4), lo), hi))


@dataclass(frozen=True)
class NetSpec:
    total_width: int
    target_offset: int
    target_width: int
    n_classes: int
    latent_len: int
    z_dim: int = 100
    enc_hidden: tuple[int, ...] = ()
    g_hidden: tuple[int, ...] = (256, 256)
    d_hidden: tuple[int, ...] = (256, 256)
    c_hidden: tuple[int, ...] = (256, 256)
    slope: float = 0.2
    g_batch_norm: bool = True

    @property
    def dec_hidden(self) -> tuple[int, ...]:
        return tuple(reversed(self.enc_hidden))

    @property
    def classifier_in(self) -> int:
        return self.total_width - self.target_width

    @classmethod
    def from_state(cls, state: EncoderState, **overrides) -> "NetSpec":
        off, width = state.spans[state.schema.index(state.schema.target)]
        n_classes = len(state.schema[state.schema.target].categories)
        latent = overrides.pop("latent_len", None) or latent_length(state.total_width)
        enc_hidden = overrides.pop("enc_hidden", None) or (round(2 * latent), round(1.5 * latent))
        return cls(state.total_width, off, width, n_classes, latent, enc_hidden=tuple(enc_hidden), **overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("enc_hidden", "g_hidden", "d_hidden", "c_hidden"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d) -> "NetSpec":
        d = dict(d)
        for k in ("enc_hidden", "g_hidden", "d_hidden", "c_hidden"):
            d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for autoencoder and GAN training.

    ``gan_lr``/``betas``/``n_critic``/``gp_lambda`` follow the usual WGAN-GP
    settings. In joint mode the autoencoder trains alone for
    ``pretrain_epochs`` and keeps updating during the first
    ``ae_epochs - pretrain_epochs`` GAN epochs.
    """

    ae_epochs: int = 300
    gan_epochs: int = 300
    batch_size: int = 256
    ae_lr: float = 1e-3
    gan_lr: float = 1e-4
    betas: tuple[float, float] = (0.5, 0.9)
    n_critic: int = 5
    gp_lambda: float = 10.0
    patience: int = 20
    min_delta: float = 1e-5
    use_classifier: bool = True
    joint: bool = False
    pretrain_epochs: int = 0
    deterministic: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(self.betas))
        problems = []
        for name in ("ae_epochs", "gan_epochs", "batch_size", "n_critic", "patience"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        for name in ("ae_lr", "gan_lr"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if self.gp_lambda < 0:
            problems.append("gp_lambda must be >= 0")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            problems.append("betas must be two numbers in [0, 1)")
        if not 0 <= self.pretrain_epochs <= self.ae_epochs:
            problems.append("pretrain_epochs must lie in [0, ae_epochs]")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(d["betas"])
        return d

    @classmethod
    def from_dict(cls, d) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def replace(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

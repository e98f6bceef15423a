from __future__ import annotations

import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..encoding import DEFAULT_MAX_MODES, encode_table, fit_encoder
from ..exceptions import SchemaError
from ..schema_io import RawTable
from .config import NetSpec, TrainConfig
from .train import synthesize, train


class AEGANSynthesizer(BaseEstimator):
    """Autoencoder + latent WGAN-GP synthesizer with an auxiliary classifier.

    Parameters mirror :class:`TrainConfig` plus the encoding options, so the
    estimator clones and grid-searches like any scikit-learn object::

        synth = AEGANSynthesizer(schema, gan_epochs=300).fit(df)
        fake = synth.sample(1000, seed=1)

    ``order`` optionally permutes the columns before encoding; samples are
    always returned in the schema's column order.
    """

    def __init__(self, schema=None, encoding="full", max_modes=DEFAULT_MAX_MODES, order=None,
                 ae_epochs=300, gan_epochs=300, batch_size=256, ae_lr=1e-3, gan_lr=1e-4,
                 betas=(0.5, 0.9), n_critic=5, gp_lambda=10.0, patience=20,
                 use_classifier=True, joint=False, pretrain_epochs=0, deterministic=True,
                 net_overrides=None, seed=0):
        self.schema = schema
        self.encoding = encoding
        self.max_modes = max_modes
        self.order = order
        self.ae_epochs = ae_epochs
        self.gan_epochs = gan_epochs
        self.batch_size = batch_size
        self.ae_lr = ae_lr
        self.gan_lr = gan_lr
        self.betas = betas
        self.n_critic = n_critic
        self.gp_lambda = gp_lambda
        self.patience = patience
        self.use_classifier = use_classifier
        self.joint = joint
        self.pretrain_epochs = pretrain_epochs
        self.deterministic = deterministic
        self.net_overrides = net_overrides
        self.seed = seed

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            ae_epochs=self.ae_epochs, gan_epochs=self.gan_epochs, batch_size=self.batch_size,
            ae_lr=self.ae_lr, gan_lr=self.gan_lr, betas=tuple(self.betas), n_critic=self.n_critic,
            gp_lambda=self.gp_lambda, patience=self.patience, use_classifier=self.use_classifier,
            joint=self.joint, pretrain_epochs=self.pretrain_epochs, deterministic=self.deterministic,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        if isinstance(X, RawTable):
            table = X
        elif self.schema is None:
            raise SchemaError("a schema is required to fit on a DataFrame")
        else:
            table = RawTable(self.schema, pd.DataFrame(X))
        self.schema_ = table.schema
        if self.order is not None:
            table = table.reorder(list(self.order))
        self.state_ = fit_encoder(table, self.encoding, self.max_modes, self.seed)
        spec = NetSpec.from_state(self.state_, **(self.net_overrides or {}))
        self.model_ = train(encode_table(table, self.state_), self.train_config(), spec)
        self.history_ = self.model_.history
        self.n_features_in_ = len(self.schema_)
        return self

    def sample_table(self, n, seed=0) -> RawTable:
        check_is_fitted(self, "model_")
        return synthesize(self.model_, n, seed).reorder(self.schema_.names)

    def sample(self, n, seed=0) -> pd.DataFrame:
        return self.sample_table(n, seed).frame

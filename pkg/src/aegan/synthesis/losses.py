"""Training losses.

* autoencoder: mean over the batch of ``||x - x_rec||^2``
* critic: ``E[D(G(z))] - E[D(x)] + lambda * E[(||grad D(x_hat)|| - 1)^2]``
* generator: ``-E[D(G(z))]`` plus the classifier cross-entropy on synthetic rows
* classifier: cross-entropy on reconstructed real rows plus on synthetic rows
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def _t(x):
    return x if isinstance(x, torch.Tensor) else torch.as_tensor(x, dtype=torch.float64)


def _nonempty(*xs):
    for x in xs:
        if x.shape[0] == 0:
            raise ValueError("loss on an empty batch")


def loss_ae(batch_in, batch_out) -> torch.Tensor:
    batch_in, batch_out = _t(batch_in), _t(batch_out)
    if batch_in.shape != batch_out.shape:
        raise ValueError(f"shape mismatch: {tuple(batch_in.shape)} vs {tuple(batch_out.shape)}")
    return ((batch_out - batch_in) ** 2).sum(dim=1).mean()


def gradient_norms(critic, real, fake, eps=None) -> torch.Tensor:
    """Per-sample ``||grad D(x_hat)||`` on interpolates ``eps * real + (1 - eps) * fake``.

    The graph is kept so the penalty can be differentiated w.r.t. the critic.
    """
    if eps is None:
        eps = torch.rand(real.shape[0], 1, dtype=real.dtype)
    x_hat = (eps * real + (1.0 - eps) * fake).detach().requires_grad_(True)
    out = critic(x_hat)
    (grad,) = torch.autograd.grad(out.sum(), x_hat, create_graph=True)
    # the small offset keeps sqrt differentiable when a gradient vanishes
    return torch.sqrt((grad * grad).sum(dim=1) + 1e-12)


def gradient_penalty(grad_norms) -> torch.Tensor:
    return ((_t(grad_norms) - 1.0) ** 2).mean()


def loss_d(d_real, d_fake, grad_norms, gp_lambda: float) -> torch.Tensor:
    d_real, d_fake, grad_norms = _t(d_real), _t(d_fake), _t(grad_norms)
    _nonempty(d_real, d_fake)
    if gp_lambda < 0:
        raise ValueError("gp_lambda must be >= 0")
    if not torch.isfinite(grad_norms).all():
        raise ValueError("non-finite gradient norm")
    return d_fake.mean() - d_real.mean() + gp_lambda * gradient_penalty(grad_norms)


def cross_entropy(logits, targets) -> torch.Tensor:
    logits = _t(logits)
    targets = torch.as_tensor(targets, dtype=torch.long)
    _nonempty(logits)
    return F.cross_entropy(logits, targets)


def loss_g(d_fake, class_logits=None, class_targets=None) -> torch.Tensor:
    d_fake = _t(d_fake)
    _nonempty(d_fake)
    loss = -d_fake.mean()
    if class_logits is not None:
        loss = loss + cross_entropy(class_logits, class_targets)
    return loss


def loss_c(real_logits, real_targets, synth_logits, synth_targets) -> torch.Tensor:
    return cross_entropy(real_logits, real_targets) + cross_entropy(synth_logits, synth_targets)

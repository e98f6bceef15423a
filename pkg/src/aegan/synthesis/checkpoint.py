"""Checkpoint directories.

Layout::

    <dir>/meta.json          net spec, training config, encoder state, history
    <dir>/<network>.bin      one tensor blob per network

A blob is little-endian throughout::

    magic   4 bytes  b"AEGT"
    version uint32   = 1
    count   uint32   number of tensors
    then per tensor:
      name_len uint32, name (utf-8, name_len bytes)
      ndim     uint32, dims (ndim x uint32)
      payload  float32 x prod(dims), row-major

Integer buffers (batch-norm ``num_batches_tracked``) are stored as float32 and
cast back on load.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np
import torch

from ..encoding import EncoderState
from .config import NetSpec, TrainConfig
from .networks import build_classifier, build_decoder, build_discriminator, build_encoder, build_generator
from .train import SynthModel

MAGIC = b"AEGT"
BLOB_VERSION = 1
FORMAT_VERSION = 1

_BUILDERS = {
    "encoder": build_encoder,
    "decoder": build_decoder,
    "generator": build_generator,
    "discriminator": build_discriminator,
    "classifier": build_classifier,
}


def write_blob(tensors: dict[str, torch.Tensor], path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", BLOB_VERSION, len(tensors)))
        for name, t in tensors.items():
            arr = np.ascontiguousarray(t.detach().cpu().numpy(), dtype="<f4")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def read_blob(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a tensor blob")
    version, count = struct.unpack_from("<II", data, 4)
    if version != BLOB_VERSION:
        raise ValueError(f"{path}: unsupported blob version {version}")
    pos = 12
    out = {}
    for _ in range(count):
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos:pos + n].decode("utf-8")
        pos += n
        (ndim,) = struct.unpack_from("<I", data, pos)
        pos += 4
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        out[name] = np.frombuffer(data, dtype="<f4", count=size, offset=pos).reshape(shape).copy()
        pos += 4 * size
    return out


def save_checkpoint(model: SynthModel, path, extra: dict | None = None) -> None:
    os.makedirs(path, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "net_spec": model.spec.to_dict(),
        "config": model.config.to_dict(),
        "encoder_state": model.state.to_dict(),
        "history": model.history,
        "networks": sorted(model.nets),
        "extra": extra or {},
    }
    with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    for name, net in model.nets.items():
        write_blob(net.state_dict(), os.path.join(path, f"{name}.bin"))


def load_checkpoint(path) -> tuple[SynthModel, dict]:
    """Return the stored model (in eval mode) and the ``extra`` metadata."""
    with open(os.path.join(path, "meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint format {meta.get('format_version')}")
    spec = NetSpec.from_dict(meta["net_spec"])
    nets = {}
    for name in meta["networks"]:
        net = _BUILDERS[name](spec)
        blob = read_blob(os.path.join(path, f"{name}.bin"))
        reference = net.state_dict()
        state = {k: torch.from_numpy(blob[k]).to(reference[k].dtype) for k in reference}
        net.load_state_dict(state)
        net.eval()
        for p in net.parameters():
            p.requires_grad_(False)
        nets[name] = net
    model = SynthModel(
        EncoderState.from_dict(meta["encoder_state"]),
        spec,
        TrainConfig.from_dict(meta["config"]),
        nets,
        meta["history"],
    )
    return model, meta["extra"]

"""Exact checkpointing of critics: parameters, target copy, and optimizer
moments in one versioned .npz blob.  Arrays round-trip bit-for-bit."""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .critics import MlpCritic, TransformerCritic
from .mlp import MlpArch
from .transformer import TransformerArch

FORMAT_VERSION = 1

_CRITICS = {"MlpCritic": (MlpCritic, MlpArch), "TransformerCritic": (TransformerCritic, TransformerArch)}


def save_checkpoint(path, critic) -> None:
    meta = {
        "version": FORMAT_VERSION,
        "critic": type(critic).__name__,
        "arch": dataclasses.asdict(critic.arch),
        "adam": {
            "lr": critic.adam.lr,
            "beta1": critic.adam.beta1,
            "beta2": critic.adam.beta2,
            "eps": critic.adam.eps,
            "step": critic.adam.step,
        },
    }
    arrays = {"__meta__": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for key, p in critic.params.items():
        arrays[f"p__{key}"] = p
    for key, p in critic.target.items():
        arrays[f"t__{key}"] = p
    for key, p in critic.adam.m.items():
        arrays[f"m__{key}"] = p
    for key, p in critic.adam.v.items():
        arrays[f"v__{key}"] = p
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    with np.load(path) as blob:
        meta = json.loads(blob["__meta__"].tobytes().decode())
        if meta["version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        cls, arch_cls = _CRITICS[meta["critic"]]
        arch_kwargs = meta["arch"]
        for key, val in list(arch_kwargs.items()):
            if isinstance(val, list):
                arch_kwargs[key] = tuple(val)
        critic = cls(arch_cls(**arch_kwargs), seed=0, lr=meta["adam"]["lr"])
        critic.adam.beta1 = meta["adam"]["beta1"]
        critic.adam.beta2 = meta["adam"]["beta2"]
        critic.adam.eps = meta["adam"]["eps"]
        critic.adam.step = meta["adam"]["step"]
        for key in critic.params:
            critic.params[key] = blob[f"p__{key}"].copy()
            critic.target[key] = blob[f"t__{key}"].copy()
            critic.adam.m[key] = blob[f"m__{key}"].copy()
            critic.adam.v[key] = blob[f"v__{key}"].copy()
    return critic

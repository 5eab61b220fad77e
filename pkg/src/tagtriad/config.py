"""Run configuration: profile defaults, a flat ``key = value`` file, TAGTRIAD_ env vars, then flags.

Keys are dotted (``lstm.hidden_dim``). The environment variable for a key is
``TAGTRIAD_`` plus the key upper-cased with dots turned into double
underscores, e.g. ``TAGTRIAD_LSTM__HIDDEN_DIM=128``.
"""

from __future__ import annotations

import os
from pathlib import Path

PIPELINES = ("doc2vec_mnlr", "lstm", "bert")
PROFILES = ("desk", "paper")
ENV_PREFIX = "TAGTRIAD_"


class ConfigError(ValueError):
    pass


_DESK = {
    "pipeline": "lstm",
    "profile": "desk",
    "seed": 0,
    "out": "runs/latest",
    "data": "",
    "train": "",
    "test": "",
    "class_count": 10,
    "test_fraction": 0.3,
    "valid_fraction": 0.1,
    # synthetic corpus used when no dataset path is given
    "synth.size": 3000,
    "synth.overlap": 0.4,
    "synth.noise": 0.05,
    "synth.seed": 42,
    "doc2vec.dim": 100,
    "doc2vec.window": 5,
    "doc2vec.negative": 5,
    "doc2vec.epochs": 40,
    "doc2vec.lr": 0.025,
    "doc2vec.min_lr": 0.0001,
    "doc2vec.mode": "pv_dbow",
    "doc2vec.infer_steps": 50,
    "doc2vec.stopwords": True,
    "mnlr.lr": 0.5,
    "mnlr.l2": 0.0001,
    "mnlr.epochs": 300,
    "mnlr.batch_size": 64,
    "lstm.embed_dim": 100,
    "lstm.hidden_dim": 128,
    "lstm.dropout": 0.5,
    "lstm.max_len": 32,
    "lstm.epochs": 10,
    "lstm.batch_size": 32,
    "lstm.lr": 0.001,
    "bert.layers": 4,
    "bert.d_model": 128,
    "bert.heads": 4,
    "bert.d_ff": 512,
    "bert.max_positions": 64,
    "bert.max_len": 32,
    "bert.dropout": 0.1,
    "bert.mask_rate": 0.15,
    "bert.batch_size": 32,
    "bert.pretrain_epochs": 6,
    "bert.pretrain_lr": 0.001,
    "bert.warmup_frac": 0.05,
    "bert.pretrain_size": 10000,
    "bert.pretrain_seed": 1042,
    "bert.pretrain_corpus": "",
    "bert.pretrained": "",
    "bert.finetune_epochs": 3,
    "bert.finetune_lr": 0.0005,
}

_PAPER = dict(_DESK, **{
    "profile": "paper",
    "doc2vec.epochs": 20,
    "lstm.embed_dim": 100,
    "lstm.hidden_dim": 1000,
    "lstm.max_len": 250,
    "bert.max_positions": 256,
    "bert.max_len": 250,
    "bert.finetune_lr": 0.00005,
})

DEFAULTS = {"desk": _DESK, "paper": _PAPER}


def _coerce(key: str, raw, like):
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(like, bool):
            if isinstance(raw, bool):
                return raw
            low = str(raw).lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {type(like).__name__}") from None
    return str(raw)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source} line {n}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            out[name[len(ENV_PREFIX):].lower().replace("__", ".")] = value
    return out


def resolve(profile: str = "desk", file: str | Path | None = None, flags: dict | None = None,
            environ=None) -> dict:
    """Merge defaults < file < environment < flags; unknown keys raise ConfigError."""
    layers = []
    if file:
        path = Path(file)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        layers.append((str(path), parse_config_text(path.read_text(encoding="utf-8"), str(path))))
    layers.append(("environment", env_overrides(environ)))
    layers.append(("flags", {k: v for k, v in (flags or {}).items() if v is not None}))
    # the profile itself may come from any layer; the last one wins
    for _, layer in layers:
        profile = str(layer.get("profile", profile))
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose one of {', '.join(PROFILES)}")
    base = DEFAULTS[profile]
    cfg = dict(base)
    for source, layer in layers:
        for key, raw in layer.items():
            if key not in base:
                raise ConfigError(f"unknown config key {key!r} (from {source})")
            cfg[key] = _coerce(key, raw, base[key])
    if cfg["pipeline"] not in PIPELINES:
        raise ConfigError(f"unknown pipeline {cfg['pipeline']!r}; choose one of {', '.join(PIPELINES)}")
    return cfg


def section(cfg: dict, prefix: str) -> dict:
    """Keys under ``prefix.`` with the prefix stripped."""
    p = prefix + "."
    return {k[len(p):]: v for k, v in cfg.items() if k.startswith(p)}


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in sorted(cfg.items()))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def write_config(cfg: dict, out_dir) -> Path:
    path = Path(out_dir) / "config.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(cfg), encoding="utf-8")
    return path

"""Plain-text experiment configs: ``key = value`` lines under [model],
[data], [train] sections, '#' comments, and no silent typo tolerance."""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .algebra import BUILTIN_NAMES, builtin
from .layers import HConv2DLayer, HFCLayer
from .phlayers import PHCLayer, PHMLayer
from . import training as tr

SECTIONS = ("model", "data", "train")

ALLOWED_KEYS = {
    "model": {"kind", "algebra", "n", "hidden", "channels", "classes", "activation"},
    "data": {"dataset", "samples_per_class", "size", "count", "steps", "dt",
             "sample_every", "window", "offsets"},
    "train": {"seed", "epochs", "batch_size", "lr", "optimizer", "beta1", "beta2",
              "eps", "task", "early_stop_train_loss", "num_seeds"},
}


def parse_config(text: str) -> dict:
    """Parse to {section: {key: raw string value}}, validating section
    and key names."""
    out: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ALLOWED_KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if key in out[section]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[section][key] = value
    return out


def serialize_config(cfg: dict) -> str:
    lines = []
    for section in SECTIONS:
        if section not in cfg:
            continue
        lines.append(f"[{section}]")
        for key, value in cfg[section].items():
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _get(cfg, section, key, default=None, cast=str):
    value = cfg.get(section, {}).get(key)
    if value is None:
        if default is None:
            raise ConfigError(f"missing required key {key!r} in [{section}]")
        return default
    try:
        return cast(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r} in [{section}]: {value!r}") from exc


def _int_list(value: str):
    return [int(v) for v in value.split(",") if v.strip()]


def _float_list(value: str):
    return [float(v) for v in value.split(",") if v.strip()]


def train_config_from(cfg: dict, seed_override=None) -> tr.TrainConfig:
    seed = seed_override if seed_override is not None else _get(cfg, "train", "seed", 0, int)
    early = cfg.get("train", {}).get("early_stop_train_loss")
    return tr.TrainConfig(
        seed=seed,
        epochs=_get(cfg, "train", "epochs", 10, int),
        batch_size=_get(cfg, "train", "batch_size", 64, int),
        lr=_get(cfg, "train", "lr", 1e-3, float),
        optimizer=_get(cfg, "train", "optimizer", "adam"),
        beta1=_get(cfg, "train", "beta1", 0.9, float),
        beta2=_get(cfg, "train", "beta2", 0.999, float),
        eps=_get(cfg, "train", "eps", 1e-8, float),
        task=_get(cfg, "train", "task", "regression"),
        early_stop_train_loss=float(early) if early is not None else None,
    )


def dataset_from(cfg: dict) -> tr.Dataset:
    kind = _get(cfg, "data", "dataset")
    if kind == "blobs":
        return tr.make_rgb_blobs(
            _get(cfg, "train", "seed", 0, int),
            samples_per_class=_get(cfg, "data", "samples_per_class", 600, int),
            size=_get(cfg, "data", "size", 16, int),
        )
    if kind == "lorenz":
        ds = tr.lorenz_trajectories(
            _get(cfg, "train", "seed", 0, int),
            count=_get(cfg, "data", "count", 12, int),
            steps=_get(cfg, "data", "steps", 1600, int),
            dt=_get(cfg, "data", "dt", 0.01, float),
            sample_every=_get(cfg, "data", "sample_every", 10, int),
            window=_get(cfg, "data", "window", 8, int),
        )
        # flat supervised view for generic training
        flat = ds.inputs.reshape(len(ds.inputs), -1)
        return tr.Dataset(flat, ds.targets, ds.train_idx, ds.test_idx)
    raise ConfigError(f"unknown dataset {kind!r}")


def model_from(cfg: dict, feature_dim=None, target_dim=None) -> tr.Network:
    kind = _get(cfg, "model", "kind")
    algebra_name = _get(cfg, "model", "algebra", "real")
    seed = _get(cfg, "train", "seed", 0, int)
    rng = np.random.Generator(np.random.PCG64(seed))
    activation = _get(cfg, "model", "activation", "relu")
    if kind == "convnet":
        channels = _get(cfg, "model", "channels", 24, int)
        classes = _get(cfg, "model", "classes", 4, int)
        if algebra_name == "phm":
            n = _get(cfg, "model", "n", 3, int)
            conv = lambda ci, co: PHCLayer(n, ci, co, 3, padding=1, activation=activation, rng=rng)
        elif algebra_name in BUILTIN_NAMES:
            a = builtin(algebra_name)
            conv = lambda ci, co: HConv2DLayer(a, ci, co, 3, padding=1, activation=activation, rng=rng)
        else:
            raise ConfigError(f"unknown algebra {algebra_name!r}")
        return tr.Network([
            conv(3, channels), tr.AvgPool(2),
            conv(channels, channels), tr.AvgPool(2),
            conv(channels, channels), tr.GlobalAvgPool(),
            HFCLayer(builtin("real"), channels, classes, activation="none", rng=rng),
        ])
    if kind == "mlp":
        if feature_dim is None or target_dim is None:
            raise ConfigError("mlp models need a dataset to size input/output")
        hidden = _int_list(_get(cfg, "model", "hidden", "32"))
        dims = [feature_dim] + hidden
        layers = []
        for di, do in zip(dims[:-1], dims[1:]):
            if algebra_name == "phm":
                n = _get(cfg, "model", "n", 2, int)
                layers.append(PHMLayer(n, di, do, activation=activation, rng=rng))
            elif algebra_name in BUILTIN_NAMES:
                layers.append(HFCLayer(builtin(algebra_name), di, do,
                                       activation=activation, rng=rng))
            else:
                raise ConfigError(f"unknown algebra {algebra_name!r}")
        # real readout so the target width need not divide n
        layers.append(HFCLayer(builtin("real"), dims[-1], target_dim,
                               activation="none", rng=rng))
        return tr.Network(layers)
    raise ConfigError(f"unknown model kind {kind!r}")

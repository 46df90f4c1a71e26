"""Optimizers, losses, dataset generators, and the training loop.

Everything is seeded through explicit numpy Generators: the same config
and seed reproduce the same trajectory bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as G
from . import tensor as T
from .algebra import builtin
from .errors import ShapeError
from .layers import HConv2DLayer, HFCLayer, Layer
from .phlayers import PHCLayer, PHMLayer

LORENZ_SIGMA, LORENZ_RHO, LORENZ_BETA = 10.0, 28.0, 8.0 / 3.0


# -----------------------------------------------------------------------------
# configs, datasets, metrics


@dataclass
class TrainConfig:
    seed: int = 0
    epochs: int = 10
    batch_size: int = 64
    lr: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    task: str = "regression"  # or "classification"
    early_stop_train_loss: float | None = None


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        self.train_idx = np.asarray(self.train_idx, dtype=np.intp)
        self.test_idx = np.asarray(self.test_idx, dtype=np.intp)
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise ValueError("train/test splits overlap")

    @property
    def train_inputs(self):
        return self.inputs[self.train_idx]

    @property
    def train_targets(self):
        return self.targets[self.train_idx]

    @property
    def test_inputs(self):
        return self.inputs[self.test_idx]

    @property
    def test_targets(self):
        return self.targets[self.test_idx]


@dataclass
class Metrics:
    losses: list = field(default_factory=list)
    scores: list = field(default_factory=list)  # test accuracy or test MSE per epoch
    free_params: int = 0
    dense_params: int = 0


# -----------------------------------------------------------------------------
# optimizers


def sgd_step(params, lr):
    for p in params:
        if p.grad is not None:
            p.data -= lr * p.grad


def adam_step(params, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; ``state`` is created on first use."""
    if not state:
        state["t"] = 0
        state["m"] = [np.zeros_like(p.data) for p in params]
        state["v"] = [np.zeros_like(p.data) for p in params]
    state["t"] += 1
    t = state["t"]
    for i, p in enumerate(params):
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        state["m"][i] = beta1 * state["m"][i] + (1 - beta1) * g
        state["v"][i] = beta2 * state["v"][i] + (1 - beta2) * g * g
        mhat = state["m"][i] / (1 - beta1**t)
        vhat = state["v"][i] / (1 - beta2**t)
        p.data -= lr * mhat / (np.sqrt(vhat) + eps)
    return state


def zero_grads(params):
    for p in params:
        p.grad = None


# -----------------------------------------------------------------------------
# losses


def mse(pred: T.Tensor, target) -> T.Tensor:
    tgt = target if isinstance(target, T.Tensor) else T.Tensor(target)
    if pred.data.shape != tgt.data.shape:
        raise ShapeError(f"mse: shapes {pred.data.shape} and {tgt.data.shape}")
    diff = T.add(pred, T.neg(tgt))
    return T.mean(T.mul(diff, diff))


def cross_entropy(logits: T.Tensor, labels) -> T.Tensor:
    """Mean negative log-likelihood from a stable log-softmax."""
    labels = np.asarray(labels)
    b, c = logits.data.shape
    if labels.shape != (b,):
        raise ShapeError(f"cross_entropy: {b} logit rows but labels {labels.shape}")
    shift = np.broadcast_to(logits.data.max(axis=1, keepdims=True), (b, c)).copy()
    z = T.add(logits, T.Tensor(-shift))
    lse = T.log(T.sum_(T.exp(z), axis=1))
    onehot = np.zeros((b, c))
    onehot[np.arange(b), labels] = 1.0
    picked = T.sum_(T.mul(z, T.Tensor(onehot)))
    return T.add(T.mean(lse), T.scale(picked, -1.0 / b))


# -----------------------------------------------------------------------------
# dataset generators


def make_rgb_blobs(seed, classes=4, samples_per_class=600, size=16,
                   noise=0.3, period=4, train_fraction=5 / 6):
    """Synthetic 3-channel texture classification.

    Class c puts square-wave stripes (random phase, random amplitude)
    into one channel with one orientation: (channel, orientation) =
    (c % 2, c // 2).  Random phases make orientation invisible to any
    linear pixel model, while channel means still separate the channel
    pairs, so a linear probe lands near 50%.
    """
    if classes != 4:
        raise ValueError("the stripe construction defines exactly 4 classes")
    rng = np.random.Generator(np.random.PCG64(seed))
    n = classes * samples_per_class
    images = rng.normal(0.0, noise, size=(n, 3, size, size))
    labels = np.repeat(np.arange(classes), samples_per_class)
    coords = np.arange(size)
    for idx in range(n):
        c = labels[idx]
        channel, orientation = c % 2, c // 2
        phase = rng.integers(0, period)
        amp = rng.uniform(0.8, 1.2)
        wave = (((coords + phase) % period) < period // 2).astype(np.float64)
        stripes = np.tile(wave, (size, 1)) if orientation == 0 else np.tile(wave[:, None], (1, size))
        images[idx, channel] += amp * stripes
    per_train = int(samples_per_class * train_fraction)
    train_idx, test_idx = [], []
    for c in range(classes):
        base = c * samples_per_class
        train_idx.extend(range(base, base + per_train))
        test_idx.extend(range(base + per_train, base + samples_per_class))
    return Dataset(images, labels, np.array(train_idx), np.array(test_idx))


def lorenz_rhs(state):
    x, y, z = state
    return np.array([
        LORENZ_SIGMA * (y - x),
        x * (LORENZ_RHO - z) - y,
        x * y - LORENZ_BETA * z,
    ])


def rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def lorenz_trajectories(seed, count, steps, dt=0.01, sample_every=10,
                        window=8, burn_in=500, test_fraction=0.25):
    """Sliding windows over chaotic trajectories: ``window`` past points
    map to the next point.  Windows are spaced ``sample_every`` solver
    steps apart; train and test windows come from disjoint trajectories.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    rng = np.random.Generator(np.random.PCG64(seed))
    all_inputs, all_targets, owners = [], [], []
    for traj in range(count):
        y = rng.uniform(-12.0, 12.0, size=3) + np.array([0.0, 0.0, 24.0])
        for _ in range(burn_in):
            y = rk4_step(lorenz_rhs, y, dt)
        recorded = np.empty((steps, 3))
        for s in range(steps):
            y = rk4_step(lorenz_rhs, y, dt)
            recorded[s] = y
        series = recorded[::sample_every]
        for start in range(len(series) - window):
            all_inputs.append(series[start : start + window])
            all_targets.append(series[start + window])
            owners.append(traj)
    inputs = np.array(all_inputs)
    targets = np.array(all_targets)
    owners = np.array(owners)
    n_test_traj = max(1, int(round(count * test_fraction)))
    test_mask = owners >= count - n_test_traj
    return Dataset(inputs, targets,
                   np.flatnonzero(~test_mask), np.flatnonzero(test_mask))


def translate_dataset(ds: Dataset, offset: float) -> Dataset:
    """A copy with the scalar offset added to every coordinate of inputs
    and targets (exact elementwise shift)."""
    return Dataset(ds.inputs + offset, ds.targets + offset, ds.train_idx, ds.test_idx)


# -----------------------------------------------------------------------------
# model containers


class Network(Layer):
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def param_count(self):
        frees, denses = 0, 0
        for layer in self.layers:
            if hasattr(layer, "param_count"):
                f, d = layer.param_count()
                frees += f
                denses += d
        return frees, denses


class Flatten(Layer):
    def forward(self, x):
        n = x.data.shape[0]
        return T.reshape(x, (n, int(np.prod(x.data.shape[1:]))))


class AvgPool(Layer):
    def __init__(self, window=2):
        self.window = window

    def forward(self, x):
        return T.avg_pool2d(x, self.window)


class GlobalAvgPool(Layer):
    def forward(self, x):
        return T.mean(x, axis=(2, 3))


class Narrow(Layer):
    """Keep a contiguous slice of axis 1 (e.g. decode model outputs)."""

    def __init__(self, start, length):
        self.start, self.length = start, length

    def forward(self, x):
        return T.narrow(x, 1, self.start, self.length)


# -----------------------------------------------------------------------------
# training loop


def _batch_iter(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _loss_fn(task):
    return cross_entropy if task == "classification" else mse


def evaluate(model, inputs, targets, task, batch_size=256) -> float:
    """Test metric: accuracy for classification, MSE for regression."""
    outs = []
    with T.no_grad():
        for start in range(0, len(inputs), batch_size):
            outs.append(model(T.Tensor(inputs[start : start + batch_size])).data)
    pred = np.concatenate(outs)
    if task == "classification":
        return float(np.mean(pred.argmax(axis=1) == np.asarray(targets)))
    return float(np.mean((pred - targets) ** 2))


def train(model, dataset: Dataset, config: TrainConfig) -> Metrics:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    params = model.parameters()
    state = {}
    loss_fn = _loss_fn(config.task)
    free, dense = model.param_count()
    metrics = Metrics(free_params=free, dense_params=dense)
    xs, ys = dataset.train_inputs, dataset.train_targets
    for _ in range(config.epochs):
        total, count = 0.0, 0
        for idx in _batch_iter(len(xs), config.batch_size, rng):
            zero_grads(params)
            out = model(T.Tensor(xs[idx]))
            loss = loss_fn(out, ys[idx])
            T.backward(loss)
            if config.optimizer == "sgd":
                sgd_step(params, config.lr)
            elif config.optimizer == "adam":
                adam_step(params, state, config.lr, config.beta1, config.beta2, config.eps)
            else:
                raise ValueError(f"unknown optimizer {config.optimizer!r}")
            total += loss.item() * len(idx)
            count += len(idx)
        metrics.losses.append(total / count)
        metrics.scores.append(
            evaluate(model, dataset.test_inputs, dataset.test_targets, config.task)
        )
        if (config.early_stop_train_loss is not None
                and metrics.losses[-1] < config.early_stop_train_loss):
            break
    return metrics


def linear_probe_accuracy(dataset: Dataset, ridge=1e-3) -> float:
    """Closed-form one-hot ridge regression on raw pixels; the floor any
    nonlinear model must clear to demonstrate it learned structure."""
    xs = dataset.train_inputs.reshape(len(dataset.train_idx), -1)
    ys = np.asarray(dataset.train_targets)
    classes = int(ys.max()) + 1
    onehot = np.eye(classes)[ys]
    xs1 = np.hstack([xs, np.ones((len(xs), 1))])
    w = np.linalg.solve(xs1.T @ xs1 + ridge * np.eye(xs1.shape[1]), xs1.T @ onehot)
    xt = dataset.test_inputs.reshape(len(dataset.test_idx), -1)
    pred = np.hstack([xt, np.ones((len(xt), 1))]) @ w
    return float(np.mean(pred.argmax(axis=1) == dataset.test_targets))


# -----------------------------------------------------------------------------
# model builders


def blobs_classifier(kind, seed, channels=24, classes=4):
    """Three conv stages + pooled linear head on 3-channel images.

    ``kind`` is "phc" (n=3 parameterized convs) or "real" (dense convs
    of the same architecture).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    real = builtin("real")
    if kind == "phc":
        conv = lambda ci, co: PHCLayer(3, ci, co, 3, padding=1, activation="relu", rng=rng)
    elif kind == "real":
        conv = lambda ci, co: HConv2DLayer(real, ci, co, 3, padding=1, activation="relu", rng=rng)
    else:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return Network([
        conv(3, channels),
        AvgPool(2),
        conv(channels, channels),
        AvgPool(2),
        conv(channels, channels),
        GlobalAvgPool(),
        HFCLayer(real, channels, classes, activation="none", rng=rng),
    ])


def conv_weight_count(net: Network) -> int:
    """Free weight parameters of the convolutional layers (bias excluded)."""
    total = 0
    for layer in net.layers:
        if isinstance(layer, (PHCLayer, HConv2DLayer)):
            free, _ = layer.param_count()
            total += free - (layer.out_channels if layer.bias is not None else 0)
    return total


# --- Lorenz forecasters ------------------------------------------------------


def _component_major(vectors: np.ndarray) -> np.ndarray:
    """(N, count, dims) feature tensor -> (N, dims*count) laid out
    component-major, as the algebra-bound layers expect."""
    return np.swapaxes(vectors, 1, 2).reshape(vectors.shape[0], -1)


def encode_windows_flat(windows: np.ndarray) -> np.ndarray:
    return windows.reshape(windows.shape[0], -1)


def encode_windows_pure_quaternion(windows: np.ndarray) -> np.ndarray:
    """Zero-pad each 3-point into a pure quaternion (0, x, y, z)."""
    n, w, _ = windows.shape
    quats = np.zeros((n, w, 4))
    quats[:, :, 1:] = windows
    return _component_major(quats)


def _rotation_between(u, v):
    """Unit quaternion turning direction u into direction v."""
    w = 1.0 + float(u @ v)
    if w < 1e-12:  # antiparallel: half-turn about any perpendicular axis
        axis = np.cross(u, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-12:
            axis = np.cross(u, [0.0, 1.0, 0.0])
        return G.UnitQuaternion.normalize(np.concatenate([[0.0], axis]))
    return G.UnitQuaternion.normalize(np.concatenate([[w], np.cross(u, v)]))


def encode_windows_dual_quaternion(windows: np.ndarray) -> np.ndarray:
    """Per-step rigid motions as unit dual quaternions.

    Each of the window's w-1 steps contributes the rotation between
    consecutive direction vectors plus the step displacement.  Only
    displacements enter, so the encoding is translation-invariant and
    predictions built on it are translation-equivariant by construction.
    """
    n, w, _ = windows.shape
    out = np.zeros((n, w - 1, 8))
    for i in range(n):
        disps = np.diff(windows[i], axis=0)
        norms = np.linalg.norm(disps, axis=1)
        prev_dir = None
        for t in range(w - 1):
            if norms[t] < 1e-12:
                rot = G.UnitQuaternion.identity()
            elif prev_dir is None:
                rot = G.UnitQuaternion.identity()
                prev_dir = disps[t] / norms[t]
            else:
                cur = disps[t] / norms[t]
                rot = _rotation_between(prev_dir, cur)
                prev_dir = cur
            dq = G.dq_from_rt(G.RigidTransform(rot, disps[t]))
            out[i, t] = dq.coeffs
    return _component_major(out)


@dataclass
class Forecaster:
    """A trained point forecaster: encode -> network -> decode."""

    name: str
    net: Network
    encode: callable
    predict_delta: bool = False  # network outputs a displacement from the last point

    def features(self, windows):
        return self.encode(windows)

    def train_targets(self, windows, targets):
        if self.predict_delta:
            return targets - windows[:, -1, :]
        return targets

    def predict(self, windows):
        feats = self.encode(windows)
        outs = []
        with T.no_grad():
            for start in range(0, len(feats), 512):
                outs.append(self.net(T.Tensor(feats[start : start + 512])).data)
        pred = np.concatenate(outs)
        if self.predict_delta:
            pred = pred + windows[:, -1, :]
        return pred


def lorenz_forecaster(kind, seed, window=8) -> Forecaster:
    """Matched-capacity forecasters (total free parameters within 10%).

    real: plain MLP on raw coordinates.
    quaternion: fixed Hamilton layers on zero-padded pure quaternions.
    phm: learned-grid layers (n=4) on the same encoding.
    dual_quaternion: fixed dual-quaternion layers on per-step rigid
    motions, predicting the next displacement.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    if kind == "real":
        r = builtin("real")
        net = Network([
            HFCLayer(r, window * 3, 25, activation="relu", rng=rng),
            HFCLayer(r, 25, 3, activation="none", rng=rng),
        ])
        return Forecaster("real", net, encode_windows_flat)
    if kind == "quaternion":
        q = builtin("quaternion")
        net = Network([
            HFCLayer(q, window * 4, 72, activation="relu", rng=rng),
            HFCLayer(q, 72, 4, activation="none", rng=rng),
            Narrow(1, 3),
        ])
        return Forecaster("quaternion", net, encode_windows_pure_quaternion)
    if kind == "phm":
        net = Network([
            PHMLayer(4, window * 4, 56, activation="relu", rng=rng),
            PHMLayer(4, 56, 4, rng=rng),
            Narrow(1, 3),
        ])
        return Forecaster("phm", net, encode_windows_pure_quaternion)
    if kind == "dual_quaternion":
        d = builtin("dual_quaternion")
        net = Network([
            HFCLayer(d, (window - 1) * 8, 80, activation="relu", rng=rng),
            HFCLayer(d, 80, 8, activation="none", rng=rng),
            Narrow(5, 3),
        ])
        return Forecaster("dual_quaternion", net, encode_windows_dual_quaternion,
                          predict_delta=True)
    raise ValueError(f"unknown forecaster kind {kind!r}")

"""From-scratch feed-forward networks for the three surrogate roles.

ReLU hidden layers with either an identity head (departure descriptors)
or a softmax head (queue-length PMFs). Gradients are exact analytic
backpropagation for both loss functions; training runs Adam with
decoupled weight decay and is bitwise deterministic for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .descriptors import DescriptorDims
from .errors import TrainingDivergedError
from .metrics import sae

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# random-search state space
SEARCH_SPACE = {
    "learning_rate": (0.01, 0.05, 0.001, 0.0001),
    "epochs": (100, 350),              # inclusive integer range
    "hidden_layers": (1, 10),          # inclusive integer range
    "neurons": (50, 70, 100, 150, 200, 300, 350, 600),
    "batch_size": (64, 128, 256, 512),
    "weight_decay": (1e-4, 1e-5, 1e-6),
    "alpha": (0.0, 1.0),               # continuous, descriptor heads only
}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 150
    hidden_dims: tuple = (50, 70, 50)
    batch_size: int = 128
    weight_decay: float = 1e-5
    alpha: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 1 <= len(self.hidden_dims) <= 10:
            raise ValueError("hidden layer count must be in [1, 10]")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")

    @property
    def hidden_layers(self) -> int:
        return len(self.hidden_dims)

    def to_json_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "hidden_dims": list(self.hidden_dims),
            "batch_size": self.batch_size,
            "weight_decay": self.weight_decay,
            "alpha": self.alpha,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["hidden_dims"] = tuple(d["hidden_dims"])
        return cls(**d)


@dataclass(eq=False)
class MlpModel:
    """Layer dimensions, parameters, head and input standardizer."""

    layer_dims: tuple
    weights: list              # per layer: (fan_in, fan_out)
    biases: list               # per layer: (fan_out,)
    head: str                  # "identity" | "softmax"
    x_mean: np.ndarray
    x_std: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy_params(self) -> tuple:
        return ([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def set_params(self, params: tuple):
        self.weights = [w.copy() for w in params[0]]
        self.biases = [b.copy() for b in params[1]]


def init_model(layer_dims, head: str, seed: int = 0, meta: dict | None = None) -> MlpModel:
    """He-initialized network for ReLU hidden layers."""
    if head not in ("identity", "softmax"):
        raise ValueError(f"unknown head {head!r}")
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError("layer_dims needs input and output sizes, all positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        head=head,
        x_mean=np.zeros(dims[0]),
        x_std=np.ones(dims[0]),
        meta=meta or {},
    )


def default_architecture(role: str, dims: DescriptorDims, L: int) -> tuple:
    """Layer sizes for the three roles at the given descriptor dims."""
    desc = dims.vector_length
    if role == "nn1":
        return (2 * dims.n, 50, 70, 50, desc)
    if role == "nn2":
        return (desc + dims.n, 50, 70, 200, 350, 600, L)
    if role == "nn3":
        return (desc + dims.n, 50, 70, 50, desc)
    raise ValueError(f"unknown role {role!r}")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cached(model: MlpModel, x: np.ndarray):
    a = (x - model.x_mean) / model.x_std
    activations = [a]
    pre = []
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    out = _softmax(a) if model.head == "softmax" else a
    return out, activations, pre


def forward(model: MlpModel, x) -> np.ndarray:
    """Network output for a single input vector or a batch."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.input_dim:
        raise ValueError(f"input dim {arr.shape[1]} != {model.input_dim}")
    out, _, _ = _forward_cached(model, arr)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Losses


def _depart_blocks(dims: DescriptorDims):
    n_ac = dims.n1 * dims.n2 * dims.n2
    return dims.n, n_ac


def loss_depart(pred, target, alpha: float, dims: DescriptorDims, mode: str = "mean") -> float:
    """Alpha-mix of the log-moment and autocorrelation squared errors.

    ``mean`` normalizes each block by its own entry count so alpha keeps
    its meaning at any dims; ``sum`` restores the plain per-instance
    block sums.
    """
    p = np.atleast_2d(np.asarray(pred, dtype=float))
    t = np.atleast_2d(np.asarray(target, dtype=float))
    n, n_ac = _depart_blocks(dims)
    if p.shape[1] != n + n_ac:
        raise ValueError(f"vector length {p.shape[1]} != {n + n_ac}")
    d = p - t
    mom = d[:, :n] ** 2
    ac = d[:, n:] ** 2
    if mode == "mean":
        mom_term = mom.mean()
        ac_term = ac.mean() if n_ac else 0.0
    elif mode == "sum":
        mom_term = mom.sum(axis=1).mean()
        ac_term = ac.sum(axis=1).mean() if n_ac else 0.0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(alpha * mom_term + (1.0 - alpha) * ac_term)


def loss_pmf(pred, target) -> float:
    """Batch mean of total absolute error plus worst-level absolute error."""
    p = np.atleast_2d(np.asarray(pred, dtype=float))
    t = np.atleast_2d(np.asarray(target, dtype=float))
    if p.shape != t.shape:
        raise ValueError("shape mismatch")
    err = np.abs(p - t)
    return float((err.sum(axis=1) + err.max(axis=1)).mean())


def _grad_out_depart(pred, target, alpha, dims, mode):
    b = pred.shape[0]
    n, n_ac = _depart_blocks(dims)
    d = pred - target
    g = np.empty_like(d)
    if mode == "mean":
        g[:, :n] = alpha * 2.0 * d[:, :n] / (b * n)
        if n_ac:
            g[:, n:] = (1.0 - alpha) * 2.0 * d[:, n:] / (b * n_ac)
    else:
        g[:, :n] = alpha * 2.0 * d[:, :n] / b
        if n_ac:
            g[:, n:] = (1.0 - alpha) * 2.0 * d[:, n:] / b
    return g


def _grad_out_pmf(pred, target):
    b = pred.shape[0]
    d = pred - target
    g = np.sign(d) / b
    # max term subgradient: route to the lowest max-achieving level
    top = np.argmax(np.abs(d), axis=1)
    rows = np.arange(b)
    g[rows, top] += np.sign(d[rows, top]) / b
    return g


def gradients(model: MlpModel, x, target, loss_kind: str,
              alpha: float = 0.5, dims: DescriptorDims | None = None,
              mode: str = "mean"):
    """Exact analytic gradients of the batch loss w.r.t. all parameters."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    out, activations, pre = _forward_cached(model, x)
    if loss_kind == "depart":
        if model.head != "identity":
            raise ValueError("descriptor loss expects an identity head")
        if dims is None:
            raise ValueError("descriptor loss needs dims")
        loss = loss_depart(out, target, alpha, dims, mode)
        g_out = _grad_out_depart(out, target, alpha, dims, mode)
        delta = g_out  # identity head
    elif loss_kind == "pmf":
        if model.head != "softmax":
            raise ValueError("pmf loss expects a softmax head")
        loss = loss_pmf(out, target)
        g_out = _grad_out_pmf(out, target)
        # softmax jacobian: dz = s * (g - sum(g*s))
        dot = (g_out * out).sum(axis=1, keepdims=True)
        delta = out * (g_out - dot)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")

    n_layers = len(model.weights)
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (pre[i - 1] > 0.0)
    return loss, grad_w, grad_b


# ---------------------------------------------------------------------------
# Training


@dataclass
class TrainingCurves:
    train_loss: list
    val_metric: list
    best_epoch: int
    best_val: float
    wall_time_s: float = 0.0


def _val_metric(model: MlpModel, x_val, y_val, loss_kind, alpha, dims, mode) -> float:
    pred = forward(model, x_val)
    if loss_kind == "pmf":
        return sae(y_val, pred)
    return loss_depart(pred, y_val, alpha, dims, mode)


def train(dataset, val_dataset, config: TrainConfig, head: str,
          dims: DescriptorDims | None = None, loss_mode: str = "mean",
          meta: dict | None = None) -> tuple[MlpModel, TrainingCurves]:
    """Adam with decoupled weight decay; returns the best-validation model.

    The validation metric is SAE for softmax heads and the descriptor
    loss for identity heads. Inputs are standardized per feature with
    statistics from the training split, persisted with the model.
    """
    x, y = (np.asarray(a, dtype=float) for a in dataset)
    xv, yv = (np.asarray(a, dtype=float) for a in val_dataset)
    if x.shape[0] == 0 or xv.shape[0] == 0:
        raise ValueError("datasets must be nonempty")
    if x.shape[1] != xv.shape[1] or y.shape[1] != yv.shape[1]:
        raise ValueError("train/validation dims disagree")
    loss_kind = "pmf" if head == "softmax" else "depart"
    if loss_kind == "depart" and dims is None:
        raise ValueError("descriptor training needs dims")

    layer_dims = (x.shape[1],) + tuple(config.hidden_dims) + (y.shape[1],)
    model = init_model(layer_dims, head, seed=config.seed, meta=dict(meta or {}))
    model.x_mean = x.mean(axis=0)
    model.x_std = np.maximum(x.std(axis=0), 1e-8)
    model.meta.setdefault("config", config.to_json_dict())

    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1)))
    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]

    lr = config.learning_rate
    wd = config.weight_decay
    step = 0
    best_val = np.inf
    best_params = model.copy_params()
    best_epoch = -1
    curves = TrainingCurves([], [], -1, np.inf)
    t_start = time.perf_counter()
    for epoch in range(config.epochs):
        perm = rng.permutation(x.shape[0])
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, x.shape[0], config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            loss, gw, gb = gradients(
                model, x[idx], y[idx], loss_kind, config.alpha, dims, loss_mode
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} step {step}",
                    {"epoch": epoch, "step": step, "lr": lr, "loss": loss},
                )
            step += 1
            c1 = 1.0 - ADAM_BETA1 ** step
            c2 = 1.0 - ADAM_BETA2 ** step
            for i in range(len(model.weights)):
                m_w[i] = ADAM_BETA1 * m_w[i] + (1 - ADAM_BETA1) * gw[i]
                v_w[i] = ADAM_BETA2 * v_w[i] + (1 - ADAM_BETA2) * gw[i] ** 2
                model.weights[i] -= lr * (
                    (m_w[i] / c1) / (np.sqrt(v_w[i] / c2) + ADAM_EPS)
                    + wd * model.weights[i]
                )
                m_b[i] = ADAM_BETA1 * m_b[i] + (1 - ADAM_BETA1) * gb[i]
                v_b[i] = ADAM_BETA2 * v_b[i] + (1 - ADAM_BETA2) * gb[i] ** 2
                model.biases[i] -= lr * (m_b[i] / c1) / (np.sqrt(v_b[i] / c2) + ADAM_EPS)
            epoch_loss += loss
            n_batches += 1
        val = _val_metric(model, xv, yv, loss_kind, config.alpha, dims, loss_mode)
        if not np.isfinite(val):
            raise TrainingDivergedError(
                f"non-finite validation metric at epoch {epoch}",
                {"epoch": epoch, "lr": lr},
            )
        curves.train_loss.append(epoch_loss / max(n_batches, 1))
        curves.val_metric.append(val)
        if val < best_val:
            best_val = val
            best_params = model.copy_params()
            best_epoch = epoch
    model.set_params(best_params)
    model.meta["best_epoch"] = best_epoch
    model.meta["best_val"] = float(best_val)
    curves.best_epoch = best_epoch
    curves.best_val = float(best_val)
    curves.wall_time_s = time.perf_counter() - t_start
    return model, curves


def save_model(model: MlpModel, path):
    """Binary model file: JSON header plus raw parameter blob."""
    from .artifacts import write_blob

    arrays = {"x_mean": model.x_mean, "x_std": model.x_std}
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    meta = {
        "format": "tandemflow-model",
        "version": 1,
        "layer_dims": list(model.layer_dims),
        "head": model.head,
        "meta": model.meta,
    }
    write_blob(path, arrays, meta)


def load_model(path) -> MlpModel:
    from .artifacts import read_blob
    from .errors import SchemaError

    arrays, meta = read_blob(path)
    if meta.get("format") != "tandemflow-model":
        raise SchemaError(f"{path}: not a model file")
    dims = tuple(meta["layer_dims"])
    n_layers = len(dims) - 1
    return MlpModel(
        layer_dims=dims,
        weights=[arrays[f"w{i}"] for i in range(n_layers)],
        biases=[arrays[f"b{i}"] for i in range(n_layers)],
        head=meta["head"],
        x_mean=arrays["x_mean"],
        x_std=arrays["x_std"],
        meta=meta.get("meta", {}),
    )


def sample_config(rng: np.random.Generator, space: dict | None = None,
                  seed: int = 0) -> TrainConfig:
    """One uniform draw from the hyperparameter state space."""
    sp = dict(SEARCH_SPACE)
    sp.update(space or {})
    n_layers = int(rng.integers(sp["hidden_layers"][0], sp["hidden_layers"][1] + 1))
    hidden = tuple(
        int(rng.choice(np.asarray(sp["neurons"]))) for _ in range(n_layers)
    )
    return TrainConfig(
        learning_rate=float(rng.choice(np.asarray(sp["learning_rate"]))),
        epochs=int(rng.integers(sp["epochs"][0], sp["epochs"][1] + 1)),
        hidden_dims=hidden,
        batch_size=int(rng.choice(np.asarray(sp["batch_size"]))),
        weight_decay=float(rng.choice(np.asarray(sp["weight_decay"]))),
        alpha=float(rng.uniform(sp["alpha"][0], sp["alpha"][1])),
        seed=seed,
    )


def random_search(space: dict | None, budget: int, train_fn, seed: int = 0):
    """Uniform random search; returns (best config, full leaderboard).

    ``train_fn(config) -> validation metric``; the leaderboard keeps
    every (config, metric) pair in sampling order plus the ranking.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    trials = []
    for t in range(budget):
        config = sample_config(rng, space, seed=int(rng.integers(2**31)))
        metric = float(train_fn(config))
        trials.append({"trial": t, "config": config, "val_metric": metric})
    order = sorted(range(budget), key=lambda i: (trials[i]["val_metric"], i))
    leaderboard = {
        "trials": trials,
        "ranking": order,
        "best_trial": order[0],
    }
    return trials[order[0]]["config"], leaderboard

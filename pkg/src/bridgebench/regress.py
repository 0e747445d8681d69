"""Log-log linear cost models, fit two ways.

The closed form says throughput should behave like a product of powers
of the complexity features, so everything here works on logs: features
and targets enter positive, get log-transformed, and mean squared error
lives in log space.  fit_ols solves the normal equations and serves as
the exact reference; fit_gd is plain batch gradient descent and must
land on the same answer, which the suite enforces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import Rng


@dataclass(frozen=True, eq=False)
class Dataset:
    """Raw positive observations: rows of features plus one target each."""

    feature_names: tuple[str, ...]
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        targs = np.asarray(self.targets, dtype=float)
        if feats.ndim != 2 or targs.ndim != 1:
            raise ValueError("features must be 2-d and targets 1-d")
        if feats.shape[0] != targs.shape[0]:
            raise ValueError("row count mismatch between features and targets")
        if feats.shape[1] != len(self.feature_names):
            raise ValueError("feature_names does not match feature columns")
        if feats.shape[0] < 2:
            raise ValueError("need at least 2 rows to fit anything")
        if not (targs > 0).all():
            raise ValueError("targets must be strictly positive")
        if not (feats > 0).all():
            raise ValueError("features must be strictly positive")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def subset(self, names) -> "Dataset":
        names = tuple(names)
        missing = set(names) - set(self.feature_names)
        if missing:
            raise ValueError(f"unknown features {sorted(missing)}")
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(names, self.features[:, cols], self.targets)


@dataclass(frozen=True)
class GdConfig:
    learning_rate: float = 0.01
    max_iterations: int = 200_000
    tolerance: float = 1e-12
    standardize: bool = True


@dataclass(frozen=True)
class RegressionModel:
    """ln(target) = intercept + sum coef_i * ln(feature_i)."""

    target_name: str
    feature_names: tuple[str, ...]
    coefficients: tuple[float, ...]
    intercept: float
    mse_train: float
    mse_test: float | None = None
    pruned_all: bool = False

    def coefficient(self, name: str) -> float:
        return self.coefficients[self.feature_names.index(name)]


def predict_log(model: RegressionModel, features: dict) -> float:
    """ln of the predicted target at raw (unlogged) feature values."""
    total = model.intercept
    for name, coef in zip(model.feature_names, model.coefficients):
        if name not in features:
            raise ValueError(f"prediction needs feature {name!r}")
        value = float(features[name])
        if value <= 0:
            raise ValueError(f"feature {name!r} must be positive")
        total += coef * math.log(value)
    return total


def mse(model: RegressionModel, dataset: Dataset) -> float:
    """Mean squared error in log space."""
    cols = [dataset.feature_names.index(n) for n in model.feature_names]
    logs = np.log(dataset.features[:, cols])
    pred = logs @ np.array(model.coefficients) + model.intercept
    err = pred - np.log(dataset.targets)
    return float(np.mean(err * err))


def _finish(target_name, names, coefs, intercept, dataset, test,
            pruned_all=False) -> RegressionModel:
    model = RegressionModel(target_name=target_name, feature_names=names,
                            coefficients=tuple(float(c) for c in coefs),
                            intercept=float(intercept), mse_train=0.0,
                            mse_test=None, pruned_all=pruned_all)
    train_err = mse(model, dataset)
    test_err = mse(model, test) if test is not None else None
    return RegressionModel(target_name=target_name, feature_names=names,
                           coefficients=model.coefficients,
                           intercept=model.intercept, mse_train=train_err,
                           mse_test=test_err, pruned_all=pruned_all)


def fit_ols(dataset: Dataset, test: Dataset | None = None,
            target_name: str = "r") -> RegressionModel:
    """Exact least squares via the normal equations."""
    logs = np.log(dataset.features)
    y = np.log(dataset.targets)
    design = np.hstack([logs, np.ones((dataset.n, 1))])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ValueError("design matrix is rank deficient; drop a feature")
    gram = design.T @ design
    sol = np.linalg.solve(gram, design.T @ y)
    return _finish(target_name, dataset.feature_names, sol[:-1], sol[-1],
                   dataset, test)


def fit_gd(dataset: Dataset, config: GdConfig = GdConfig(),
           test: Dataset | None = None,
           target_name: str = "r") -> RegressionModel:
    """Batch gradient descent on the log-space squared loss.

    Starts from zero coefficients and an intercept at mean(ln target).
    Stops when the loss improves by less than the tolerance; raises if
    the loss rises 100 steps in a row, which marks a bad learning rate.
    """
    logs = np.log(dataset.features)
    y = np.log(dataset.targets)
    n = dataset.n
    if config.standardize:
        mu = logs.mean(axis=0)
        sigma = logs.std(axis=0)
        if (sigma == 0).any():
            flat = dataset.feature_names[int(np.argmax(sigma == 0))]
            raise ValueError(f"feature {flat!r} is constant; cannot standardize")
        z = (logs - mu) / sigma
    else:
        mu = np.zeros(logs.shape[1])
        sigma = np.ones(logs.shape[1])
        z = logs
    w = np.zeros(logs.shape[1])
    b = float(np.mean(y))
    lr = config.learning_rate
    prev = math.inf
    rising = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.max_iterations):
            err = z @ w + b - y
            loss = float(err @ err) / n
            # a non-finite loss counts as rising: it can only mean blow-up
            if loss > prev or not math.isfinite(loss):
                rising += 1
                if rising >= 100:
                    raise ValueError(
                        "gradient descent diverged: loss rose 100 steps in a row")
            else:
                rising = 0
            if abs(prev - loss) < config.tolerance:
                break
            prev = loss
            w = w - lr * (2.0 / n) * (z.T @ err)
            b = b - lr * 2.0 * float(err.mean())
    coefs = w / sigma
    intercept = b - float((w * mu / sigma).sum())
    return _finish(target_name, dataset.feature_names, coefs, intercept,
                   dataset, test)


def standardized_coefficients(model: RegressionModel,
                              dataset: Dataset) -> dict[str, float]:
    """Coefficients rescaled by each log-feature's spread in the dataset."""
    out = {}
    for name, coef in zip(model.feature_names, model.coefficients):
        col = np.log(dataset.features[:, dataset.feature_names.index(name)])
        out[name] = float(coef * col.std())
    return out


def prune_refit(dataset: Dataset, model: RegressionModel,
                threshold: float = 0.05, fitter=None,
                test: Dataset | None = None) -> RegressionModel:
    """Drop features whose standardized coefficient is inside the threshold.

    Refits on the survivors with `fitter` (default fit_ols).  If nothing
    survives, the largest-magnitude feature is kept and the result is
    flagged pruned_all.
    """
    scaled = standardized_coefficients(model, dataset)
    keep = [n for n in model.feature_names if abs(scaled[n]) >= threshold]
    pruned_all = False
    if not keep:
        keep = [max(scaled, key=lambda n: abs(scaled[n]))]
        pruned_all = True
    if tuple(keep) == model.feature_names and not pruned_all:
        return model
    sub = dataset.subset(keep)
    sub_test = test.subset(keep) if test is not None else None
    fit = fitter or fit_ols
    refit = fit(sub, sub_test)
    return RegressionModel(target_name=model.target_name,
                           feature_names=refit.feature_names,
                           coefficients=refit.coefficients,
                           intercept=refit.intercept,
                           mse_train=refit.mse_train,
                           mse_test=refit.mse_test,
                           pruned_all=pruned_all)


def split_dataset(dataset: Dataset, test_fraction: float,
                  seed: int = 0) -> tuple[Dataset, Dataset | None]:
    """Deterministic shuffle-split; fraction 0 keeps everything for training."""
    if not 0 <= test_fraction < 1:
        raise ValueError("test_fraction must be in [0, 1)")
    if test_fraction == 0:
        return dataset, None
    n = dataset.n
    n_test = max(int(n * test_fraction), 1)
    if n - n_test < 2:
        raise ValueError("split leaves fewer than 2 training rows")
    order = list(range(n))
    rng = Rng(seed)
    for i in range(n - 1, 0, -1):
        j = rng.next_below(i + 1)
        order[i], order[j] = order[j], order[i]
    test_idx = sorted(order[:n_test])
    train_idx = sorted(order[n_test:])
    make = lambda idx: Dataset(dataset.feature_names, dataset.features[idx],
                               dataset.targets[idx])
    return make(train_idx), make(test_idx)


# --- plain-text model files -------------------------------------------

def save_model(model: RegressionModel, path,
               invocation: str | None = None) -> None:
    lines = []
    if invocation:
        lines.append(f"# {invocation}")
    lines += [
        f"target={model.target_name}",
        f"features={','.join(model.feature_names)}",
    ]
    for name, coef in zip(model.feature_names, model.coefficients):
        lines.append(f"coef_{name}={coef!r}")
    lines.append(f"intercept={model.intercept!r}")
    lines.append(f"mse_train={model.mse_train!r}")
    if model.mse_test is not None:
        lines.append(f"mse_test={model.mse_test!r}")
    lines.append(f"pruned_all={int(model.pruned_all)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> RegressionModel:
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    try:
        names = tuple(n for n in pairs["features"].split(",") if n)
        coefs = tuple(float(pairs[f"coef_{n}"]) for n in names)
        return RegressionModel(
            target_name=pairs["target"],
            feature_names=names,
            coefficients=coefs,
            intercept=float(pairs["intercept"]),
            mse_train=float(pairs["mse_train"]),
            mse_test=float(pairs["mse_test"]) if "mse_test" in pairs else None,
            pruned_all=bool(int(pairs.get("pruned_all", "0"))),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing model key {exc}") from None

"""Single-hidden-layer perceptron with three full-batch trainers.

* gradient descent with momentum,
* Levenberg-Marquardt (damped Gauss-Newton on the residual Jacobian),
* Levenberg-Marquardt with Bayesian regularization, where the data/weight
  trade-off hyperparameters are re-estimated after every accepted step
  from the effective number of parameters.

Parameters are handled as one flat vector: the hidden weight matrix
(``n_hidden x (n_inputs + 1)``, bias last) in row-major order followed by
the output weights (``n_hidden + 1``, bias last).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import make_rng

TRANSFERS = ("log_sigmoid", "linear")
STOP_TARGET = "target_reached"
STOP_EPOCHS = "epoch_limit"
STOP_CONVERGED = "converged"


class ConditioningError(ValueError):
    """More trainable parameters than training rows."""


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, mse: float):
        super().__init__(f"training diverged at epoch {epoch} (mse={mse})")
        self.epoch = epoch
        self.mse = mse


@dataclass(frozen=True)
class MlpLayout:
    n_inputs: int
    n_hidden: int
    hidden_transfer: str = "log_sigmoid"
    output_transfer: str = "log_sigmoid"

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_hidden < 1:
            raise ValueError(f"need n_inputs >= 1 and n_hidden >= 1, got {self.n_inputs}, {self.n_hidden}")
        if self.hidden_transfer != "log_sigmoid":
            raise ValueError(f"unsupported hidden transfer {self.hidden_transfer!r}")
        if self.output_transfer not in TRANSFERS:
            raise ValueError(f"unsupported output transfer {self.output_transfer!r}")

    @property
    def n_params(self) -> int:
        return self.n_hidden * (self.n_inputs + 1) + self.n_hidden + 1


@dataclass(frozen=True, eq=False)
class MlpModel:
    layout: MlpLayout
    hidden_weights: np.ndarray
    output_weights: np.ndarray

    def __post_init__(self):
        hw = np.array(self.hidden_weights, dtype=float)
        ow = np.array(self.output_weights, dtype=float).ravel()
        L = self.layout
        if hw.shape != (L.n_hidden, L.n_inputs + 1) or ow.shape != (L.n_hidden + 1,):
            raise ValueError("weight shapes do not match the layout")
        if not (np.all(np.isfinite(hw)) and np.all(np.isfinite(ow))):
            raise ValueError("weights must be finite")
        hw.setflags(write=False)
        ow.setflags(write=False)
        object.__setattr__(self, "hidden_weights", hw)
        object.__setattr__(self, "output_weights", ow)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.hidden_weights.ravel(), self.output_weights])

    def with_params(self, w: np.ndarray) -> "MlpModel":
        L = self.layout
        k = L.n_hidden * (L.n_inputs + 1)
        return MlpModel(L, w[:k].reshape(L.n_hidden, L.n_inputs + 1), w[k:])

    def predict(self, X) -> np.ndarray:
        return forward_batch(self, X)


@dataclass(frozen=True)
class GdConfig:
    learning_rate: float = 0.75
    momentum: float = 0.9
    max_epochs: int = 300
    mse_target: float = 1e-5

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.max_epochs < 0 or not self.mse_target > 0:
            raise ValueError("max_epochs must be >= 0 and mse_target > 0")


@dataclass(frozen=True)
class LmConfig:
    lambda_init: float = 1e-3
    lambda_factor: float = 10.0
    lambda_max: float = 1e10
    max_epochs: int = 100
    mse_target: float = 1e-5
    bayesian: bool = False

    def __post_init__(self):
        if not self.lambda_init > 0:
            raise ValueError("lambda_init must be > 0")
        if not self.lambda_factor > 1:
            raise ValueError("lambda_factor must be > 1")
        if self.max_epochs < 0 or not self.mse_target > 0:
            raise ValueError("max_epochs must be >= 0 and mse_target > 0")


@dataclass
class TrainHistory:
    mse: list[float] = field(default_factory=list)
    stop_reason: str = ""
    gamma: Optional[float] = None
    gammas: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.mse)


# ---------------------------------------------------------------------------
# forward pass and derivatives

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _as_batch(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.layout.n_inputs:
        raise ValueError(f"input arity {X.shape[1]} does not match n_inputs={model.layout.n_inputs}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite network input")
    return X


def _forward(model: MlpModel, X: np.ndarray):
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    h = _sigmoid(Xb @ model.hidden_weights.T)
    hb = np.hstack([h, np.ones((X.shape[0], 1))])
    z = hb @ model.output_weights
    if model.layout.output_transfer == "log_sigmoid":
        y = _sigmoid(z)
        dy = y * (1.0 - y)
    else:
        y = z
        dy = np.ones_like(z)
    return Xb, h, hb, y, dy


def forward_batch(model: MlpModel, X) -> np.ndarray:
    return _forward(model, _as_batch(model, X))[3]


def mlp_forward(model: MlpModel, x) -> float:
    """Network output for one normalized input vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("mlp_forward takes a single input vector")
    return float(forward_batch(model, x)[0])


def jacobian(model: MlpModel, X) -> np.ndarray:
    """d(output)/d(params) for every row, shape ``(rows, n_params)``."""
    Xb, h, hb, _, dy = _forward(model, _as_batch(model, X))
    H = model.layout.n_hidden
    d_out = dy[:, None] * hb
    d_hidden = (dy[:, None] * model.output_weights[:H] * h * (1.0 - h))[:, :, None] * Xb[:, None, :]
    return np.hstack([d_hidden.reshape(len(Xb), -1), d_out])


def mlp_gradient(model: MlpModel, X, targets) -> np.ndarray:
    """Gradient of 0.5 * mean squared error by back-propagation."""
    X = _as_batch(model, X)
    t = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if t.shape[0] != X.shape[0]:
        raise ValueError("inputs and targets differ in length")
    Xb, h, hb, y, dy = _forward(model, X)
    n = X.shape[0]
    delta_out = (y - t) * dy / n
    grad_out = hb.T @ delta_out
    delta_hidden = delta_out[:, None] * model.output_weights[:-1] * h * (1.0 - h)
    grad_hidden = delta_hidden.T @ Xb
    return np.concatenate([grad_hidden.ravel(), grad_out])


def mse(model: MlpModel, X, targets) -> float:
    r = forward_batch(model, X) - np.asarray(targets, dtype=float).ravel()
    return float(np.mean(r * r))


# ---------------------------------------------------------------------------
# construction

def mlp_init(layout: MlpLayout, seed: int) -> MlpModel:
    """Weights drawn from U[-0.5, 0.5] on a stream keyed by ``seed``."""
    rng = make_rng(seed, "mlp_init")
    w = rng.uniform(-0.5, 0.5, size=layout.n_params)
    k = layout.n_hidden * (layout.n_inputs + 1)
    return MlpModel(layout, w[:k].reshape(layout.n_hidden, layout.n_inputs + 1), w[k:])


def check_conditioning(layout: MlpLayout, n_train: int) -> bool:
    """True when the parameter count does not exceed the training rows."""
    return layout.n_params <= n_train


def _require_conditioning(layout: MlpLayout, n_train: int) -> None:
    if not check_conditioning(layout, n_train):
        raise ConditioningError(
            f"{layout.n_inputs}-{layout.n_hidden}-1 network has {layout.n_params} parameters "
            f"but only {n_train} training rows"
        )


def _prepare(model: MlpModel, X, targets):
    X = _as_batch(model, X)
    t = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] == 0:
        raise ValueError("empty training data")
    if t.shape[0] != X.shape[0]:
        raise ValueError("inputs and targets differ in length")
    return X, t


# ---------------------------------------------------------------------------
# trainers

def train_gd_momentum(model: MlpModel, X, targets, cfg: GdConfig):
    """Full-batch gradient descent: v <- momentum*v - rate*grad; w <- w + v."""
    X, t = _prepare(model, X, targets)
    hist = TrainHistory()
    w = model.params
    v = np.zeros_like(w)
    current = model
    err = mse(current, X, t)
    if err <= cfg.mse_target:
        hist.stop_reason = STOP_TARGET
        return current, hist
    for epoch in range(1, cfg.max_epochs + 1):
        g = mlp_gradient(current, X, t)
        with np.errstate(over="ignore", invalid="ignore"):
            v = cfg.momentum * v - cfg.learning_rate * g
            w = w + v
        if not np.all(np.isfinite(w)):
            raise TrainingDivergedError(epoch, float("nan"))
        current = model.with_params(w)
        with np.errstate(over="ignore", invalid="ignore"):
            err = mse(current, X, t)
        if not np.isfinite(err):
            raise TrainingDivergedError(epoch, err)
        hist.mse.append(err)
        if err <= cfg.mse_target:
            hist.stop_reason = STOP_TARGET
            return current, hist
    hist.stop_reason = STOP_EPOCHS
    return current, hist


def lm_step(model: MlpModel, X, targets, lam: float) -> np.ndarray:
    """Solve (J'J + lam*I) delta = -J'r at the current weights."""
    X, t = _prepare(model, X, targets)
    J = jacobian(model, X)
    r = forward_batch(model, X) - t
    A = J.T @ J
    A[np.diag_indices_from(A)] += lam
    return np.linalg.solve(A, -(J.T @ r))


def _effective_parameters(eig: np.ndarray, alpha: float) -> float:
    # gamma = W - alpha * tr((beta*J'J + alpha*I)^-1), written on the eigenvalues of beta*J'J
    if alpha == 0.0:
        return float(eig.size)
    eig = np.clip(eig, 0.0, None)
    return float(np.sum(eig / (eig + alpha)))


def train_lm(model: MlpModel, X, targets, cfg: LmConfig):
    """Levenberg-Marquardt on the sum of squared residuals.

    With ``cfg.bayesian`` the objective becomes beta*E_D + alpha*E_W (E_D the
    sum of squared errors, E_W the sum of squared weights).  After each
    accepted step the effective parameter count
    gamma = W - alpha * tr((beta*J'J + alpha*I)^-1) is recomputed from the
    Gauss-Newton Hessian and the hyperparameters follow as
    alpha = gamma / (2 E_W) and beta = (N - gamma) / (2 E_D).
    """
    X, t = _prepare(model, X, targets)
    _require_conditioning(model.layout, X.shape[0])
    n, W = X.shape[0], model.layout.n_params
    hist = TrainHistory()
    bayes = cfg.bayesian
    alpha, beta = 0.0, 1.0
    if bayes:
        hist.gamma = float(W)

    w = model.params
    current = model
    r = forward_batch(current, X) - t
    ed = float(r @ r)
    ew = float(w @ w)
    F = beta * ed + alpha * ew
    lam = cfg.lambda_init
    J = jacobian(current, X)

    for epoch in range(1, cfg.max_epochs + 1):
        if ed / n <= cfg.mse_target:
            hist.stop_reason = STOP_TARGET
            return current, hist
        A = J.T @ J
        g = J.T @ r
        rhs = -(beta * g + alpha * w)
        if not np.any(rhs):
            hist.stop_reason = STOP_CONVERGED
            return current, hist
        accepted = False
        while lam <= cfg.lambda_max:
            M = beta * A
            M[np.diag_indices_from(M)] += alpha + lam
            try:
                delta = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                lam *= cfg.lambda_factor
                continue
            w_new = w + delta
            if np.all(np.isfinite(w_new)):
                cand = model.with_params(w_new)
                r_new = forward_batch(cand, X) - t
                ed_new = float(r_new @ r_new)
                ew_new = float(w_new @ w_new)
                F_new = beta * ed_new + alpha * ew_new
                if F_new < F:
                    accepted = True
                    break
            lam *= cfg.lambda_factor
        if not accepted:
            hist.stop_reason = STOP_CONVERGED
            return current, hist

        lam /= cfg.lambda_factor
        w, current, r, ed, ew = w_new, cand, r_new, ed_new, ew_new
        J = jacobian(current, X)
        if bayes:
            eig = np.linalg.eigvalsh(beta * (J.T @ J))
            gamma = min(max(_effective_parameters(eig, alpha), 0.0), float(W))
            alpha = gamma / (2.0 * ew) if ew > 0 else 1e-8
            beta = (n - gamma) / (2.0 * ed) if ed > 0 else 1.0
            if beta <= 0:
                beta = 1.0
            hist.gamma = gamma
            hist.gammas.append(gamma)
        F = beta * ed + alpha * ew
        err = ed / n
        if not np.isfinite(err):
            raise TrainingDivergedError(epoch, err)
        hist.mse.append(err)

    hist.stop_reason = STOP_TARGET if ed / n <= cfg.mse_target else STOP_EPOCHS
    return current, hist


def train_lmbr(model: MlpModel, X, targets, cfg: LmConfig):
    """Levenberg-Marquardt with Bayesian regularization (see :func:`train_lm`)."""
    if not cfg.bayesian:
        cfg = LmConfig(cfg.lambda_init, cfg.lambda_factor, cfg.lambda_max, cfg.max_epochs, cfg.mse_target, True)
    return train_lm(model, X, targets, cfg)

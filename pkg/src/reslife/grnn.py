"""General regression neural network.

A one-pass kernel regressor: the training inputs become the radial basis
centres and the training targets the output-layer weights.  The hidden
bias is ``0.8326 / spread`` so that a unit's activation exp(-(d*b)^2) drops
to one half at a Euclidean distance of exactly ``spread`` from its centre.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HALF_RESPONSE = 0.8326  # sqrt(ln 2), rounded as in MATLAB's newgrnn


@dataclass(frozen=True, eq=False)
class GrnnModel:
    centers: np.ndarray
    targets: np.ndarray
    spread: float

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        t = np.array(self.targets, dtype=float).ravel()
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("GRNN needs at least one centre")
        if c.shape[0] != t.shape[0]:
            raise ValueError("centres and targets differ in length")
        if not self.spread > 0:
            raise ValueError(f"spread must be > 0, got {self.spread}")
        c.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "targets", t)

    @property
    def bias(self) -> float:
        return HALF_RESPONSE / self.spread

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    def predict(self, X) -> np.ndarray:
        return grnn_predict_batch(self, X)


def grnn_build(inputs, targets, spread: float) -> GrnnModel:
    """Store the training rows verbatim; no supervised training is involved."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[:, None]
    if inputs.shape[0] == 0:
        raise ValueError("GRNN needs at least one training row")
    return GrnnModel(inputs, targets, float(spread))


def kernel_activations(m: GrnnModel, x) -> np.ndarray:
    """Radial basis activations of every centre for one input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n_inputs,):
        raise ValueError(f"input arity {x.shape} does not match {m.n_inputs} centre dimensions")
    d = np.sqrt(((m.centers - x) ** 2).sum(axis=1))
    return np.exp(-((d * m.bias) ** 2))


def grnn_predict(m: GrnnModel, x) -> float:
    k = kernel_activations(m, x)
    total = k.sum()
    if total == 0.0:
        # every kernel underflowed: nearest centre, lowest index on ties
        d2 = ((m.centers - np.asarray(x, dtype=float)) ** 2).sum(axis=1)
        return float(m.targets[int(np.argmin(d2))])
    return float(k @ m.targets / total)


def grnn_predict_batch(m: GrnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != m.n_inputs:
        raise ValueError(f"input arity {X.shape[1]} does not match {m.n_inputs} centre dimensions")
    d = np.sqrt(((X[:, None, :] - m.centers[None, :, :]) ** 2).sum(axis=2))
    K = np.exp(-((d * m.bias) ** 2))
    total = K.sum(axis=1)
    out = np.empty(X.shape[0])
    ok = total > 0
    out[ok] = (K[ok] @ m.targets) / total[ok]
    for i in np.flatnonzero(~ok):
        out[i] = grnn_predict(m, X[i])
    return out

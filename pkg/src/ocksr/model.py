"""One-class scoring model trained by solving a kernel linear system.

Training fits a projection f(z) = sum_i alpha_i k(z, x_i) whose value is
driven toward 1 on target rows (and 0 on any negative rows).  The
coefficients come from one symmetric positive definite solve
(K + delta I) alpha = nu performed with a Cholesky factorization, so no
eigen-decomposition is ever needed.  A probe's novelty is the distance
of its projection from the target value 1; appending rows updates the
retained factor instead of refitting.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .cholesky import (
    CholeskyFactor,
    NotPositiveDefinite,
    factor_batch,
    factor_extend,
    solve_lower_transposed,
    solve_upper,
)
from .kernel import KernelSpec, gram, kernel_cross, kernel_vector

logger = logging.getLogger(__name__)

# Retry regularizers tried in order when the Gram matrix is numerically
# singular at the requested delta.
DELTA_LADDER = (1e-8, 1e-6)

# Target value of the projection on (positive) training rows.
TARGET_MEAN = 1.0

_MAGIC = b"OCKSR1"
_FAMILY_CODES = {"rbf": 1}
_FAMILY_NAMES = {code: fam for fam, code in _FAMILY_CODES.items()}


class Decision(Enum):
    TARGET = "target"
    OUTLIER = "outlier"


class _StreamState:
    """Growable row and solve caches shared by a chain of appended models.

    Holds the training rows, their squared norms, and the half-solved
    response theta = R^-T nu in buffers with spare capacity, so an append
    costs one kernel row, one bordered factor column, and one scalar
    theta entry, with the final coefficients a single back substitution.
    Appending to the newest model writes in place; appending to an older
    one copies first.  Single writer per chain, like the factor storage.
    """

    __slots__ = ("X", "sq", "theta", "tip")

    def __init__(self, capacity: int, d: int):
        self.X = np.zeros((capacity, d))
        self.sq = np.zeros(capacity)
        self.theta = np.zeros(capacity)
        self.tip = 0

    @classmethod
    def from_rows(cls, X: np.ndarray, theta: np.ndarray) -> "_StreamState":
        n = X.shape[0]
        state = cls(n + max(64, n // 4), X.shape[1])
        state.X[:n] = X
        state.sq[:n] = np.einsum("ij,ij->i", X, X)
        state.theta[:n] = theta
        state.tip = n
        return state

    def append(self, row: np.ndarray, sq: float, theta: float,
               m: int) -> "_StreamState":
        state = self
        if m != self.tip or self.X.shape[0] < m + 1:
            state = _StreamState(m + 1 + max(64, (m + 1) // 4), self.X.shape[1])
            state.X[:m] = self.X[:m]
            state.sq[:m] = self.sq[:m]
            state.theta[:m] = self.theta[:m]
        state.X[m] = row
        state.sq[m] = sq
        state.theta[m] = theta
        state.tip = m + 1
        return state


@dataclass(frozen=True)
class Model:
    """Trained one-class model.

    ``nu`` is the response vector the coefficients were solved against:
    1 for positive rows and 0 for negative rows, in the order the rows
    are retained.  ``n_neg`` counts the negative rows.  ``factor`` and
    ``stream`` are in-memory caches enabling cheap appends; neither is
    serialized, and both are rebuilt on demand after loading.
    """

    X_train: np.ndarray
    alpha: np.ndarray
    nu: np.ndarray
    spec: KernelSpec
    n_neg: int = 0
    tau: float | None = None
    target_mean: float = TARGET_MEAN
    factor: CholeskyFactor | None = field(default=None, repr=False, compare=False)
    stream: _StreamState | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(np.asarray(self.X_train, dtype=np.float64))
        alpha = np.asarray(self.alpha, dtype=np.float64).ravel()
        nu = np.asarray(self.nu, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X_train must be a nonempty 2-d array")
        if alpha.shape[0] != X.shape[0] or nu.shape[0] != X.shape[0]:
            raise ValueError("alpha and nu must have one entry per training row")
        if not 0 <= self.n_neg <= X.shape[0]:
            raise ValueError("n_neg out of range")
        X.setflags(write=False)
        alpha.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "X_train", X)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "nu", nu)

    @property
    def n(self) -> int:
        return self.X_train.shape[0]

    @property
    def d(self) -> int:
        return self.X_train.shape[1]


def _as_rows(X, d: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise ValueError("expected a 2-d array of rows")
    if not np.isfinite(X).all():
        raise ValueError("training rows contain non-finite entries")
    if d is not None and X.shape[1] != d:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {d}")
    return X


def _solve_with_ladder(
    X: np.ndarray, nu: np.ndarray, spec: KernelSpec
) -> tuple[np.ndarray, CholeskyFactor, KernelSpec, np.ndarray]:
    """Factor the Gram matrix and solve for alpha, escalating delta on failure.

    Returns (alpha, factor, effective spec, theta) with theta the
    forward-substitution half of the solve, retained so appends can
    extend it entry by entry.
    """
    base = gram(X, replace(spec, delta=0.0)).K
    deltas = [spec.delta] + [d for d in DELTA_LADDER if d > spec.delta]
    last: NotPositiveDefinite | None = None
    for delta in deltas:
        K = base if delta == 0.0 else base + delta * np.eye(X.shape[0])
        try:
            factor = factor_batch(K)
        except NotPositiveDefinite as exc:
            last = exc
            logger.warning(
                "Gram matrix not positive definite at delta=%g (pivot %d)",
                delta, exc.pivot_index,
            )
            continue
        if delta != spec.delta:
            logger.warning("regularizer escalated from delta=%g to delta=%g",
                           spec.delta, delta)
        theta = solve_lower_transposed(factor, nu)
        alpha = solve_upper(factor, theta)
        return alpha, factor, replace(spec, delta=delta), theta
    assert last is not None
    raise last


def fit(X_pos, spec: KernelSpec) -> Model:
    """Train on target rows only.

    The response vector is all ones, so at delta = 0 every training row
    projects exactly to the target value 1 and the training projections
    have zero spread.
    """
    X = _as_rows(X_pos)
    nu = np.ones(X.shape[0])
    alpha, factor, eff, theta = _solve_with_ladder(X, nu, spec)
    stream = _StreamState.from_rows(X, theta)
    return Model(stream.X[: X.shape[0]], alpha, nu, eff, n_neg=0,
                 factor=factor, stream=stream)


def fit_supervised(X_pos, X_neg, spec: KernelSpec) -> Model:
    """Train on target rows plus known outlier rows.

    Rows are retained positives first, then negatives; the response
    vector is 1 on the positive block and 0 on the negative block.  With
    no negatives this reduces exactly to ``fit``.
    """
    X_pos = _as_rows(X_pos)
    if X_neg is None or len(X_neg) == 0:
        return fit(X_pos, spec)
    X_neg = _as_rows(X_neg, X_pos.shape[1])
    X = np.vstack([X_pos, X_neg])
    nu = np.concatenate([np.ones(X_pos.shape[0]), np.zeros(X_neg.shape[0])])
    alpha, factor, eff, theta = _solve_with_ladder(X, nu, spec)
    stream = _StreamState.from_rows(X, theta)
    return Model(stream.X[: X.shape[0]], alpha, nu, eff, n_neg=X_neg.shape[0],
                 factor=factor, stream=stream)


def _rebuild_caches(model: Model) -> tuple[CholeskyFactor, _StreamState]:
    factor = model.factor
    if factor is None:
        factor = factor_batch(gram(model.X_train, model.spec).K)
    stream = model.stream
    if stream is None:
        theta = solve_lower_transposed(factor, model.nu)
        stream = _StreamState.from_rows(model.X_train, theta)
    return factor, stream


def fit_incremental(model: Model, X_new) -> Model:
    """Append positive rows to a trained model without refactoring.

    Each new row contributes one bordered column to the retained
    Cholesky factor (one triangular solve) and one entry to the cached
    forward-substituted response, after which a single back substitution
    yields the enlarged coefficient vector.  The result matches a batch
    fit on the concatenated rows.  Appended rows are always treated as
    positives; adding negatives requires a refit.

    Raises:
        NotPositiveDefinite: a new row makes the system numerically
            singular (an exact duplicate at delta = 0, for instance).
    """
    X_new = _as_rows(X_new, model.d) if len(X_new) else None
    if X_new is None or X_new.shape[0] == 0:
        return model

    factor, stream = _rebuild_caches(model)
    spec = model.spec
    m = model.n
    for row in X_new:
        sq = float(row @ row)
        d2 = stream.sq[:m] + sq - 2.0 * (stream.X[:m] @ row)
        np.maximum(d2, 0.0, out=d2)
        k_new = np.exp(d2 / (-2.0 * spec.sigma**2))
        # self-kernel of the rbf family is exactly 1
        factor = factor_extend(factor, k_new, 1.0 + spec.delta)
        col = factor.column(m)
        theta = (1.0 - col[:m] @ stream.theta[:m]) / col[m]
        stream = stream.append(row, sq, theta, m)
        m += 1
    nu = np.concatenate([model.nu, np.ones(X_new.shape[0])])
    alpha = solve_upper(factor, stream.theta[:m])
    return Model(stream.X[:m], alpha, nu, spec, n_neg=model.n_neg,
                 tau=model.tau, factor=factor, stream=stream)


def score(model: Model, z) -> tuple[float, float]:
    """Return (projection, novelty) for one probe.

    Novelty is the absolute deviation of the projection from the target
    value 1; small novelty means target-like.
    """
    k = kernel_vector(model.X_train, z, model.spec)
    projection = float(k @ model.alpha)
    return projection, abs(projection - model.target_mean)


def score_batch(model: Model, Z) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``score`` over the rows of Z."""
    projections = kernel_cross(model.X_train, Z, model.spec) @ model.alpha
    return projections, np.abs(projections - model.target_mean)


def classify(model: Model, z, tau: float) -> Decision:
    """Threshold the novelty of z at tau (inclusive: novelty == tau is TARGET)."""
    tau = float(tau)
    if not (np.isfinite(tau) and tau >= 0.0):
        raise ValueError("tau must be a nonnegative real")
    _, novelty = score(model, z)
    return Decision.TARGET if novelty <= tau else Decision.OUTLIER


def project_train(model: Model) -> np.ndarray:
    """Projections of the retained training rows under the trained model.

    Uses raw kernel values (no delta), so at delta = 0 this reproduces
    the response vector up to solver rounding.
    """
    return kernel_cross(model.X_train, model.X_train, model.spec) @ model.alpha


def calibrate_threshold(X_pos, spec: KernelSpec, target_rejection: float) -> float:
    """Leave-one-out novelty threshold for a desired target rejection rate.

    Each training row is scored by a model fitted on the remaining rows;
    tau is the empirical (1 - target_rejection) quantile (linear
    interpolation) of those held-out novelty scores.  Rejection 0 gives
    the maximum held-out novelty.

    Args:
        X_pos: at least 3 target rows.
        spec: kernel configuration used for every leave-one-out fit.
        target_rejection: desired training rejection rate in [0, 1).
    """
    X = _as_rows(X_pos)
    n = X.shape[0]
    if n < 3:
        raise ValueError("leave-one-out calibration needs at least 3 rows")
    if not 0.0 <= target_rejection < 1.0:
        raise ValueError("target_rejection must lie in [0, 1)")
    novelties = np.empty(n)
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        held_out = fit(X[mask], spec)
        novelties[i] = score(held_out, X[i])[1]
        mask[i] = True
    return float(np.quantile(novelties, 1.0 - target_rejection))


def _canonical_order(model: Model) -> Model:
    """Reorder rows positives-first so n_neg fully describes the response."""
    if model.n_neg == 0:
        return model
    expected = np.concatenate([np.ones(model.n - model.n_neg),
                               np.zeros(model.n_neg)])
    if np.array_equal(model.nu, expected):
        return model
    order = np.argsort(model.nu == 0.0, kind="stable")
    return Model(model.X_train[order], model.alpha[order], model.nu[order],
                 model.spec, n_neg=model.n_neg, tau=model.tau)


def save_model(model: Model, path: str) -> None:
    """Serialize a model to the OCKSR1 binary format.

    Layout: magic, family code, flags (bit 0: tau present), sigma, delta,
    n, n_neg, d, optional tau, then X_train row-major and alpha, all
    reals as 64-bit IEEE little-endian.  Rows are stored positives first
    so the negative count recovers the response vector on load.
    """
    model = _canonical_order(model)
    flags = 1 if model.tau is not None else 0
    header = struct.pack(
        "<6sBB d d QQQ",
        _MAGIC, _FAMILY_CODES[model.spec.family], flags,
        model.spec.sigma, model.spec.delta,
        model.n, model.n_neg, model.d,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        if model.tau is not None:
            fh.write(struct.pack("<d", model.tau))
        fh.write(model.X_train.astype("<f8").tobytes(order="C"))
        fh.write(model.alpha.astype("<f8").tobytes())


class ModelFormatError(ValueError):
    """Raised when a model file fails structural validation."""


def load_model(path: str) -> Model:
    """Load a model saved by ``save_model``.

    Raises:
        ModelFormatError: bad magic, unknown family, or truncated payload.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    head_fmt = "<6sBB d d QQQ"
    head_size = struct.calcsize(head_fmt)
    if len(blob) < head_size:
        raise ModelFormatError(f"{path}: truncated header")
    magic, family_code, flags, sigma, delta, n, n_neg, d = struct.unpack_from(
        head_fmt, blob)
    if magic != _MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    if family_code not in _FAMILY_NAMES:
        raise ModelFormatError(f"{path}: unknown kernel family code {family_code}")
    offset = head_size
    tau = None
    if flags & 1:
        if len(blob) < offset + 8:
            raise ModelFormatError(f"{path}: truncated threshold")
        (tau,) = struct.unpack_from("<d", blob, offset)
        offset += 8
    expected = offset + 8 * (n * d + n)
    if len(blob) != expected:
        raise ModelFormatError(
            f"{path}: expected {expected} bytes, found {len(blob)}")
    X = np.frombuffer(blob, dtype="<f8", count=n * d, offset=offset)
    X = X.reshape(n, d).astype(np.float64)
    offset += 8 * n * d
    alpha = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).astype(
        np.float64)
    nu = np.concatenate([np.ones(n - n_neg), np.zeros(n_neg)])
    spec = KernelSpec(family=_FAMILY_NAMES[family_code], sigma=sigma, delta=delta)
    return Model(X, alpha, nu, spec, n_neg=n_neg, tau=tau)

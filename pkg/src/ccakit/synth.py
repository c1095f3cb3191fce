"""Ground-truth generator: datasets with planted canonical modes.

Mode i plants a latent pair with population correlation exactly rho_i; the
remaining columns are independent noise.  An optional random orthogonal
rotation of each side hides the structure without changing the canonical
correlations, and optional per-mode supports embed a mode in a sparse set
of columns (as exact copies of the latent, so the planted rho stays exact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .data import Dataset
from .errors import DataError, DimensionError


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic dataset pair."""

    n: int
    p: int
    q: int
    rho: tuple[float, ...]
    sparse_support: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...] | None = None
    rotate: bool = False
    seed: int = 0

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        if len(rho) == 0:
            raise DataError("plant at least one mode")
        if any(not 0.0 <= r <= 1.0 for r in rho):
            raise DataError("planted correlations must lie in [0, 1]")
        if any(rho[i] < rho[i + 1] for i in range(len(rho) - 1)):
            raise DataError("planted correlations must be nonincreasing")
        if len(rho) > min(self.p, self.q):
            raise DimensionError("more planted modes than min(p, q)")
        if self.n < 2:
            raise DataError("need at least two rows")
        object.__setattr__(self, "rho", rho)
        if self.sparse_support is not None:
            supp = tuple(
                (tuple(int(i) for i in left), tuple(int(j) for j in right))
                for left, right in self.sparse_support
            )
            if len(supp) != len(rho):
                raise DataError("sparse_support must list one (left, right) entry per mode")
            for side, dim in ((0, self.p), (1, self.q)):
                used = []
                for entry in supp:
                    cols = entry[side]
                    if not cols:
                        raise DataError("support sets must be non-empty")
                    if any(not 0 <= c < dim for c in cols):
                        raise DimensionError("support column index out of range")
                    used.extend(cols)
                if len(used) != len(set(used)):
                    raise DataError("support sets must be disjoint within a side")
            object.__setattr__(self, "sparse_support", supp)

    @property
    def n_modes(self) -> int:
        return len(self.rho)


@dataclass(frozen=True)
class PlantedTruth:
    """Planted weights (unit variates) and correlations, post-rotation."""

    rho: tuple[float, ...]
    x_weights: np.ndarray  # (p, m): X @ x_weights[:, i] is the left latent i
    y_weights: np.ndarray  # (q, m)
    left_support: tuple[tuple[int, ...], ...] | None
    right_support: tuple[tuple[int, ...], ...] | None

    def variates(self, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return X @ self.x_weights, Y @ self.y_weights

    def to_dict(self) -> dict:
        return {
            "rho": list(self.rho),
            "x_weights": [[float(v) for v in row] for row in self.x_weights],
            "y_weights": [[float(v) for v in row] for row in self.y_weights],
            "left_support": None if self.left_support is None
            else [list(s) for s in self.left_support],
            "right_support": None if self.right_support is None
            else [list(s) for s in self.right_support],
        }


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish orthogonal matrix: QR of a Gaussian with sign-fixed diagonal."""
    qmat, rmat = np.linalg.qr(rng.standard_normal((dim, dim)))
    return qmat * np.sign(np.diag(rmat))


def generate(spec: SynthSpec) -> tuple[Dataset, Dataset, PlantedTruth]:
    """Draw one dataset pair with the planted modes of `spec`."""
    rng = substream(spec.seed, 0)
    n, p, q, m = spec.n, spec.p, spec.q, spec.n_modes
    z = rng.standard_normal((n, m))
    ex = rng.standard_normal((n, m))
    ey = rng.standard_normal((n, m))
    rho = np.asarray(spec.rho)
    left_latent = np.sqrt(rho) * z + np.sqrt(1.0 - rho) * ex
    right_latent = np.sqrt(rho) * z + np.sqrt(1.0 - rho) * ey

    X = rng.standard_normal((n, p))
    Y = rng.standard_normal((n, q))
    wx = np.zeros((p, m))
    wy = np.zeros((q, m))
    if spec.sparse_support is None:
        X[:, :m] = left_latent
        Y[:, :m] = right_latent
        wx[:m, :] = np.eye(m)
        wy[:m, :] = np.eye(m)
        left_support = right_support = None
    else:
        left_support = tuple(entry[0] for entry in spec.sparse_support)
        right_support = tuple(entry[1] for entry in spec.sparse_support)
        for i, (ls, rs) in enumerate(zip(left_support, right_support)):
            for c in ls:
                X[:, c] = left_latent[:, i]
                wx[c, i] = 1.0 / len(ls)
            for c in rs:
                Y[:, c] = right_latent[:, i]
                wy[c, i] = 1.0 / len(rs)

    if spec.rotate:
        qx = random_orthogonal(p, rng)
        qy = random_orthogonal(q, rng)
        X = X @ qx
        Y = Y @ qy
        wx = qx.T @ wx
        wy = qy.T @ wy

    x_names = tuple(f"x{j + 1}" for j in range(p))
    y_names = tuple(f"y{j + 1}" for j in range(q))
    truth = PlantedTruth(spec.rho, wx, wy, left_support, right_support)
    return Dataset(x_names, X), Dataset(y_names, Y), truth

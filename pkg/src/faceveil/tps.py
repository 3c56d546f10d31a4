"""Thin-plate-spline interpolation of sparse 2D correspondences.

With zero regularization the interpolant passes exactly through the
control points and its affine part reproduces translations and affine
maps exactly; positive regularization trades exactness for smoothness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import SingularSystem


def _kernel(r2: np.ndarray) -> np.ndarray:
    # U(r) = r^2 log r = 0.5 * r^2 log r^2, with U(0) = 0
    out = np.zeros_like(r2)
    nz = r2 > 0
    out[nz] = 0.5 * r2[nz] * np.log(r2[nz])
    return out


@dataclass(frozen=True)
class TPSModel:
    control: np.ndarray   # (n, 2) source-domain control points
    weights: np.ndarray   # (n, 2) kernel weights per output coordinate
    affine: np.ndarray    # (3, 2) [a0; A] affine part per output coordinate

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        u = _kernel(cdist(points, self.control, "sqeuclidean"))
        return (self.affine[0]
                + points @ self.affine[1:]
                + u @ self.weights)


def fit_tps(control: np.ndarray, values: np.ndarray,
            regularization: float = 0.0) -> TPSModel:
    """Fit f: R^2 -> R^2 with f(control[i]) ~= values[i]."""
    control = np.asarray(control, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    n = control.shape[0]
    if n < 3:
        raise SingularSystem("need at least 3 control points")

    d2 = cdist(control, control, "sqeuclidean")
    off_diag = d2.copy()
    np.fill_diagonal(off_diag, np.inf)
    if off_diag.min() < 1e-18:
        raise SingularSystem("coincident control points")
    centered = control - control.mean(axis=0)
    if np.linalg.svd(centered, compute_uv=False)[1] < 1e-9:
        raise SingularSystem("collinear control points")

    k = _kernel(d2)
    if regularization > 0:
        k = k + regularization * np.eye(n)
    p = np.hstack([np.ones((n, 1)), control])
    system = np.zeros((n + 3, n + 3))
    system[:n, :n] = k
    system[:n, n:] = p
    system[n:, :n] = p.T
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = values
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return TPSModel(control, sol[:n], sol[n:])


def tps_grid(model: TPSModel, out_size: tuple[int, int]) -> np.ndarray:
    """Evaluate the model on every pixel; returns (H, W, 2) of (x, y)."""
    h, w = out_size
    ys, xs = np.mgrid[0:h, 0:w]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    return model(pts).reshape(h, w, 2)

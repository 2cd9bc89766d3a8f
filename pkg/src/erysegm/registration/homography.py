"""Homography estimation: Hartley-normalized DLT and seeded RANSAC.

Homographies are plain 3x3 float64 arrays normalized so the bottom-right
entry is 1 (Frobenius norm 1 when that entry is numerically zero).
"""

from __future__ import annotations

import numpy as np

from ..errors import AlignmentError
from .features import Keypoint, Match

DEFAULT_INLIER_PX = 3.0
DEFAULT_MAX_ITERS = 2000

_MIN_TRIANGLE_AREA = 1e-6  # px^2; collinearity cutoff for minimal samples


def normalize_homography(h: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(h)
    if abs(h[2, 2]) > 1e-8 * norm:
        return h / h[2, 2]
    h = h / norm
    # Fix the overall sign so normalization is unique.
    flat = h.ravel()
    lead = flat[np.argmax(np.abs(flat))]
    return h if lead >= 0 else -h


def project_points(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply h to (N, 2) points; returns (N, 2)."""
    ph = np.column_stack([pts, np.ones(len(pts))])
    q = ph @ h.T
    w = q[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        return q[:, :2] / w[:, None]


def _hartley_transform(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centroid = pts.mean(axis=0)
    d = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / max(d, 1e-12)
    t = np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])
    return t, (pts - centroid) * s


def estimate_homography_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Least-squares homography with dst ~ H @ src, via normalized DLT.

    Exact for 4 non-degenerate correspondences; raises on fewer than 4
    pairs or on rank-deficient (collinear/duplicate) configurations.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise AlignmentError("point lists must both be (N, 2)")
    n = src.shape[0]
    if n < 4:
        raise AlignmentError(f"insufficient-points: need >= 4 correspondences, got {n}")

    t_src, sn = _hartley_transform(src)
    t_dst, dn = _hartley_transform(dst)

    x, y = sn[:, 0], sn[:, 1]
    u, v = dn[:, 0], dn[:, 1]
    zero = np.zeros(n)
    one = np.ones(n)
    a = np.empty((2 * n, 9))
    a[0::2] = np.column_stack([x, y, one, zero, zero, zero, -u * x, -u * y, -u])
    a[1::2] = np.column_stack([zero, zero, zero, x, y, one, -v * x, -v * y, -v])

    _, s, vt = np.linalg.svd(a)
    if s[7] < 1e-10 * s[0]:
        raise AlignmentError("degenerate-configuration: correspondence design matrix is rank deficient")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ hn @ t_src
    h = normalize_homography(h)
    if abs(np.linalg.det(h)) < 1e-12:
        raise AlignmentError("degenerate-configuration: estimated homography is singular")
    return h


_TRIANGLES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


def _collinear_sample(pts: np.ndarray) -> bool:
    # Reject the sample if any of its 4 triangles is (near-)degenerate;
    # duplicate points fall out as zero-area triangles.
    for i, j, k in _TRIANGLES:
        ux = pts[j, 0] - pts[i, 0]
        uy = pts[j, 1] - pts[i, 1]
        vx = pts[k, 0] - pts[i, 0]
        vy = pts[k, 1] - pts[i, 1]
        if 0.5 * abs(ux * vy - uy * vx) < _MIN_TRIANGLE_AREA:
            return True
    return False


def _solve_h4(src: np.ndarray, dst: np.ndarray) -> np.ndarray | None:
    """Exact homography through 4 pairs with h33 fixed to 1.

    Minimal-sample fast path for the RANSAC loop; configurations that
    need h33 = 0 (or are otherwise singular) return None and the caller
    falls back to the full normalized DLT.
    """
    a = np.zeros((8, 8))
    b = np.empty(8)
    x, y = src[:, 0], src[:, 1]
    u, v = dst[:, 0], dst[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    b[0::2] = u
    b[1::2] = v
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    return np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]
    )


def _match_points(
    matches: list[Match], kp_a: list[Keypoint], kp_b: list[Keypoint]
) -> tuple[np.ndarray, np.ndarray]:
    pts_a = np.array([[kp_a[m.index_a].x, kp_a[m.index_a].y] for m in matches])
    pts_b = np.array([[kp_b[m.index_b].x, kp_b[m.index_b].y] for m in matches])
    return pts_a, pts_b


def ransac_homography(
    matches: list[Match],
    kp_a: list[Keypoint],
    kp_b: list[Keypoint],
    inlier_px: float = DEFAULT_INLIER_PX,
    max_iters: int = DEFAULT_MAX_ITERS,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Consensus homography mapping keypoints of a onto keypoints of b.

    Runs the full iteration budget (no data-dependent early exit) so the
    result is a pure function of inputs and seed. Collinear minimal
    samples are resampled without consuming an iteration. The returned
    model is re-estimated by DLT on the best consensus inlier set; the
    inlier index array refers to positions in ``matches``.
    """
    n = len(matches)
    if n < 4:
        raise AlignmentError(f"insufficient-matches: need >= 4, got {n}")
    pts_a, pts_b = _match_points(matches, kp_a, kp_b)

    rng = np.random.default_rng(seed)
    thresh_sq = float(inlier_px) ** 2
    best_count = 0
    best_err = np.inf
    best_inliers: np.ndarray | None = None

    pts_a_h = np.column_stack([pts_a, np.ones(n)])
    completed = 0
    attempts = 0
    attempt_cap = max(max_iters * 20, 100)
    while completed < max_iters and attempts < attempt_cap:
        attempts += 1
        idx = rng.integers(0, n, size=4)
        src, dst = pts_a[idx], pts_b[idx]
        if _collinear_sample(src) or _collinear_sample(dst):
            continue
        completed += 1
        h = _solve_h4(src, dst)
        if h is None:
            try:
                h = estimate_homography_dlt(src, dst)
            except AlignmentError:
                continue
        q = pts_a_h @ h.T
        with np.errstate(divide="ignore", invalid="ignore"):
            proj = q[:, :2] / q[:, 2:3]
        err_sq = ((proj - pts_b) ** 2).sum(axis=1)
        err_sq = np.where(np.isfinite(err_sq), err_sq, np.inf)
        inliers = err_sq <= thresh_sq
        count = int(inliers.sum())
        support_err = float(err_sq[inliers].sum()) if count else np.inf
        if count > best_count or (count == best_count and support_err < best_err):
            best_count = count
            best_err = support_err
            best_inliers = inliers

    if best_inliers is None or best_count < 4:
        raise AlignmentError(f"no-consensus: best inlier set has {best_count} matches (< 4)")

    inlier_idx = np.nonzero(best_inliers)[0]
    h_final = estimate_homography_dlt(pts_a[inlier_idx], pts_b[inlier_idx])
    return h_final, inlier_idx


def reprojection_rmse(
    h: np.ndarray,
    matches: list[Match],
    kp_a: list[Keypoint],
    kp_b: list[Keypoint],
    indices: np.ndarray,
) -> float:
    """RMSE in pixels of h over the selected match indices."""
    pts_a, pts_b = _match_points([matches[i] for i in indices], kp_a, kp_b)
    err_sq = ((project_points(h, pts_a) - pts_b) ** 2).sum(axis=1)
    return float(np.sqrt(err_sq.mean()))

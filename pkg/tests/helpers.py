"""Shared independent oracles used by unit and acceptance tests."""

import numpy as np

from residentid.geometry import Segment


def _point_segment_distances(points: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    d = q1 - q0
    denom = float(d @ d)
    t = np.clip(((points - q0) @ d) / denom, 0.0, 1.0)
    proj = q0 + t[:, None] * d
    return np.linalg.norm(points - proj, axis=1)


def _refine_min_distance(a0, a1, b0, b1, samples: int, rounds: int) -> float:
    """Distance from a point on segment A to segment B is convex in the
    parameter, so nested grid sampling converges to the true minimum."""
    lo, hi = 0.0, 1.0
    best = np.inf
    for _ in range(rounds):
        ts = np.linspace(lo, hi, samples)
        pts = a0 + ts[:, None] * (a1 - a0)
        dists = _point_segment_distances(pts, b0, b1)
        i = int(np.argmin(dists))
        best = float(dists[i])
        step = (hi - lo) / (samples - 1)
        lo = max(0.0, ts[i] - step)
        hi = min(1.0, ts[i] + step)
    return best


def sampled_min_distance(l1: Segment, l2: Segment, samples: int = 1000, rounds: int = 4) -> float:
    """Minimum distance between two segments via dense point sampling."""
    a0 = np.asarray(l1.a.coords[:2])
    a1 = np.asarray(l1.b.coords[:2])
    b0 = np.asarray(l2.a.coords[:2])
    b1 = np.asarray(l2.b.coords[:2])
    return min(
        _refine_min_distance(a0, a1, b0, b1, samples, rounds),
        _refine_min_distance(b0, b1, a0, a1, samples, rounds),
    )


def sampling_oracle_intersects(l1: Segment, l2: Segment, threshold: float = 1e-9) -> bool:
    return sampled_min_distance(l1, l2) < threshold


def near_degenerate(l1: Segment, l2: Segment, threshold: float = 1e-9) -> bool:
    """True when the pair sits within threshold of a tie configuration
    (a cross product near zero or a grazing contact), where the exact
    sign tests and the sampling oracle may legitimately differ."""
    c1 = np.asarray(l1.a.coords[:2])
    c2 = np.asarray(l1.b.coords[:2])
    c3 = np.asarray(l2.a.coords[:2])
    c4 = np.asarray(l2.b.coords[:2])

    def cross(u, v, o):
        return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0])

    scale = max(
        np.linalg.norm(c2 - c1), np.linalg.norm(c4 - c3), 1.0
    )
    crosses = [
        cross(c1, c4, c3),
        cross(c2, c4, c3),
        cross(c3, c2, c1),
        cross(c4, c2, c1),
    ]
    if any(abs(v) < threshold * scale * scale for v in crosses):
        return True
    gap = sampled_min_distance(l1, l2)
    return 0.0 < gap < threshold

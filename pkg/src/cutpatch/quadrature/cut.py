"""Quadrature on cut cells from the divergence theorem.

For a region w with counter-clockwise boundary, integrating
F(x1, x2) = int_a^{x2} f(x1, t) dt against the boundary gives

    int_w f = sum_k int_0^1 gamma_1'(s) (a - gamma_2(s)) int_0^1 f(gamma_1(s), a + t (gamma_2(s) - a)) dt ds

so every boundary segment contributes a tensor rule in (s, t). The inner
direction needs ``p_f // 2 + 1`` points, the outer one ``p_f p_gamma + p_gamma``
for an integrand of degree ``p_f`` per variable and a boundary of degree
``p_gamma``. Weights can be negative.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from ..utils.errors import OrientationError
from .gauss import gauss1d, points_for_degree

logger = logging.getLogger(__name__)

AREA_TOL = 1e-14


@dataclass(frozen=True)
class CutRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def area(self):
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.weights)

    def integrate(self, f):
        """Apply the rule to a vectorized ``f(points) -> values``."""
        return float(np.sum(self.weights * f(self.points)))


def rule_sizes(p_f, p_gamma):
    """(inner, outer) point counts per boundary segment."""
    return points_for_degree(p_f), p_f * p_gamma + p_gamma


def segment_rule(segment, p_f, p_gamma, a):
    n_inner, n_outer = rule_sizes(p_f, p_gamma)
    outer = gauss1d(n_outer)
    inner = gauss1d(n_inner)
    g = segment.eval(outer.points)
    dg1 = segment.derivative(outer.points)[:, 0]
    x1 = np.repeat(g[:, 0], n_inner)
    x2 = a + np.outer(g[:, 1] - a, inner.points).ravel()
    w = np.outer(dg1 * (a - g[:, 1]) * outer.weights, inner.weights).ravel()
    return np.stack([x1, x2], axis=1), w


def cut_cell_rule(loops, p_f, p_gamma=None, a=None):
    """Quadrature rule for the region bounded by ``loops``.

    Args:
        loops: Oriented trim loops of the region (outer ccw, holes cw)
        p_f: Integrand degree per variable to integrate exactly
        p_gamma: Boundary degree; defaults to the highest segment degree
        a: Lower bound of the vertical integration; defaults to min x2 of the vertices

    Raises:
        OrientationError: if the weights sum to a negative area
    """
    segments = [seg for loop in loops for seg in loop.segments]
    if not segments:
        return CutRule(np.zeros((0, 2)), np.zeros(0))
    if p_gamma is None:
        p_gamma = max(seg.degree for seg in segments)
    if a is None:
        a = min(float(seg.start[1]) for seg in segments)
    points, weights = zip(*(segment_rule(seg, p_f, p_gamma, a) for seg in segments))
    rule = CutRule(np.concatenate(points), np.concatenate(weights))
    if rule.area < -AREA_TOL:
        raise OrientationError(f"cut rule has negative area {rule.area:.3e}; loops must run counter-clockwise")
    return rule


def tensor_rule(box, p_f):
    """Tensor Gauss rule on an axis-aligned cell exact for Q_{p_f}."""
    g = gauss1d(points_for_degree(p_f))
    x = box.x0 + box.width * g.points
    y = box.y0 + box.height * g.points
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(g.weights, g.weights) * box.area
    return CutRule(np.stack([X.ravel(), Y.ravel()], axis=1), W.ravel())


def prune_zero_weights(rule, tol=0.0):
    """Drop points whose weight is at most ``tol`` times the largest weight magnitude."""
    if len(rule) == 0:
        return rule
    keep = np.abs(rule.weights) > tol * np.max(np.abs(rule.weights))
    logger.debug("pruned %d of %d quadrature points", int(np.sum(~keep)), len(rule))
    return CutRule(rule.points[keep], rule.weights[keep])


def write_rule_csv(rules, path):
    """Dump ``{cell: CutRule}`` as rows of cell index, point and weight."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["i", "j", "x1", "x2", "weight"])
        for (i, j), rule in sorted(rules.items()):
            for (x1, x2), w in zip(rule.points, rule.weights):
                writer.writerow([i, j, repr(float(x1)), repr(float(x2)), repr(float(w))])

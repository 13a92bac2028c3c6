"""Losses and the analytic-vs-finite-difference gradient contract."""

import numpy as np
import pytest

from sceneforge.splats.losses import (
    build_knn_edges,
    loss_depth,
    loss_rgb,
    loss_rigidity,
    total_loss,
)
from sceneforge.verify import check_gradient_suite


class TestLossExamples:
    def test_rgb_identical_is_zero(self, rng):
        img = rng.random((6, 8, 3))
        value, grad = loss_rgb(img, img.copy(), np.ones((6, 8)))
        assert value == 0.0

    def test_rgb_mask_zero_ignores_error(self, rng):
        value, _ = loss_rgb(rng.random((6, 8, 3)), rng.random((6, 8, 3)),
                            np.zeros((6, 8)))
        assert value == 0.0

    def test_depth_single_pixel_value(self):
        # rendered inverse depth 1, target inverse depth 2 -> |1-2| = 1
        render = np.array([[1.0]])
        target = np.array([[0.5]])
        value, _ = loss_depth(render, np.array([[1.0]]), target,
                              np.array([[True]]), np.array([[1.0]]))
        assert value == pytest.approx(1.0)

    def test_depth_needs_render_coverage(self):
        value, _ = loss_depth(np.array([[1.0]]), np.array([[0.0]]), np.array([[0.5]]),
                              np.array([[True]]), np.array([[1.0]]))
        assert value == 0.0

    def test_rigidity_uniform_translation_is_zero(self, rng):
        delta = np.tile(np.array([0.3, -0.2, 0.1]), (10, 1))
        edges = build_knn_edges(rng.standard_normal((10, 3)), k=3)
        value, grad = loss_rigidity(delta, edges)
        assert value == 0.0 and not grad.any()

    def test_rigidity_unit_difference_edge(self):
        delta = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        edges = np.array([[0, 1]])
        value, grad = loss_rigidity(delta, edges)
        assert value == pytest.approx(1.0)
        np.testing.assert_allclose(grad[0], [2.0, 0.0, 0.0])

    def test_rigidity_empty_graph(self):
        value, _ = loss_rigidity(np.zeros((4, 3)), np.zeros((0, 2), dtype=np.int64))
        assert value == 0.0

    def test_total_loss_linear_in_lambdas(self):
        assert total_loss(1.0, 2.0, 3.0, 1.0, 1.0) == 6.0
        assert total_loss(1.0, 2.0, 3.0, 0.5, 2.0) == 8.0
        assert total_loss(0.0, 0.0, 0.0) == 0.0

    def test_total_matches_hand_sum(self):
        assert total_loss(0.25, 0.5, 0.125, 2.0, 4.0) == pytest.approx(0.25 + 1.0 + 0.5)


class TestGradients:
    def test_analytic_matches_finite_differences(self):
        result = check_gradient_suite(num_configs=8, samples_per_class=5, seed=11)
        assert result.passed, result.detail

    def test_knn_edges_undirected_unique(self, rng):
        pts = rng.standard_normal((20, 3))
        edges = build_knn_edges(pts, k=4)
        assert np.all(edges[:, 0] < edges[:, 1])
        assert len(np.unique(edges, axis=0)) == len(edges)

"""Gradient attention for point-cloud local feature aggregation."""

import json

from ._core import (
    EdgeGeometry,
    GamConfig,
    GamError,
    GamParams,
    NeighborhoodIndex,
    PointCloud,
    __version__,
    attention_weights,
    ball_query,
    bench_gradient_methods,
    depth_gradients,
    edge_geometry,
    farthest_point_sample,
    gam_forward,
    generate_shapes,
    gradcheck,
    gradient_vectors,
    init_params,
    knn,
    pca_normals,
    read_cloud,
    synthetic_cloud,
    validate_cloud,
    write_cloud,
)
from ._core import _train_classifier_json


def train_classifier(n_per_class, noise_sigma, config, epochs=30, lr=0.01, gam_enabled=True, batch_size=1):
    """Train the synthetic shape classifier and return the report as a dict."""
    return json.loads(
        _train_classifier_json(n_per_class, noise_sigma, config, epochs, lr, gam_enabled, batch_size)
    )


__all__ = [
    "EdgeGeometry",
    "GamConfig",
    "GamError",
    "GamParams",
    "NeighborhoodIndex",
    "PointCloud",
    "attention_weights",
    "ball_query",
    "bench_gradient_methods",
    "depth_gradients",
    "edge_geometry",
    "farthest_point_sample",
    "gam_forward",
    "generate_shapes",
    "gradcheck",
    "gradient_vectors",
    "init_params",
    "knn",
    "pca_normals",
    "read_cloud",
    "synthetic_cloud",
    "train_classifier",
    "validate_cloud",
    "write_cloud",
]

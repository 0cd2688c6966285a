from ._molmap import (
    CoincidenceImage,
    GroundTruth,
    analyze,
    clusters_phantom,
    exact_detector_distribution,
    forward_transform,
    inverse_transform,
    simulate,
    watershed_labels,
)

__all__ = [
    "CoincidenceImage",
    "GroundTruth",
    "analyze",
    "clusters_phantom",
    "exact_detector_distribution",
    "forward_transform",
    "inverse_transform",
    "simulate",
    "watershed_labels",
]

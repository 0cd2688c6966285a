import json

import pytest

import molmap


def test_ground_truth_roundtrip():
    gt = molmap.GroundTruth(16, [(3, 4, 0.02), (10, 10, 0.03)])
    assert gt.n == 16
    assert gt.molecules == [(3, 4, 0.02), (10, 10, 0.03)]
    back = molmap.GroundTruth.from_json(gt.to_json())
    assert back.molecules == gt.molecules
    with pytest.raises(Exception):
        molmap.GroundTruth(16, [(20, 4, 0.02)])


def test_simulate_conserves_pulses():
    gt = molmap.GroundTruth(9, [(4, 4, 0.05)] * 5)
    img = molmap.simulate(gt, fwhm=3.0, t=400, md=4, seed=11)
    assert img.n == 9 and img.md == 4 and img.t == 400
    assert len(img.planes) == 5
    for p in range(81):
        assert sum(plane[p] for plane in img.planes) == 400


def test_simulate_deterministic():
    gt = molmap.GroundTruth(9, [(4, 4, 0.05)] * 3)
    a = molmap.simulate(gt, 3.0, 300, 4, 7)
    b = molmap.simulate(gt, 3.0, 300, 4, 7)
    c = molmap.simulate(gt, 3.0, 300, 4, 8)
    assert a.planes == b.planes
    assert a.planes != c.planes


def test_transform_roundtrip():
    s = [0.06, 0.002, 0.0001, 0.00001]
    D = molmap.forward_transform(s, md=4)
    assert len(D) == 5
    assert abs(sum(D) - 1.0) < 1e-12
    degenerate, back = molmap.inverse_transform(D)
    assert not degenerate
    assert all(abs(a - b) < 1e-9 for a, b in zip(s, back))


def test_exact_distribution_normalized():
    D = molmap.exact_detector_distribution([0.1, 0.2, 0.05], md=4)
    assert abs(sum(D) - 1.0) < 1e-12
    assert all(v >= 0 for v in D)


def test_watershed_labels():
    gt = molmap.GroundTruth(32, [(8, 8, 0.2)] * 10 + [(24, 24, 0.2)] * 10)
    img = molmap.simulate(gt, 2.5, 4000, 4, seed=3)
    labels = molmap.watershed_labels(img, smooth_fwhm=2.5)
    assert len(labels) == 32 * 32
    assert labels[8 * 32 + 8] != 0
    assert labels[24 * 32 + 24] != 0
    assert labels[8 * 32 + 8] != labels[24 * 32 + 24]


def test_analyze_end_to_end():
    phantom = molmap.clusters_phantom(40, seed=5, n_clusters=3, brightness=0.05)
    sted = molmap.simulate(phantom, 2.5, 3000, 4, seed=21, background=0.002, sted=True)
    confocal = molmap.simulate(phantom, 5.0, 3000, 4, seed=22, background=0.002)
    result = json.loads(molmap.analyze(sted, confocal, 2.5, 5.0, alpha=0.1, n_sim=60))
    assert result["alpha"] == 0.1
    for seg in result["segments"]:
        lo, hi = seg["ci"]
        assert 0.0 <= lo <= hi
        assert seg["pixels"]

import numpy as np
import pytest

import ssn


def test_intervals():
    assert ssn.iou((0, 10), (5, 15)) == pytest.approx(1 / 3)
    ap = ssn.augment((10, 20), 100.0)
    assert tuple(ap.starting) == (5.0, 10.0)
    assert tuple(ap.ending) == (20.0, 25.0)
    kept = ssn.nms([((0, 10), 0.9), ((1, 10), 0.8), ((20, 30), 0.5)], 0.7)
    assert [tuple(k.interval) for k in kept] == [(0.0, 10.0), (20.0, 30.0)]


def test_tag():
    a = [0.1] * 10 + [0.9] * 10 + [0.1] * 10
    basins = ssn.flood_basins(a, 0.5)
    assert [tuple(b) for b in basins] == [(10.0, 20.0)]
    props = ssn.generate_proposals(a)
    assert any(tuple(p.interval) == (10.0, 20.0) for p in props)


def test_stpp_pooling_is_mean():
    f = np.arange(40, dtype=float).reshape(20, 2)
    out = ssn.stpp_features(f, (4, 12))
    assert out["course"].shape[0] == 2 * 3
    np.testing.assert_allclose(out["course"][:2], f[4:12].mean(axis=0))


def test_pipeline_end_to_end():
    cfg = ssn.SyntheticConfig()
    cfg.num_videos = 12
    cfg.seed = 3
    videos = ssn.fit_actionness(ssn.generate_synthetic(cfg), epochs=30)
    assert all(len(v.actionness) == v.num_snippets for v in videos)
    proposals = ssn.propose(videos, top_k=50)
    gts = ssn.all_instances(videos)
    rec = ssn.recall_at_iou({k: [p.interval for p in v] for k, v in proposals.items()}, gts, 0.5)
    assert 0.0 <= rec <= 1.0

    tc = ssn.TrainConfig()
    tc.epochs = 3
    params, losses = ssn.train(videos, proposals, tc, num_classes=cfg.num_classes)
    assert len(losses) == 3 and np.all(np.isfinite(losses))

    fast = ssn.detect(videos, proposals, params)
    slow = ssn.detect(videos, proposals, params, naive=True)
    assert len(fast) == len(slow)
    for a, b in zip(fast, slow):
        assert a.score == pytest.approx(b.score, abs=1e-9)
    report = ssn.mean_ap(fast, gts)
    assert 0.0 <= report["average"] <= 1.0


def test_dimension_mismatch_raises():
    videos = ssn.generate_synthetic(ssn.SyntheticConfig())
    params = ssn.ModelParams.zeros(2, videos[0].features.shape[1] + 1)
    with pytest.raises(ValueError):
        ssn.detect(videos, {}, params)


def test_file_round_trip(tmp_path):
    f = np.random.default_rng(0).normal(size=(7, 3))
    path = tmp_path / "x.ssnf"
    ssn.write_features(path, f)
    np.testing.assert_array_equal(ssn.read_features(path), f.astype(np.float32).astype(float))

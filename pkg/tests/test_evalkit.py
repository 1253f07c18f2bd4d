import numpy as np
import pytest

from damburst.evalkit import (
    boundary_mask,
    compare_to_ground_truth,
    counter_noise,
    gen_step_scene,
    gen_texture_scene,
    same_partition,
)


def test_counter_noise_deterministic():
    a = counter_noise((8, 8), 2.0, key=3)
    assert np.array_equal(a, counter_noise((8, 8), 2.0, key=3))
    assert not np.array_equal(a, counter_noise((8, 8), 2.0, key=4))


def test_step_scene():
    s = gen_step_scene(30, 4, [10, 100, 200])
    assert s.raster.samples[0, :, 0].tolist() == [10] * 10 + [100] * 10 + [200] * 10
    assert s.ground_truth[0].tolist() == [1] * 10 + [2] * 10 + [3] * 10
    assert s.metadata["warnings"] == []
    narrow = gen_step_scene(12, 4, [0, 50, 100])
    assert len(narrow.metadata["warnings"]) == 3
    with pytest.raises(ValueError):
        gen_step_scene(10, 4, [1])


def test_texture_scene():
    s = gen_texture_scene(8, 4, 2, 100)
    img = s.raster.samples[:, :, 0]
    assert np.all(img[:, :4] == 32)
    assert img[0, 4:].tolist() == [78, 78, 178, 178]
    assert img[2, 4:].tolist() == [178, 178, 78, 78]
    assert s.ground_truth[0].tolist() == [1] * 4 + [2] * 4
    with pytest.raises(ValueError):
        gen_texture_scene(8, 4, 1, 100)


def test_same_partition():
    a = np.array([[1, 1, 2], [3, 3, 2]])
    assert same_partition(a, a * 7 + 1)
    assert not same_partition(a, np.array([[1, 1, 1], [3, 3, 1]]))


def test_boundary_mask():
    lab = np.array([[1, 1, 2, 2]])
    assert boundary_mask(lab).tolist() == [[False, True, True, False]]


def test_compare_perfect_and_over():
    gt = np.repeat([[1, 1, 2, 2]], 4, axis=0)
    perfect = compare_to_ground_truth(gt * 5, gt)
    assert perfect["over_seg_count"] == 0 and perfect["under_seg_flags"] == []
    assert perfect["boundary_distance_stats"]["max"] == 0
    over = gt.copy()
    over[:2, :2] = 9
    res = compare_to_ground_truth(over, gt)
    assert res["over_seg_count"] == 1


def test_compare_under():
    gt = np.repeat([[1, 1, 2, 2]], 4, axis=0)
    res = compare_to_ground_truth(np.ones_like(gt), gt)
    assert res["under_seg_flags"] == [1]
    with pytest.raises(ValueError):
        compare_to_ground_truth(np.ones((2, 2)), gt)

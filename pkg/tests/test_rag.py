import math

import numpy as np
import pytest
from scipy import ndimage

from damburst import rag
from damburst.canny import CannyParams, canny_detail
from damburst.evalkit import rebuild_oracle, substitute_labels
from damburst.gradient import haar_gradient
from damburst.rag import Dam, GraphError, Region, RegionGraph, build, dam_strength, ind
from damburst.raster_io import Raster, to_luminance
from damburst.watershed import watershed


def region(rid, means, n=1, gsum=0.0):
    return Region(rid, n, gsum, np.asarray(means, dtype=float) * n)


def dam(a, b, length, strong):
    return Dam(a, b, set(range(length)), set(range(strong)))


def test_ind_block_means():
    assert ind(region(1, (120, 117, 116)), region(2, (112, 108, 101))) == pytest.approx(19.24, abs=0.01)
    assert ind(region(1, (112, 108, 101)), region(2, (91, 88, 83))) == pytest.approx(34.13, abs=0.01)
    assert ind(region(1, (79, 78, 82)), region(2, (106, 102, 97))) == pytest.approx(39.12, abs=0.01)


def test_ind_symmetric_and_zero():
    a, b = region(1, (1, 2, 3)), region(2, (4, 6, 3))
    assert ind(a, b) == ind(b, a) == 5.0
    assert ind(a, region(3, (1, 2, 3), n=7)) == 0.0


def test_dam_strength():
    assert dam_strength(dam(1, 2, 10, 0)) == 0
    assert dam_strength(dam(1, 2, 10, 10)) == 1
    assert dam_strength(dam(1, 2, 10, 3)) == 0.3
    with pytest.raises(ValueError):
        dam_strength(Dam(1, 2))


def small_graph():
    regions = {i: region(i, (10 * i,), n=2, gsum=float(i)) for i in (1, 2, 3, 4)}
    dams = {(1, 2): dam(1, 2, 5, 3), (1, 3): dam(1, 3, 10, 6), (1, 4): dam(1, 4, 10, 2)}
    return RegionGraph((4, 4), regions, dams, 20)


def test_rsi():
    g = small_graph()
    assert g.rsi(1, 0.3) == pytest.approx(0.6)  # (0.6 + 0.6) / 2, the 0.2 dam is excluded
    assert g.rsi(4, 0.3) == 0.0
    assert g.rsi(3, 0.3) == pytest.approx(0.6)


def test_merge_weighted_mean_and_concatenated_dam():
    regions = {1: region(1, (10.0,), n=3), 2: region(2, (40.0,), n=1), 3: region(3, (0.0,), n=5)}
    dams = {
        (1, 2): Dam(1, 2, {100}, set()),
        (1, 3): Dam(1, 3, {0, 1, 2, 3}, {0, 1, 2, 3}),
        (2, 3): Dam(2, 3, {10, 11, 12, 13, 14, 15}, set()),
    }
    g = RegionGraph((9, 9), regions, dams, 11)
    assert g.merge(1, 2) == 1
    assert g.regions[1].means[0] == pytest.approx((3 * 10 + 40) / 4)
    assert not g.regions[2].alive and g.root(2) == 1
    d = g.dam(1, 3)
    assert (d.length, d.strengthened, d.strength) == (10, 4, 0.4)
    assert g.neighbors(3) == [1] and (1, 2) not in g.dams


def test_merge_errors():
    g = small_graph()
    with pytest.raises(GraphError):
        g.merge(2, 3)
    g.merge(1, 2)
    with pytest.raises(GraphError):
        g.merge(1, 2)


def test_build_shape_mismatch():
    labels = np.ones((4, 4), np.uint32)
    r = Raster.from_array(np.zeros((4, 5), np.uint8))
    g = haar_gradient(np.zeros((4, 4)), 5)
    with pytest.raises(GraphError):
        build(labels, g, r, np.zeros((4, 4), bool))


def scene(seed, size=32):
    rng = np.random.default_rng(seed)
    base = ndimage.zoom(rng.integers(0, 256, (4, 4, 3)), (size / 4, size / 4, 1), order=0)
    img = np.clip(base + rng.normal(0, 12, base.shape), 0, 255).astype(np.uint8)
    r = Raster.from_array(img)
    lum = to_luminance(r)
    g = haar_gradient(lum, 5)
    edges = canny_detail(lum, 5, CannyParams.for_box_width(5), gradient=g).edges
    return watershed(g), g, r, edges


def assert_same_stats(graph, oracle):
    regions, dams = graph.stats()
    o_regions, o_dams = oracle.stats()
    assert dams == o_dams
    assert regions.keys() == o_regions.keys()
    for rid, (n, gs, cs) in regions.items():
        on, ogs, ocs = o_regions[rid]
        assert n == on
        assert math.isclose(gs, ogs, rel_tol=1e-9, abs_tol=1e-9)
        assert all(math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9) for a, b in zip(cs, ocs))


def test_build_matches_oracle():
    for seed in range(5):
        labels, g, r, e = scene(seed)
        assert_same_stats(build(labels, g, r, e), rebuild_oracle(labels, g, r, e))


def test_stats_invariants():
    labels, g, r, e = scene(3)
    graph = build(labels, g, r, e)
    assert sum(x.pixel_count for x in graph.regions.values()) + graph.dam_pixel_count == labels.size
    for d in graph.dams.values():
        assert 0 <= d.strength <= 1
    for rid in graph.alive_ids():
        v = graph.rsi(rid, 0.3)
        assert v == 0 or 0.3 < v <= 1


def random_merges(graph, rng, steps):
    for _ in range(steps):
        pairs = sorted(graph.dams)
        if not pairs:
            return
        a, b = pairs[rng.integers(len(pairs))]
        graph.merge(a, b)


def test_merge_sequences_match_rebuild():
    """1000 random merge sequences; incremental stats equal a fresh rebuild."""
    sequences = 0
    for seed in range(50):
        labels, g, r, e = scene(seed)
        base = build(labels, g, r, e)
        rng = np.random.default_rng(seed)
        for _ in range(20):
            graph = base.copy()
            random_merges(graph, rng, int(rng.integers(1, len(base.regions) + 1)))
            relabeled = substitute_labels(labels, graph)
            assert_same_stats(graph, rebuild_oracle(relabeled, g, r, e))
            sequences += 1
    assert sequences == 1000


def test_to_json_roundtrip():
    import json

    doc = json.loads(small_graph().to_json(0.3))
    assert doc["dam_pixels"] == 20
    assert [d["strength"] for d in doc["dams"]] == [0.6, 0.6, 0.2]
    assert rag.edge_support(np.eye(3, dtype=bool)).all()

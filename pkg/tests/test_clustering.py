import numpy as np
import pytest

from wifi_inout.clustering import (
    ClusterParams,
    cluster,
    read_assignment,
    singleton_assignment,
    write_assignment,
)
from wifi_inout.errors import ConfigError, FormatError
from wifi_inout.fpindex import build_index
from wifi_inout.distance import distance

from conftest import make_matrix, random_scan_matrix
from oracles import canonical_partition, connected_components_partition

A = "0a:00:00:00:00:01"
B = "0b:00:00:00:00:02"
C = "0c:00:00:00:00:03"
D = "0d:00:00:00:00:04"


def _chain_matrix():
    # d(a,b) = d(b,c) = 0.2 <= eps, d(a,c) = 0.4 > eps
    a = {A: -40, B: -50, C: -60, D: -70}
    b = {A: -50, B: -40, C: -60, D: -70}
    c = {A: -50, B: -40, C: -70, D: -60}
    return make_matrix([a, b, c])


def test_chain_density_connectivity():
    m = _chain_matrix()
    assert distance(m.fingerprints[0], m.fingerprints[1], 0, 1).value <= 0.22
    assert distance(m.fingerprints[1], m.fingerprints[2], 1, 2).value <= 0.22
    assert distance(m.fingerprints[0], m.fingerprints[2], 0, 2).value > 0.22
    index = build_index(m)
    assignment = cluster(m, ClusterParams(), index)
    assert assignment.n_clusters == 1
    assert assignment.clusters[0] == [0, 1, 2]


def test_empty_run_clusters_together():
    scans = [{A: -40}] + [{}] * 4 + [{A: -40}]
    m = make_matrix(scans)
    index = build_index(m)
    assignment = cluster(m, ClusterParams(), index)
    sizes = {len(c) for c in assignment.clusters}
    assert sorted(assignment.clusters, key=len)[-1] == [1, 2, 3, 4]
    assert sizes == {2, 4}  # the two single-AP scans merge (distance 0)


def test_matches_connected_components_oracle(rng):
    m = random_scan_matrix(rng, 300, ap_pool=25, empty_prob=0.12)
    index = build_index(m)
    for eps in (0.15, 0.22, 0.5):
        assignment = cluster(m, ClusterParams(eps=eps), index)
        assert canonical_partition(assignment) == connected_components_partition(m, eps)


def test_partition_properties(rng):
    m = random_scan_matrix(rng, 250, ap_pool=30)
    index = build_index(m)
    assignment = cluster(m, ClusterParams(), index)
    seen = set()
    for members in assignment.clusters:
        assert not (seen & set(members))
        seen.update(members)
    assert seen == set(range(m.T))
    assert sum(assignment.sizes()) == m.T
    firsts = [c[0] for c in assignment.clusters]
    assert firsts == sorted(firsts)  # ids ascend with first member


def test_order_insensitivity(rng):
    m = random_scan_matrix(rng, 200, ap_pool=20, empty_prob=0.1)
    index = build_index(m)
    base = cluster(m, ClusterParams(), index)
    for _ in range(3):
        order = rng.permutation(m.T)
        permuted = cluster(m, ClusterParams(), index, order=[int(i) for i in order])
        assert canonical_partition(permuted) == canonical_partition(base)
        assert np.array_equal(permuted.cluster_of, base.cluster_of)


def test_min_pts_two_blobs_and_noise():
    blob1 = [{A: -40, B: -50, C: -60}] * 3
    blob2 = [{D: -40, A: -90, B: -80}] * 3
    lone = [{C: -30}]
    m = make_matrix(blob1 + lone + blob2)
    index = build_index(m)
    assignment = cluster(m, ClusterParams(eps=0.22, min_pts=2), index)
    groups = sorted((sorted(c) for c in assignment.clusters), key=len)
    assert groups[0] == [3]            # noise point becomes a singleton
    assert sorted(groups[1:]) == [[0, 1, 2], [4, 5, 6]]


def test_min_pts_larger_than_any_neighborhood(rng):
    m = random_scan_matrix(rng, 40, ap_pool=40, empty_prob=0.0)
    index = build_index(m)
    assignment = cluster(m, ClusterParams(eps=0.0, min_pts=50), index)
    assert assignment.n_clusters == m.T  # everything is noise -> singletons


def test_config_validation():
    with pytest.raises(ConfigError):
        ClusterParams(eps=2.0).validate()
    with pytest.raises(ConfigError):
        ClusterParams(eps=-0.1).validate()
    with pytest.raises(ConfigError):
        ClusterParams(min_pts=0).validate()
    ClusterParams().validate()  # defaults are valid


def test_singleton_assignment(rng):
    m = random_scan_matrix(rng, 30)
    s = singleton_assignment(m)
    assert s.n_clusters == m.T
    assert all(s.clusters[i] == [i] for i in range(m.T))


def test_assignment_file_round_trip(tmp_path, rng):
    m = random_scan_matrix(rng, 120)
    index = build_index(m)
    assignment = cluster(m, ClusterParams(), index)
    path = tmp_path / "clusters.jsonl"
    write_assignment(assignment, path)
    loaded = read_assignment(path)
    assert np.array_equal(loaded.cluster_of, assignment.cluster_of)
    assert loaded.clusters == assignment.clusters


def test_assignment_file_rejects_gaps(tmp_path):
    path = tmp_path / "clusters.jsonl"
    path.write_text('{"seq": 0, "cluster": 0}\n{"seq": 2, "cluster": 0}\n',
                    encoding="utf-8")
    with pytest.raises(FormatError):
        read_assignment(path)

import math

import numpy as np
import pytest

import birchtl


def test_birch_fit_separates_blobs():
    rng = np.random.default_rng(0)
    data = np.vstack([rng.normal(0, 0.05, (20, 2)), rng.normal(50, 0.05, (20, 2))])
    tree, labels = birchtl.birch_fit(data)
    assert tree.subcluster_count == 2
    assert list(labels[:20]) == [labels[0]] * 20
    assert labels[0] != labels[-1]
    assert list(tree.predict(data)) == list(labels)
    assert tree.audit() == []


def test_tree_json_round_trip():
    data, _ = birchtl.gen_synthetic(ppv_count=3, samples_per_ppv=30, dim=5, seed=1)
    tree, _ = birchtl.birch_fit(data, threshold=0.4, branching_factor=4)
    assert birchtl.CfTree.from_json(tree.to_json()) == tree


def test_chunked_insert_matches_one_shot():
    data, _ = birchtl.gen_synthetic(ppv_count=4, samples_per_ppv=25, dim=6, seed=2)
    whole, _ = birchtl.birch_fit(data)
    tree = birchtl.CfTree(birchtl.BirchParams(0.6, 50))
    for chunk in np.array_split(data, 7):
        tree.insert_all(chunk)
    assert tree == whole


def test_silhouette_hand_case():
    data = np.array([[0.0], [1.0], [10.0], [11.0]])
    r = birchtl.silhouette(data, np.array([0, 0, 1, 1]))
    assert math.isclose(r["mean"], 0.899749, abs_tol=1e-6)


def test_baselines_run():
    data = np.array([[0.0], [1.0], [10.0], [11.0]])
    _, labels, sse = birchtl.kmeans(data, 2, seed=3)
    assert sse == pytest.approx(1.0)
    assert labels[0] == labels[1] != labels[2]
    assert list(birchtl.dbscan(np.array([[0.0], [1.0], [2.0], [10.0]]), 1.5, 2)) == [0, 0, 0, -1]
    assert list(birchtl.agglomerative(np.array([[0.0], [1.0], [10.0]]), n_clusters=2)) == [0, 0, 1]
    with pytest.raises(ValueError):
        birchtl.agglomerative(data)


def test_repdb_and_transfer(tmp_path):
    db = birchtl.RepresentationDb()
    for i in range(5):
        db.insert(birchtl.Representation([0.0, 2.0 * i], "A", "vib", i))
        db.insert(birchtl.Representation([20.0, 2.0 * i], "B", "vib", i, "ok"))
    assert len(db) == 10
    assert len(db.query(task_id="B", label="ok")) == 5

    path = tmp_path / "db.jsonl"
    db.save(path)
    assert birchtl.RepresentationDb.load(path) == db

    tree, _ = birchtl.birch_fit(db.vectors())
    hit = birchtl.similarity_check(db, tree, np.array([[0.0, 0.0], [0.0, 4.0]]))
    assert hit["transfer"]
    assert hit["candidates"][0][:2] == ("A", 1.0)
    miss = birchtl.similarity_check(db, tree, np.array([[100.0, 100.0]]))
    assert not miss["transfer"]

    triggered, baseline, recent = birchtl.demand_check([0.9] * 4 + [0.4] * 2, 4, 2, 0.2)
    assert triggered and baseline == pytest.approx(0.9) and recent == pytest.approx(0.4)


def test_errors_surface_as_value_error(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id":0}\n')
    with pytest.raises(birchtl.Error, match="line 1"):
        birchtl.RepresentationDb.load(bad)
    with pytest.raises(ValueError):
        birchtl.birch_fit(np.array([[1.0, float("nan")]]))


def test_exp_sequence_report():
    csv = birchtl.exp_sequence(permutation_count=2, ppv_count=3, samples_per_ppv=10, dim=5)
    lines = csv.splitlines()
    assert lines[0].startswith("sequence_no,si_single,si_sequential,n_clusters")
    assert len(lines) == 4

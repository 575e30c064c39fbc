#!/usr/bin/env python3
"""Smoke test for the _graphne extension module.

Builds nothing itself: run `cargo build -p graphne-py` (or --release) first.
The script locates the compiled cdylib, exposes it as `_graphne`, and drives
a small end-to-end pipeline through both optimizers and the metrics.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "lib_graphne.so",
        REPO / "target" / "debug" / "lib_graphne.so",
        REPO / "target" / "release" / "_graphne.so",
        REPO / "target" / "debug" / "_graphne.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "error: extension not built; run `cargo build -p graphne-py` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="graphne_py_"))
    shutil.copy2(newest, stage / "_graphne.so")
    sys.path.insert(0, str(stage))
    import _graphne

    return _graphne


def main():
    gn = load_module()

    # graph ingestion: duplicate edge collapsed, self-loop dropped
    g = gn.Graph.parse_edge_list("0 1\n1 0\n0 0\n1 2\n2 0\n5 6\n")
    assert g.n == 5 and g.num_edges == 4, (g.n, g.num_edges)
    lcc, index_map = g.largest_connected_component()
    assert lcc.n == 3 and index_map[3] is None
    assert lcc.degrees == [2, 2, 2]

    # affinities: triangle is 2-regular, every entry 1/(n k) = 1/6
    p = gn.degree_normalized_affinity(lcc)
    assert abs(p.total_mass - 1.0) < 1e-12
    for _, _, value in p.entries():
        assert abs(value - 1.0 / 6.0) < 1e-15
    q = gn.global_normalized_affinity(lcc)
    assert all(abs(v - 1.0 / 6.0) < 1e-15 for _, _, v in q.entries())

    # SBM + LCC + spectral init + t-SNE + metrics
    g, labels = gn.sbm_generate([50, 50], 0.12, 0.005, seed=1)
    lcc, index_map = g.largest_connected_component()
    labels = [labels[i] for i in range(g.n) if index_map[i] is not None]
    p = gn.degree_normalized_affinity(lcc)
    init = gn.laplacian_eigenmaps(lcc, 2, seed=0)
    assert init.metric == "euclidean" and init.d == 2
    layout = gn.run_tsne(p, init, total_iters=400, exaggeration_iters=120, seed=0)
    loss = gn.kl_loss(p, layout)
    assert math.isfinite(loss) and loss >= 0.0
    recall = gn.neighbor_recall(lcc, layout)
    chance = sum(lcc.degrees) / lcc.n / (lcc.n - 1)
    assert recall > 5 * chance, (recall, chance)
    knn = gn.knn_accuracy(layout, labels, seed=0)
    linear = gn.linear_accuracy(layout, labels, seed=0)
    assert knn > 0.6 and linear > 0.6, (knn, linear)

    # CNE on the same graph: cosine embedding, improving loss
    init128 = gn.random_init(lcc.n, 16, seed=3)
    emb, stats = gn.run_cne(lcc, init128, epochs=15, tau=0.05, seed=3)
    assert emb.metric == "cosine" and emb.d == 16
    assert len(stats) == 15
    first = sum(s[1] for s in stats[:3]) / 3
    last = sum(s[1] for s in stats[-3:]) / 3
    assert last < first, (first, last)
    r_cne, knn_cne, _ = gn.evaluate(lcc, emb, labels, seed=0)
    assert 0.0 <= r_cne <= 1.0 and knn_cne > 0.6

    # kernels
    w = gn.pair_similarity([1.0, 0.0], [1.0, 0.0], kernel="cosine", tau=0.5)
    assert abs(w - math.exp(2.0)) < 1e-12
    w = gn.pair_similarity([0.0, 0.0], [1.0, 0.0], kernel="cauchy")
    assert abs(w - 0.5) < 1e-15

    # kNN graph of collinear points
    k = gn.knn_graph([[0.0], [1.0], [3.0]], 1)
    assert k.edges() == [(0, 1), (1, 2)]

    # embedding file format round trip
    text = layout.to_file_string()
    back = gn.Embedding.parse(text)
    assert back.rows() == layout.rows()

    # label file parsing against original ids
    g2 = gn.Graph.parse_edge_list("5 9\n9 7")
    assert gn.parse_label_file("5 cat\n7 dog\n9 cat\n", g2) == [0, 0, 1]

    print("smoke test passed")


if __name__ == "__main__":
    main()

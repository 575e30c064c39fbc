#!/usr/bin/env python3
"""Fetch the citation benchmark graphs (Cora, Citeseer) into data/.

Needs network access plus one of `dgl` or `torch_geometric`. The graphs are
written in the project's edge-list / label-file formats over all nodes; the
pipeline extracts the largest connected component itself (Cora: 2485 nodes,
Citeseer: 2120 nodes after extraction).

Usage: python3 scripts/fetch_datasets.py [out_dir]
"""

import sys
from pathlib import Path

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"


def write_files(name, edges, labels):
    OUT.mkdir(parents=True, exist_ok=True)
    undirected = sorted({(min(u, v), max(u, v)) for u, v in edges if u != v})
    edge_path = OUT / f"{name}.edges"
    with open(edge_path, "w") as f:
        for u, v in undirected:
            f.write(f"{u} {v}\n")
    label_path = OUT / f"{name}.labels"
    with open(label_path, "w") as f:
        for node, label in enumerate(labels):
            f.write(f"{node} {int(label)}\n")
    print(f"wrote {edge_path} ({len(undirected)} edges) and {label_path} ({len(labels)} nodes)")


def via_dgl():
    from dgl.data import CiteseerGraphDataset, CoraGraphDataset

    for name, cls in [("cora", CoraGraphDataset), ("citeseer", CiteseerGraphDataset)]:
        g = cls(verbose=False)[0]
        src, dst = (t.tolist() for t in g.edges())
        labels = g.ndata["label"].tolist()
        write_files(name, zip(src, dst), labels)


def via_pyg():
    import tempfile

    from torch_geometric.datasets import Planetoid

    with tempfile.TemporaryDirectory() as tmp:
        for name in ["Cora", "Citeseer"]:
            data = Planetoid(root=tmp, name=name)[0]
            src, dst = (t.tolist() for t in data.edge_index)
            write_files(name.lower(), zip(src, dst), data.y.tolist())


def main():
    errors = []
    for fetch in [via_dgl, via_pyg]:
        try:
            fetch()
            return
        except ImportError as e:
            errors.append(str(e))
    sys.exit(
        "error: neither dgl nor torch_geometric is importable; "
        "install one of them to fetch the datasets\n  " + "\n  ".join(errors)
    )


if __name__ == "__main__":
    main()

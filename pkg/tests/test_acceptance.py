"""Acceptance gate: ten checks, each printing a single pass/fail line.

The suite is ordered so the two full-scale pipeline runs (built once by the
session fixture) back the orthogonality, determinism, and report-fidelity
checks. Run with `pytest tests/test_acceptance.py -v`.
"""

import json
import os
import random
import time
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from lexshift import align, corpus, embed, graph, metrics, poetcmp, synth
from lexshift.cli import main as cli_main
from lexshift.report import validate_report

from conftest import make_graph, make_model, make_partition, random_unit_model
from test_graph import brute_force_mutual_knn

RECOVERY_SEEDS = list(range(41, 51))
TRAIN = embed.TrainConfig(dim=64, window=5, min_count=15, negative=5,
                          epochs=3, seed=42)


def report_line(n, name, ok, detail=""):
    tail = f"  ({detail})" if detail else ""
    print(f"[criterion {n:2d}] {name}: {'PASS' if ok else 'FAIL'}{tail}")


def check(capsys, n, name, ok, detail=""):
    with capsys.disabled():
        report_line(n, name, ok, detail)
    assert ok, f"criterion {n}: {name}"


# -- full-scale pipeline runs (criteria 2, 8, 10) ----------------------------

def pipeline_config() -> dict:
    spec = synth.default_spec(seed=42)
    panel = [p.word for p in spec.planted] + \
        ["t00w00", "t20w03", "t40w01", "t80w05", "f00"]
    return {
        "corpus_path": "corpus.jsonl",
        "workdir": "work",
        "slice_kinds": ["century", "poet"],
        "balance": {"enabled": False},
        "train": TRAIN.to_json(),
        "alignment_mode": "consecutive",
        "k": 10,
        "panel": panel,
        "viability_threshold": 1000,
        "poet_eligibility_threshold": 100_000,
        "seed": 42,
        "heatmap": True,
        "synth": spec.to_json(),
    }


@pytest.fixture(scope="session")
def full_runs(tmp_path_factory):
    """Two identical full-scale runs in separate directories (relative paths,
    so manifests and reports can be compared byte for byte)."""
    dirs = []
    cwd = os.getcwd()
    try:
        for tag in ("one", "two"):
            root = tmp_path_factory.mktemp(f"run_{tag}")
            (root / "config.json").write_text(
                json.dumps(pipeline_config(), sort_keys=True), "utf-8")
            os.chdir(root)
            code = cli_main(["all", "--config", "config.json"])
            assert code == 0, f"pipeline run {tag} failed with exit {code}"
            dirs.append(root)
    finally:
        os.chdir(cwd)
    return dirs


# -- criteria ----------------------------------------------------------------

def test_criterion_1_procrustes_recovery(capsys):
    t0 = time.monotonic()
    worst_map, worst_drift = 0.0, 0.0
    for seed in range(10):
        model = random_unit_model(seed, 500, 50)
        rng = np.random.default_rng(1000 + seed)
        q, _ = np.linalg.qr(rng.normal(size=(50, 50)))
        target = model.with_vectors((model.vectors.astype(np.float64) @ q)
                                    .astype(np.float32))
        amap = align.procrustes(model, target, sorted(model.vocab))
        worst_map = max(worst_map, float(np.linalg.norm(amap.transform - q)))
        aligned = amap.apply(model)
        for w in model.vocab:
            d = 1.0 - embed.cosine(aligned.vector(w), target.vector(w))
            worst_drift = max(worst_drift, d)
    elapsed = time.monotonic() - t0
    ok = worst_map < 1e-4 and worst_drift < 1e-6 and elapsed < 10.0
    check(capsys, 1, "Procrustes recovery", ok,
          f"max map err {worst_map:.2e}, max drift {worst_drift:.2e}, "
          f"{elapsed:.1f}s")


def test_criterion_2_orthogonality_invariant(capsys, full_runs):
    maps_dir = full_runs[0] / "work" / "aligned" / "maps"
    paths = sorted(maps_dir.glob("*.map.json"))
    worst = 0.0
    for path in paths:
        amap = align.load_map(path)
        gram = amap.transform.T @ amap.transform
        worst = max(worst, float(np.max(np.abs(gram - np.eye(gram.shape[0])))))
    ok = bool(paths) and worst < 1e-6
    check(capsys, 2, "Orthogonality invariant", ok,
          f"{len(paths)} maps, max |WtW - I| = {worst:.2e}")


def test_criterion_3_mutual_knn_oracle(capsys):
    mismatches = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        model = random_unit_model(seed, int(rng.integers(30, 201)), 12)
        k = int(rng.integers(1, 12))
        g = graph.build_mutual_knn(model, k=k)
        if {(a, b) for a, b, _ in g.edges()} != brute_force_mutual_knn(model, k):
            mismatches += 1
    check(capsys, 3, "Mutual-kNN oracle equivalence", mismatches == 0,
          f"20 models, {mismatches} mismatches")


def test_criterion_4_bridge_score_envelope(capsys):
    bad_range = bad_zero = 0
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 12))
        nodes = [f"n{i}" for i in range(n)]
        edges = [(a, b, float(rng.random()) + 0.01)
                 for a, b in combinations(nodes, 2) if rng.random() < 0.35]
        g = make_graph("s", edges, extra_nodes=nodes)
        part = make_partition("s", {w: int(rng.integers(0, 3)) for w in nodes})
        for w in nodes:
            score = graph.bridge_score(g, part, w)
            if not 0.0 <= score <= 1.0:
                bad_range += 1
            neighbors = list(g.adjacency.get(w, ()))
            internal_only = neighbors and all(
                part.assignment[v] == part.assignment[w] for v in neighbors)
            if (internal_only or not neighbors) and score != 0.0:
                bad_zero += 1
    # 3-community saturation: every edge external, both external communities hit
    g = make_graph("s", [("w", "u", 1.0), ("w", "v", 2.0)])
    part = make_partition("s", {"w": 0, "u": 1, "v": 2})
    saturated = graph.bridge_score(g, part, "w")
    ok = bad_range == 0 and bad_zero == 0 and saturated == 1.0
    check(capsys, 4, "Bridge-score envelope", ok,
          f"1000 graphs, {bad_range} out of range, {bad_zero} nonzero "
          f"all-internal, saturation {saturated}")


def test_criterion_5_metric_formula_oracles(capsys):
    failures = []

    part_a = make_partition("s0", {"x": 0, "a": 0, "b": 0, "c": 0, "d": 0,
                                   "e": 1, "f": 1})
    part_b = make_partition("s1", {"x": 0, "c": 0, "d": 0, "e": 0, "f": 0,
                                   "a": 1, "b": 1})
    shared = {"x", "a", "b", "c", "d", "e", "f"}
    realloc = metrics.community_reallocation("x", part_a, part_b, shared)
    if abs(realloc - (1.0 - 2.0 / 6.0)) > 1e-12:
        failures.append("reallocation")

    dim = 17

    def neighbor_model(close):
        vecs = {"q": np.eye(dim)[0]}
        for i in range(1, 16):
            c = 0.9 if i in close else 0.1
            vecs[f"w{i:02d}"] = (c * np.eye(dim)[0]
                                 + np.sqrt(1 - c * c) * np.eye(dim)[i])
        return make_model("s", vecs)

    turnover = metrics.neighbor_turnover(
        "q", neighbor_model(set(range(1, 11))), neighbor_model(set(range(6, 16))),
        k=10)
    if abs(turnover - 0.5) > 1e-12:
        failures.append("turnover")

    centered = poetcmp.double_center(np.eye(2))
    if not np.allclose(centered, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12):
        failures.append("double-centering")

    cc = metrics.century_centered({"w1": 0.1, "w2": 0.3})
    if abs(cc["w1"] + 0.1) > 1e-12 or abs(cc["w2"] - 0.1) > 1e-12:
        failures.append("century-centering")

    check(capsys, 5, "Metric formula oracles", not failures,
          "all exact at 1e-12" if not failures else f"failed: {failures}")


def test_criterion_6_agreement_partition(capsys):
    rng = np.random.default_rng(0)
    cells = [(f"w{i}", f"c{i % 3}", float(rng.random()), float(rng.random()))
             for i in range(60)]
    out = metrics.agreement_profile(cells)
    every_cell = (len(out) == len(cells) and
                  all(c.agreement_class in metrics.AGREEMENT_CLASSES for c in out))

    corners = [("w1", "c1", 0.1, 0.1), ("w2", "c1", 0.9, 0.1),
               ("w3", "c1", 0.9, 0.9), ("w4", "c1", 0.1, 0.9)]
    classes = sorted(c.agreement_class for c in metrics.agreement_profile(corners))
    four_corner = classes == sorted(metrics.AGREEMENT_CLASSES)
    check(capsys, 6, "Agreement partition", every_cell and four_corner,
          f"60 random cells classed, four corners -> {classes}")


def test_criterion_7_planted_change_recovery(capsys):
    t0 = time.monotonic()
    rw_seeds = mg_seeds = st_seeds = 0
    details = []
    for seed in RECOVERY_SEEDS:
        spec = synth.default_spec(seed=seed)
        docs = synth.generate(spec)
        slices = sorted(corpus.build_slices(docs, "century",
                                            viability_threshold=1000),
                        key=lambda s: s.slice_id)
        sids = [s.slice_id for s in slices]
        models = [embed.train(s, TRAIN) for s in slices]
        aligned, _ = align.chain_consecutive(models)
        graphs = [graph.build_mutual_knn(m, k=10) for m in aligned]
        parts = [graph.detect_communities(g) for g in graphs]
        roles = [graph.node_roles(g, p) for g, p in zip(graphs, parts)]

        planted = [p.word for p in spec.planted]
        background = sorted(set.intersection(*[set(m.vocab) for m in aligned])
                            - set(planted))
        panel = planted + random.Random(seed).sample(background, 135)
        trajs = metrics.compute_panel(panel, sids, aligned, graphs, parts,
                                      roles, k=10)

        pm = {}
        for tr in trajs:
            def mean_of(key):
                vals = [getattr(t, key) for t in tr.transitions
                        if getattr(t, key) is not None]
                return sum(vals) / len(vals) if vals else None
            pm[tr.word] = {k: mean_of(k)
                           for k in ("drift", "turnover", "reallocation")}

        def panel_median(key):
            vals = sorted(v[key] for v in pm.values() if v[key] is not None)
            return vals[len(vals) // 2]

        decile = max(1, len(pm) // 10)
        by_turnover = sorted((w for w in pm if pm[w]["turnover"] is not None),
                             key=lambda w: (-pm[w]["turnover"], w))
        top_decile = set(by_turnover[:decile])
        groups = {b: [p.word for p in spec.planted if p.behavior == b]
                  for b in ("rewire", "migrate", "stable")}
        rw_ok = all(w in top_decile for w in groups["rewire"])
        mg_ok = all(pm[w]["reallocation"] is not None
                    and pm[w]["reallocation"] > panel_median("reallocation")
                    for w in groups["migrate"])
        st_ok = all(pm[w]["drift"] is not None
                    and pm[w]["drift"] < panel_median("drift")
                    for w in groups["stable"])
        rw_seeds += rw_ok
        mg_seeds += mg_ok
        st_seeds += st_ok
        details.append(f"{seed}:{'+' if rw_ok and mg_ok and st_ok else '-'}")
    elapsed = time.monotonic() - t0
    ok = (rw_seeds >= 8 and mg_seeds >= 8 and st_seeds >= 8
          and elapsed < 15 * 60)
    check(capsys, 7, "Planted-change recovery", ok,
          f"rewire {rw_seeds}/10, migrate {mg_seeds}/10, stable {st_seeds}/10 "
          f"seeds, {elapsed / 60:.1f} min [{' '.join(details)}]")


def test_criterion_8_determinism(capsys, full_runs):
    one, two = full_runs
    mismatched = []
    pairs = [("manifest.json", one / "work" / "manifest.json",
              two / "work" / "manifest.json")]
    report_files = sorted(p.name for p in (one / "work" / "report").iterdir())
    report_files_two = sorted(p.name for p in (two / "work" / "report").iterdir())
    same_listing = report_files == report_files_two
    for name in report_files:
        pairs.append((f"report/{name}", one / "work" / "report" / name,
                      two / "work" / "report" / name))
    for label, a, b in pairs:
        if a.read_bytes() != b.read_bytes():
            mismatched.append(label)
    ok = same_listing and not mismatched
    check(capsys, 8, "Determinism", ok,
          f"{len(pairs)} files byte-identical" if ok
          else f"mismatched: {mismatched}")


def test_criterion_9_classification_scale_invariance(capsys):
    rng = np.random.default_rng(9)
    changed = 0
    for i in range(500):
        c, p = float(rng.random()), float(rng.random())
        base = poetcmp.classify_pressure(f"w{i}", c, p)
        scaled = poetcmp.classify_pressure(f"w{i}", c * 7.3, p * 7.3)
        if (base.pressure_class != scaled.pressure_class
                or abs(base.ratio - scaled.ratio) > 1e-9):
            changed += 1
    check(capsys, 9, "Classification scale-invariance", changed == 0,
          f"500 panels x 7.3, {changed} changed")


def test_criterion_10_report_fidelity(capsys, full_runs):
    workdir = full_runs[0] / "work"
    status = validate_report(workdir)
    all_ok = all(v == "ok" for v in status.values())

    import csv
    with (workdir / "report" / "panel_summary.csv").open(encoding="utf-8") as fh:
        rows = {r["word"] for r in csv.DictReader(fh)}
    panel = set(pipeline_config()["panel"])
    covered = panel <= rows
    check(capsys, 10, "Report fidelity", all_ok and covered,
          f"{sum(v == 'ok' for v in status.values())} files ok, "
          f"panel rows {len(rows & panel)}/{len(panel)}")

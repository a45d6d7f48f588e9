"""Pipeline orchestration: staged subcommands, manifest bookkeeping, reports.

Stages write their artifacts atomically under the workdir and record content
hashes in manifest.json; re-running a completed stage with unchanged inputs is
a no-op. Exit codes: 0 success, 2 config error, 3 missing upstream artifact,
4 data error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean
from typing import Sequence

from . import __version__
from . import align as align_mod
from . import corpus as corpus_mod
from . import embed as embed_mod
from . import graph as graph_mod
from . import metrics as metrics_mod
from . import poetcmp as poetcmp_mod
from . import report as report_mod
from . import synth as synth_mod
from .errors import (AlignmentError, ConfigError, DataError, LexshiftError,
                     MissingArtifactError)

STAGES = ("ingest", "slice", "balance", "train", "align", "graph", "metrics",
          "poet", "compare", "report", "synth")

# The default twenty-word probe panel with its field labels.
DEFAULT_PANEL: list[dict] = [
    {"word": "خاک", "field": "Reference words"},
    {"word": "شب", "field": "Reference words"},
    {"word": "می", "field": "Reference words"},
    {"word": "باده", "field": "Reference words"},
    {"word": "دل", "field": "Reference words"},
    {"word": "عشق", "field": "Symbolic field"},
    {"word": "جان", "field": "Symbolic field"},
    {"word": "چشم", "field": "Symbolic field"},
    {"word": "آتش", "field": "Symbolic field"},
    {"word": "درویش", "field": "Symbolic field"},
    {"word": "شاه", "field": "Symbolic field"},
    {"word": "راه", "field": "Symbolic field"},
    {"word": "صبا", "field": "Symbolic field"},
    {"word": "غم", "field": "Symbolic field"},
    {"word": "روز", "field": "Symbolic field"},
    {"word": "فنا", "field": "Mystical layer"},
    {"word": "بقا", "field": "Mystical layer"},
    {"word": "طریقت", "field": "Mystical layer"},
    {"word": "حقیقت", "field": "Mystical layer"},
    {"word": "صوفی", "field": "Mystical layer"},
]

# Defaults recorded in every manifest so report numbers stay auditable.
DESIGN_DEFAULTS = {
    "negative_sampling_power": embed_mod.NEG_POWER,
    "edge_weight": "mean mutual cosine; non-positive pairs dropped",
    "bridge_diversity": "distinct external communities / (C - 1)",
    "volatility_normalizer": "per-transition panel max",
    "century_signal_weights": [1 / 3, 1 / 3, 1 / 3],
    "poet_signal_weights": [0.5, 0.5],
    "median_split": "strictly greater than median counts as high",
    "pressure_ratio": "poet / (poet + century)",
    "poet_alignment": "every poet model aligned to the global reference",
}


@dataclass
class PipelineConfig:
    corpus_path: str
    workdir: str
    corpus_metadata: str | None = None
    century_range: tuple[int, int] = (1, 99)
    slice_kinds: tuple[str, ...] = ("century", "poet")
    balance_enabled: bool = True
    balance_target: int = corpus_mod.DEFAULT_BALANCE_TARGET
    train: embed_mod.TrainConfig = field(default_factory=embed_mod.TrainConfig)
    low_data_poets: tuple[str, ...] = ()
    low_data_min_count: int = 10
    alignment_mode: str = "consecutive"  # or "reference_chained"
    k: int = 10
    stoplist_path: str | None = None
    panel: list[dict] = field(default_factory=lambda: [dict(p) for p in DEFAULT_PANEL])
    viability_threshold: int = corpus_mod.DEFAULT_VIABILITY_THRESHOLD
    poet_eligibility_threshold: int = 100_000
    poet_coverage_min: int = 3
    pressure_lo: float = poetcmp_mod.DEFAULT_PRESSURE_LO
    pressure_hi: float = poetcmp_mod.DEFAULT_PRESSURE_HI
    seed: int = 42
    heatmap: bool = False
    synth: synth_mod.SynthSpec | None = None

    def __post_init__(self):
        if self.alignment_mode not in ("consecutive", "reference_chained"):
            raise ConfigError(f"unknown alignment_mode {self.alignment_mode!r}")
        if not self.panel:
            raise ConfigError("panel must be nonempty")
        for kind in self.slice_kinds:
            if kind not in ("century", "poet"):
                raise ConfigError(f"unknown slice kind {kind!r}")
        for value, name in ((self.k, "k"), (self.viability_threshold, "viability"),
                            (self.poet_eligibility_threshold, "poet eligibility"),
                            (self.balance_target, "balance target")):
            if value <= 0:
                raise ConfigError(f"{name} threshold must be positive")
        if not 0 <= self.pressure_lo <= self.pressure_hi <= 1:
            raise ConfigError("pressure thresholds must satisfy 0 <= lo <= hi <= 1")

    @property
    def panel_words(self) -> list[str]:
        return [p["word"] for p in self.panel]

    @property
    def panel_fields(self) -> dict[str, str]:
        return {p["word"]: p.get("field", "panel") for p in self.panel}

    def stoplist(self) -> set[str]:
        if not self.stoplist_path:
            return set()
        path = Path(self.stoplist_path)
        if not path.exists():
            raise ConfigError(f"stoplist file not found: {path}")
        return {line.strip() for line in path.read_text("utf-8").splitlines()
                if line.strip()}

    def to_json(self) -> dict:
        return {
            "corpus_path": self.corpus_path,
            "corpus_metadata": self.corpus_metadata,
            "workdir": self.workdir,
            "century_range": list(self.century_range),
            "slice_kinds": list(self.slice_kinds),
            "balance": {"enabled": self.balance_enabled,
                        "target_tokens": self.balance_target},
            "train": self.train.to_json(),
            "low_data_poets": list(self.low_data_poets),
            "low_data_min_count": self.low_data_min_count,
            "alignment_mode": self.alignment_mode,
            "k": self.k,
            "stoplist_path": self.stoplist_path,
            "panel": self.panel,
            "viability_threshold": self.viability_threshold,
            "poet_eligibility_threshold": self.poet_eligibility_threshold,
            "poet_coverage_min": self.poet_coverage_min,
            "pressure": {"lo": self.pressure_lo, "hi": self.pressure_hi},
            "seed": self.seed,
            "heatmap": self.heatmap,
            "synth": self.synth.to_json() if self.synth else None,
        }

    @classmethod
    def from_json(cls, data: dict, workdir_override: str | None = None
                  ) -> "PipelineConfig":
        try:
            balance = data.get("balance", {})
            pressure = data.get("pressure", {})
            panel = data.get("panel")
            if panel is not None:
                panel = [{"word": p, "field": "panel"} if isinstance(p, str) else dict(p)
                         for p in panel]
            return cls(
                corpus_path=data["corpus_path"],
                corpus_metadata=data.get("corpus_metadata"),
                workdir=workdir_override or data["workdir"],
                century_range=tuple(data.get("century_range", (1, 99))),
                slice_kinds=tuple(data.get("slice_kinds", ("century", "poet"))),
                balance_enabled=balance.get("enabled", True),
                balance_target=balance.get("target_tokens",
                                           corpus_mod.DEFAULT_BALANCE_TARGET),
                train=embed_mod.TrainConfig.from_json(data["train"])
                if "train" in data else embed_mod.TrainConfig(),
                low_data_poets=tuple(data.get("low_data_poets", ())),
                low_data_min_count=data.get("low_data_min_count", 10),
                alignment_mode=data.get("alignment_mode", "consecutive"),
                k=data.get("k", 10),
                stoplist_path=data.get("stoplist_path"),
                panel=panel if panel is not None else [dict(p) for p in DEFAULT_PANEL],
                viability_threshold=data.get("viability_threshold",
                                             corpus_mod.DEFAULT_VIABILITY_THRESHOLD),
                poet_eligibility_threshold=data.get("poet_eligibility_threshold",
                                                    100_000),
                poet_coverage_min=data.get("poet_coverage_min", 3),
                pressure_lo=pressure.get("lo", poetcmp_mod.DEFAULT_PRESSURE_LO),
                pressure_hi=pressure.get("hi", poetcmp_mod.DEFAULT_PRESSURE_HI),
                seed=data.get("seed", 42),
                heatmap=data.get("heatmap", False),
                synth=synth_mod.SynthSpec.from_json(data["synth"])
                if data.get("synth") else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path, workdir_override: str | None = None
             ) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_json(data, workdir_override)


# -- manifest ----------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.path = Path(cfg.workdir) / "manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text("utf-8"))
        else:
            self.data = {"version": __version__, "config": cfg.to_json(),
                         "decisions": DESIGN_DEFAULTS, "stages": {}}

    def stage_done(self, stage: str) -> bool:
        return stage in self.data["stages"]

    def input_hash(self, stage: str) -> str:
        """Hash of the stage's config snapshot plus upstream output hashes."""
        upstream = {
            dep: self.data["stages"][dep]["files"]
            for dep in STAGE_DEPS.get(stage, ())
            if dep in self.data["stages"]
        }
        payload = json.dumps({"config": self.cfg.to_json(), "upstream": upstream},
                             sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def is_current(self, stage: str) -> bool:
        entry = self.data["stages"].get(stage)
        if not entry or entry.get("input_hash") != self.input_hash(stage):
            return False
        root = Path(self.cfg.workdir)
        return all((root / rel).exists() for rel in entry["files"])

    def record(self, stage: str, files: Sequence[Path]) -> None:
        root = Path(self.cfg.workdir)
        hashes = {str(p.relative_to(root)): _sha256(p) for p in sorted(files)}
        self.data["stages"][stage] = {"input_hash": self.input_hash(stage),
                                      "files": hashes}
        self.save()

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.data, sort_keys=True, ensure_ascii=False,
                                  indent=1), "utf-8")
        tmp.replace(self.path)


STAGE_DEPS: dict[str, tuple[str, ...]] = {
    "ingest": (),
    "slice": ("ingest",),
    "balance": ("slice",),
    "train": ("slice",),
    "align": ("train",),
    "graph": ("align",),
    "metrics": ("graph",),
    "poet": ("align",),
    "compare": ("metrics", "poet"),
    "report": (),
    "synth": (),
}


def _require(manifest: Manifest, stage: str) -> None:
    for dep in STAGE_DEPS[stage]:
        if not manifest.stage_done(dep):
            raise MissingArtifactError(stage, dep)
    if stage == "train" and manifest.cfg.balance_enabled \
            and "century" in manifest.cfg.slice_kinds \
            and not manifest.stage_done("balance"):
        raise MissingArtifactError("train", "balance")


# -- stages ------------------------------------------------------------------

def _slice_ids(workdir: Path, kind: str, balanced: bool = False) -> list[str]:
    base = workdir / ("balanced" if balanced else "slices") / kind
    return sorted(p.stem for p in base.glob("*.txt"))


def stage_synth(cfg: PipelineConfig, manifest: Manifest) -> None:
    if cfg.synth is None:
        raise ConfigError("synth stage requires a 'synth' config section")
    docs = synth_mod.generate(cfg.synth)
    out = Path(cfg.corpus_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_suffix(out.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"doc_id": d.doc_id, "poet_id": d.poet_id,
                                 "century": d.century, "text": d.text},
                                ensure_ascii=False, sort_keys=True) + "\n")
    tmp.replace(out)
    truth = Path(cfg.workdir) / "synth" / "truth.json"
    synth_mod.save_truth(cfg.synth, truth)
    manifest.record("synth", [truth])


def stage_ingest(cfg: PipelineConfig, manifest: Manifest) -> None:
    docs = corpus_mod.load_documents(cfg.corpus_path, cfg.corpus_metadata,
                                     cfg.century_range)
    docs = corpus_mod.normalize_documents(docs)
    out = Path(cfg.workdir) / "ingest" / "docs.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_suffix(".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"doc_id": d.doc_id, "poet_id": d.poet_id,
                                 "century": d.century, "text": d.text},
                                ensure_ascii=False, sort_keys=True) + "\n")
    tmp.replace(out)
    manifest.record("ingest", [out])


def _load_ingested(cfg: PipelineConfig) -> list[corpus_mod.RawDocument]:
    path = Path(cfg.workdir) / "ingest" / "docs.jsonl"
    return corpus_mod.load_documents(path, century_range=cfg.century_range)


def stage_slice(cfg: PipelineConfig, manifest: Manifest) -> None:
    docs = _load_ingested(cfg)
    files = []
    for kind in cfg.slice_kinds:
        slices = corpus_mod.build_slices(docs, kind, cfg.viability_threshold)
        out_dir = Path(cfg.workdir) / "slices" / kind
        for slc in slices:
            corpus_mod.save_slice(slc, out_dir)
            files += [out_dir / f"{slc.slice_id}.txt",
                      out_dir / f"{slc.slice_id}.meta.json"]
    manifest.record("slice", files)


def stage_balance(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    files = []
    for sid in _slice_ids(workdir, "century"):
        slc = corpus_mod.load_slice(workdir / "slices" / "century", sid)
        balanced, plan = corpus_mod.balance_slice(
            slc, cfg.balance_target, cfg.seed, cfg.viability_threshold)
        out_dir = workdir / "balanced" / "century"
        corpus_mod.save_slice(balanced, out_dir)
        plan_path = workdir / "balanced" / "plans" / f"{sid}.plan.json"
        plan_path.parent.mkdir(parents=True, exist_ok=True)
        plan_path.write_text(json.dumps(plan.to_json(), ensure_ascii=False,
                                        sort_keys=True), "utf-8")
        files += [out_dir / f"{sid}.txt", out_dir / f"{sid}.meta.json", plan_path]
    manifest.record("balance", files)


def stage_train(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    files = []
    use_balanced = cfg.balance_enabled and manifest.stage_done("balance")

    if "century" in cfg.slice_kinds:
        century_dir = workdir / ("balanced" if use_balanced else "slices") / "century"
        for sid in _slice_ids(workdir, "century", balanced=use_balanced):
            slc = corpus_mod.load_slice(century_dir, sid)
            model = embed_mod.train(slc, cfg.train)
            prefix = workdir / "models" / "century" / sid
            embed_mod.save_model(model, prefix)
            files += [Path(f"{prefix}.vec"), Path(f"{prefix}.json")]
        # global reference always trains on the full (unbalanced) slices
        full = [corpus_mod.load_slice(workdir / "slices" / "century", sid)
                for sid in _slice_ids(workdir, "century")]
        reference = embed_mod.train_global_reference(full, cfg.train)
        prefix = workdir / "models" / "reference"
        embed_mod.save_model(reference, prefix)
        files += [Path(f"{prefix}.vec"), Path(f"{prefix}.json")]

    if "poet" in cfg.slice_kinds:
        for sid in _slice_ids(workdir, "poet"):
            slc = corpus_mod.load_slice(workdir / "slices" / "poet", sid)
            tcfg = cfg.train
            if sid in cfg.low_data_poets:
                tcfg = embed_mod.TrainConfig(
                    **{**tcfg.to_json(), "min_count": cfg.low_data_min_count})
            model = embed_mod.train(slc, tcfg)
            prefix = workdir / "models" / "poet" / sid
            embed_mod.save_model(model, prefix)
            files += [Path(f"{prefix}.vec"), Path(f"{prefix}.json")]

    manifest.record("train", files)


def stage_align(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    stoplist = cfg.stoplist()
    files = []
    has_century = (workdir / "models" / "reference.vec").exists()

    if has_century:
        reference = embed_mod.load_model(workdir / "models" / "reference")
        sids = sorted(p.stem for p in (workdir / "models" / "century").glob("*.vec"))
        models = [embed_mod.load_model(workdir / "models" / "century" / sid)
                  for sid in sids]

        if cfg.alignment_mode == "consecutive":
            aligned, maps = align_mod.chain_consecutive(models, stoplist)
        else:
            aligned, maps = align_mod.chain_to_reference(models, reference, stoplist)
        for model in aligned:
            prefix = workdir / "aligned" / "century" / model.slice_id
            embed_mod.save_model(model, prefix)
            files += [Path(f"{prefix}.vec"), Path(f"{prefix}.json")]
        for amap in maps:
            align_mod.check_orthogonality(amap)
            path = workdir / "aligned" / "maps" / \
                f"{amap.source_slice}__{amap.target_slice}.map.json"
            align_mod.save_map(amap, path)
            files.append(path)

        # century models aligned to the global reference (deviation baseline)
        for model in models:
            amap = align_mod.align_to_reference(model, reference, stoplist)
            align_mod.check_orthogonality(amap)
            prefix = workdir / "aligned" / "ref" / model.slice_id
            embed_mod.save_model(amap.apply(model), prefix)
            path = workdir / "aligned" / "maps" / \
                f"{amap.source_slice}__reference.map.json"
            align_mod.save_map(amap, path)
            files += [Path(f"{prefix}.vec"), Path(f"{prefix}.json"), path]

    poet_models_dir = workdir / "models" / "poet"
    if poet_models_dir.exists() and has_century:
        reference = embed_mod.load_model(workdir / "models" / "reference")
        for sid in sorted(p.stem for p in poet_models_dir.glob("*.vec")):
            model = embed_mod.load_model(poet_models_dir / sid)
            amap = align_mod.align_to_reference(model, reference, stoplist)
            align_mod.check_orthogonality(amap)
            prefix = workdir / "aligned" / "poet" / sid
            embed_mod.save_model(amap.apply(model), prefix)
            path = workdir / "aligned" / "maps" / f"{sid}__reference.map.json"
            align_mod.save_map(amap, path)
            files += [Path(f"{prefix}.vec"), Path(f"{prefix}.json"), path]

    manifest.record("align", files)


def stage_graph(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    stoplist = cfg.stoplist()
    files = []
    aligned_dir = workdir / "aligned" / "century"
    for sid in sorted(p.stem for p in aligned_dir.glob("*.vec")):
        model = embed_mod.load_model(aligned_dir / sid)
        g = graph_mod.build_mutual_knn(model, cfg.k, stoplist)
        partition = graph_mod.detect_communities(g)
        roles = graph_mod.node_roles(g, partition)
        prefix = workdir / "graphs" / sid
        graph_mod.save_graph(g, partition, roles, prefix)
        files += [Path(f"{prefix}.edges.tsv"), Path(f"{prefix}.roles.json")]
    manifest.record("graph", files)


def stage_metrics(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    stoplist = cfg.stoplist()
    panel = cfg.panel_words

    aligned_dir = workdir / "aligned" / "century"
    sids = sorted(p.stem for p in aligned_dir.glob("*.vec"))
    aligned = [embed_mod.load_model(aligned_dir / sid) for sid in sids]
    graphs, partitions, roles = [], [], []
    for sid in sids:
        g, part, r = graph_mod.load_graph(workdir / "graphs" / sid)
        graphs.append(g)
        partitions.append(part)
        roles.append(r)
    reference = embed_mod.load_model(workdir / "models" / "reference")
    ref_aligned = [embed_mod.load_model(workdir / "aligned" / "ref" / sid)
                   for sid in sids]
    sparse = [sid for sid in sids
              if json.loads((workdir / "slices" / "century" / f"{sid}.meta.json")
                            .read_text("utf-8"))["viability"] == "sparse-caution"]

    trajectories = metrics_mod.compute_panel(
        panel, sids, aligned, graphs, partitions, roles, cfg.k, stoplist,
        reference=reference, ref_aligned=ref_aligned, sparse_slices=sparse)

    payload = {
        "slice_ids": sids,
        "panel": panel,
        "k": cfg.k,
        "trajectories": {
            t.word: {
                "transitions": [
                    {"from_slice": x.from_slice, "to_slice": x.to_slice,
                     "drift": x.drift, "turnover": x.turnover,
                     "reallocation": x.reallocation,
                     "role_volatility": x.role_volatility}
                    for x in t.transitions
                ],
                "per_slice": t.per_slice,
                "flags": sorted(t.flags),
            }
            for t in trajectories
        },
    }
    out_dir = workdir / "metrics"
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / "trajectories.json"
    traj_path.write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True),
                         "utf-8")

    panel_path = out_dir / "transition_panel.csv"
    report_mod.write_csv(panel_path,
                         ["word", "from_slice", "to_slice", "drift", "turnover",
                          "reallocation", "role_volatility"],
                         [[t.word, x.from_slice, x.to_slice, x.drift, x.turnover,
                           x.reallocation, x.role_volatility]
                          for t in trajectories for x in t.transitions])

    cells = metrics_mod.agreement_cells_from_trajectories(trajectories)
    agreement_path = out_dir / "agreement.csv"
    report_mod.write_csv(agreement_path,
                         ["word", "slice", "local_drift", "reference_deviation",
                          "agreement_class"],
                         [[c.word, c.slice_id, c.local_drift, c.reference_deviation,
                           c.agreement_class] for c in cells])
    manifest.record("metrics", [traj_path, panel_path, agreement_path])


def stage_poet(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    stoplist = cfg.stoplist()
    aligned_dir = workdir / "aligned" / "poet"
    poet_ids = sorted(p.stem for p in aligned_dir.glob("*.vec"))
    if not poet_ids:
        raise MissingArtifactError("poet", "align")
    models = {pid: embed_mod.load_model(aligned_dir / pid) for pid in poet_ids}
    token_counts = {
        pid: json.loads((workdir / "slices" / "poet" / f"{pid}.meta.json")
                        .read_text("utf-8"))["token_count"]
        for pid in poet_ids
    }
    panel_obj = poetcmp_mod.PoetPanel(token_counts, models,
                                      cfg.poet_eligibility_threshold)

    dispersions = {}
    for word in cfg.panel_words:
        carriers = [p for p in panel_obj.eligible if word in models[p]]
        dispersions[word] = {
            "cosine_dispersion": poetcmp_mod.cosine_dispersion(word, panel_obj),
            "overlap_dispersion": poetcmp_mod.overlap_dispersion(
                word, panel_obj, cfg.k, stoplist),
            "eligible_carriers": len(carriers),
        }
    out_dir = workdir / "poet"
    out_dir.mkdir(parents=True, exist_ok=True)
    disp_path = out_dir / "dispersions.json"
    disp_path.write_text(json.dumps({
        "eligible": panel_obj.eligible,
        "poets": panel_obj.poets,
        "token_counts": token_counts,
        "dispersions": dispersions,
    }, ensure_ascii=False, sort_keys=True), "utf-8")

    poets, mat = poetcmp_mod.poet_similarity_matrix(panel_obj, stoplist)
    centered = poetcmp_mod.double_center(mat)
    raw_path = out_dir / "poet_matrix_raw.csv"
    centered_path = out_dir / "poet_matrix_centered.csv"
    for path, m in ((raw_path, mat), (centered_path, centered)):
        report_mod.write_csv(path, ["poet"] + poets,
                             [[poets[i]] + [float(m[i, j]) for j in range(len(poets))]
                              for i in range(len(poets))])
    manifest.record("poet", [disp_path, raw_path, centered_path])


def stage_compare(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    traj = json.loads((workdir / "metrics" / "trajectories.json").read_text("utf-8"))
    disp = json.loads((workdir / "poet" / "dispersions.json").read_text("utf-8"))

    trajectories = []
    for word in traj["panel"]:
        t = metrics_mod.WordTrajectory(word=word)
        for x in traj["trajectories"][word]["transitions"]:
            t.transitions.append(metrics_mod.TransitionMetrics(
                x["from_slice"], x["to_slice"], x["drift"], x["turnover"],
                x["reallocation"], x["role_volatility"]))
        trajectories.append(t)
    century = metrics_mod.century_signal(trajectories)

    disp_pairs = {
        w: (d["cosine_dispersion"], d["overlap_dispersion"])
        for w, d in disp["dispersions"].items()
    }
    poet = poetcmp_mod.poet_signal(disp_pairs)

    rows = []
    for word in traj["panel"]:
        c = century.get(word)
        p = poet.get(word)
        thin = disp["dispersions"][word]["eligible_carriers"] < cfg.poet_coverage_min
        if c is None or p is None:
            rows.append([word, c, p, None, "mixed", True])
            continue
        profile = poetcmp_mod.classify_pressure(word, c, p, cfg.pressure_lo,
                                                cfg.pressure_hi, caution=thin)
        rows.append([word, profile.century_signal, profile.poet_signal,
                     profile.ratio, profile.pressure_class, profile.caution])
    out = workdir / "compare" / "pressure.csv"
    report_mod.write_csv(out, ["word", "century_signal", "poet_signal", "ratio",
                               "pressure_class", "caution"], rows)
    manifest.record("compare", [out])


def stage_report(cfg: PipelineConfig, manifest: Manifest) -> None:
    workdir = Path(cfg.workdir)
    omissions = report_mod.emit_report(workdir, cfg.panel_fields, cfg.heatmap)
    files = sorted(p for p in (workdir / "report").iterdir() if p.is_file())
    manifest.record("report", files)
    if omissions:
        print(f"report: omitted sections: {', '.join(omissions)}", file=sys.stderr)


STAGE_FUNCS = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "slice": stage_slice,
    "balance": stage_balance,
    "train": stage_train,
    "align": stage_align,
    "graph": stage_graph,
    "metrics": stage_metrics,
    "poet": stage_poet,
    "compare": stage_compare,
    "report": stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig, force: bool = False) -> bool:
    """Run one stage; returns False when skipped as already current."""
    if stage not in STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}")
    manifest = Manifest(cfg)
    _require(manifest, stage)
    if not force and manifest.is_current(stage):
        return False
    STAGE_FUNCS[stage](cfg, manifest)
    return True


def run_all(cfg: PipelineConfig, force: bool = False) -> None:
    stages = ["ingest", "slice", "balance", "train", "align", "graph",
              "metrics", "poet", "compare", "report"]
    if cfg.synth is not None:
        stages.insert(0, "synth")
    if not cfg.balance_enabled or "century" not in cfg.slice_kinds:
        stages.remove("balance")
    if "poet" not in cfg.slice_kinds:
        stages.remove("poet")
        stages.remove("compare")
    for stage in stages:
        ran = run_stage(stage, cfg, force)
        print(f"{stage}: {'done' if ran else 'up to date'}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lexshift",
        description="Lexical semantic change across corpus slices.")
    parser.add_argument("stage", choices=STAGES + ("all",))
    parser.add_argument("--config", "-c", required=True, help="pipeline config JSON")
    parser.add_argument("--workdir", help="override the configured workdir "
                                          "(env: LEXSHIFT_WORKDIR)")
    parser.add_argument("--force", action="store_true",
                        help="re-run even when artifacts are current")
    args = parser.parse_args(argv)

    import os
    workdir = args.workdir or os.environ.get("LEXSHIFT_WORKDIR")
    try:
        cfg = PipelineConfig.load(args.config, workdir)
        if args.stage == "all":
            run_all(cfg, args.force)
        else:
            ran = run_stage(args.stage, cfg, args.force)
            print(f"{args.stage}: {'done' if ran else 'up to date'}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return 3
    except (DataError, AlignmentError, LexshiftError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

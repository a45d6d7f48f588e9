"""Tidy report bundle: one CSV per figure/table shape, plus an optional SVG heatmap.

Every file has a published column schema (REPORT_SCHEMAS); validate_report
checks emitted files against it.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from statistics import mean
from typing import Mapping, Sequence

from .errors import DataError

REPORT_SCHEMAS: dict[str, list[str]] = {
    "drift_vs_turnover.csv": ["word", "field", "mean_drift", "mean_turnover", "caution"],
    "signal_profiles.csv": ["word", "field", "drift", "turnover", "role_volatility",
                            "century_signal", "poet_signal", "caution"],
    "trajectories_raw.csv": ["word", "slice", "centrality", "bridge"],
    "trajectories_centered.csv": ["word", "slice", "centered_centrality",
                                  "centered_bridge"],
    "transition_dynamics.csv": ["word", "from_slice", "to_slice", "drift",
                                "turnover", "reallocation", "role_volatility"],
    "agreement.csv": ["word", "slice", "local_drift", "reference_deviation",
                      "agreement_class"],
    "pressure.csv": ["word", "century_signal", "poet_signal", "ratio",
                     "pressure_class", "caution"],
    "panel_summary.csv": ["word", "field", "drift", "turnover", "graph_role",
                          "dominant_pressure"],
}
# poet matrices have a poet-dependent header: "poet" + one column per poet
MATRIX_FILES = ("poet_matrix_raw.csv", "poet_matrix_centered.csv")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    tmp.replace(path)


def _mean_or_none(values: list[float]) -> float | None:
    return mean(values) if values else None


def graph_role_label(word_traj: Mapping, n_slices: int,
                     realloc_threshold: float = 0.5) -> str:
    """Trajectory-shape label: low-data caution when the word misses the vocab
    in more than half the slices, else community-migrant when mean reallocation
    exceeds the threshold, else stable-role."""
    present = sum(1 for e in word_traj["per_slice"] if "centrality" in e)
    if present < (n_slices + 1) // 2:  # absent in more than half the slices
        return "Low-data caution"
    reallocs = [t["reallocation"] for t in word_traj["transitions"]
                if t["reallocation"] is not None]
    if reallocs and mean(reallocs) > realloc_threshold:
        return "Community-migrant"
    return "Stable-role"


PRESSURE_LABELS = {
    "time_sensitive": "More time-sensitive",
    "poet_sensitive": "More poet-sensitive",
    "mixed": "Mixed",
}


def emit_report(workdir: str | Path,
                panel_fields: Mapping[str, str],
                heatmap: bool = False) -> list[str]:
    """Emit the report bundle from stage artifacts; returns the list of omitted
    sections (empty when all inputs were available)."""
    workdir = Path(workdir)
    report_dir = workdir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    omissions: list[str] = []

    traj_path = workdir / "metrics" / "trajectories.json"
    pressure_path = workdir / "compare" / "pressure.csv"
    agreement_path = workdir / "metrics" / "agreement.csv"
    matrix_raw = workdir / "poet" / "poet_matrix_raw.csv"
    matrix_centered = workdir / "poet" / "poet_matrix_centered.csv"

    pressure_rows: dict[str, dict] = {}
    if pressure_path.exists():
        with pressure_path.open(encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                pressure_rows[rec["word"]] = rec
        write_csv(report_dir / "pressure.csv", REPORT_SCHEMAS["pressure.csv"],
                  [[r["word"], r["century_signal"], r["poet_signal"], r["ratio"],
                    r["pressure_class"], r["caution"]] for r in pressure_rows.values()])
    else:
        omissions.extend(["pressure.csv"])

    if not traj_path.exists():
        omissions.extend(["drift_vs_turnover.csv", "signal_profiles.csv",
                          "trajectories_raw.csv", "trajectories_centered.csv",
                          "transition_dynamics.csv", "panel_summary.csv"])
        if heatmap:
            omissions.append("heatmap.svg")
    else:
        data = json.loads(traj_path.read_text("utf-8"))
        panel: list[str] = data["panel"]
        n_slices = len(data["slice_ids"])
        trajectories = data["trajectories"]

        dvt_rows, profile_rows, summary_rows = [], [], []
        raw_rows, centered_rows, dyn_rows = [], [], []
        for w in panel:
            t = trajectories[w]
            drifts = [x["drift"] for x in t["transitions"] if x["drift"] is not None]
            turns = [x["turnover"] for x in t["transitions"]
                     if x["turnover"] is not None]
            vols = [x["role_volatility"] for x in t["transitions"]
                    if x["role_volatility"] is not None]
            pr = pressure_rows.get(w, {})
            caution = pr.get("caution", "true")
            field = panel_fields.get(w, "panel")
            dvt_rows.append([w, field, _mean_or_none(drifts), _mean_or_none(turns),
                             caution])
            profile_rows.append([w, field, _mean_or_none(drifts), _mean_or_none(turns),
                                 _mean_or_none(vols), pr.get("century_signal", ""),
                                 pr.get("poet_signal", ""), caution])
            role = graph_role_label(t, n_slices)
            pressure_label = PRESSURE_LABELS.get(pr.get("pressure_class", ""), "")
            if pressure_label and pr.get("caution") == "true":
                pressure_label += " (caution)"
            summary_rows.append([w, field, _mean_or_none(drifts), _mean_or_none(turns),
                                 role, pressure_label])
            for e in t["per_slice"]:
                if "centrality" in e:
                    raw_rows.append([w, e["slice"], e["centrality"], e["bridge"]])
                    centered_rows.append([w, e["slice"], e["centered_centrality"],
                                          e["centered_bridge"]])
            for x in t["transitions"]:
                dyn_rows.append([w, x["from_slice"], x["to_slice"], x["drift"],
                                 x["turnover"], x["reallocation"],
                                 x["role_volatility"]])

        write_csv(report_dir / "drift_vs_turnover.csv",
                  REPORT_SCHEMAS["drift_vs_turnover.csv"], dvt_rows)
        write_csv(report_dir / "signal_profiles.csv",
                  REPORT_SCHEMAS["signal_profiles.csv"], profile_rows)
        write_csv(report_dir / "trajectories_raw.csv",
                  REPORT_SCHEMAS["trajectories_raw.csv"], raw_rows)
        write_csv(report_dir / "trajectories_centered.csv",
                  REPORT_SCHEMAS["trajectories_centered.csv"], centered_rows)
        write_csv(report_dir / "transition_dynamics.csv",
                  REPORT_SCHEMAS["transition_dynamics.csv"], dyn_rows)
        write_csv(report_dir / "panel_summary.csv",
                  REPORT_SCHEMAS["panel_summary.csv"], summary_rows)
        _write_summary_text(report_dir / "summary.txt", summary_rows)
        if heatmap:
            _write_heatmap_svg(report_dir / "heatmap.svg", panel,
                               data["slice_ids"], trajectories)

    if agreement_path.exists():
        with agreement_path.open(encoding="utf-8") as fh:
            rows = [[r["word"], r["slice"], r["local_drift"],
                     r["reference_deviation"], r["agreement_class"]]
                    for r in csv.DictReader(fh)]
        write_csv(report_dir / "agreement.csv", REPORT_SCHEMAS["agreement.csv"], rows)
    else:
        omissions.append("agreement.csv")

    for src, name in ((matrix_raw, "poet_matrix_raw.csv"),
                      (matrix_centered, "poet_matrix_centered.csv")):
        if src.exists():
            (report_dir / name).write_text(src.read_text("utf-8"), "utf-8")
        else:
            omissions.append(name)

    (report_dir / "omissions.json").write_text(
        json.dumps(sorted(omissions)), "utf-8")
    return omissions


def _write_summary_text(path: Path, summary_rows: list) -> None:
    # human-readable table with 2-decimal rounding; full precision lives in the CSVs
    lines = [f"{'word':<12} {'field':<18} {'drift':>6} {'turn':>6} "
             f"{'graph role':<18} {'pressure':<28}"]
    for w, field, drift, turn, role, pressure in summary_rows:
        d = f"{drift:.2f}" if drift is not None else "-"
        t = f"{turn:.2f}" if turn is not None else "-"
        lines.append(f"{w:<12} {field:<18} {d:>6} {t:>6} {role:<18} {pressure:<28}")
    path.write_text("\n".join(lines) + "\n", "utf-8")


def _write_heatmap_svg(path: Path, panel: Sequence[str], slice_ids: Sequence[str],
                       trajectories: Mapping) -> None:
    """Diverging heatmap of century-centered degree centrality."""
    values: dict[tuple[str, str], float] = {}
    for w in panel:
        for e in trajectories[w]["per_slice"]:
            if "centered_centrality" in e:
                values[(w, e["slice"])] = e["centered_centrality"]
    vmax = max((abs(v) for v in values.values()), default=1.0) or 1.0
    cell, left, top = 28, 120, 40
    width = left + cell * len(slice_ids) + 20
    height = top + cell * len(panel) + 20
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" font-family="sans-serif" font-size="11">']
    for j, sid in enumerate(slice_ids):
        parts.append(f'<text x="{left + j * cell + 4}" y="{top - 8}">{sid}</text>')
    for i, w in enumerate(panel):
        parts.append(f'<text x="4" y="{top + i * cell + 18}">{w}</text>')
        for j, sid in enumerate(slice_ids):
            v = values.get((w, sid))
            if v is None:
                fill = "#dddddd"
            else:
                x = max(-1.0, min(1.0, v / vmax))
                if x >= 0:  # white -> red
                    g = int(255 * (1 - x))
                    fill = f"#ff{g:02x}{g:02x}"
                else:  # white -> blue
                    g = int(255 * (1 + x))
                    fill = f"#{g:02x}{g:02x}ff"
            parts.append(f'<rect x="{left + j * cell}" y="{top + i * cell}" '
                         f'width="{cell - 2}" height="{cell - 2}" fill="{fill}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts), "utf-8")


def validate_report(workdir: str | Path) -> dict[str, str]:
    """Check every emitted report file against its schema.

    Returns {filename: "ok" | "omitted"}; raises DataError on schema violations.
    """
    report_dir = Path(workdir) / "report"
    omissions_path = report_dir / "omissions.json"
    if not omissions_path.exists():
        raise DataError(f"no report bundle in {report_dir}")
    omitted = set(json.loads(omissions_path.read_text("utf-8")))
    status: dict[str, str] = {}
    for name, columns in REPORT_SCHEMAS.items():
        path = report_dir / name
        if name in omitted:
            if path.exists():
                raise DataError(f"{name} listed as omitted but present")
            status[name] = "omitted"
            continue
        if not path.exists():
            raise DataError(f"{name} missing and not listed as omitted")
        with path.open(encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != columns:
                raise DataError(f"{name}: header {header} != schema {columns}")
            for row in reader:
                if len(row) != len(columns):
                    raise DataError(f"{name}: ragged row {row}")
        status[name] = "ok"
    for name in MATRIX_FILES:
        path = report_dir / name
        if name in omitted:
            status[name] = "omitted"
            continue
        if not path.exists():
            raise DataError(f"{name} missing and not listed as omitted")
        with path.open(encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[0] != "poet":
                raise DataError(f"{name}: first column must be 'poet'")
            n = len(header) - 1
            rows = list(reader)
            if len(rows) != n or any(len(r) != n + 1 for r in rows):
                raise DataError(f"{name}: matrix is not {n}x{n}")
        status[name] = "ok"
    return status

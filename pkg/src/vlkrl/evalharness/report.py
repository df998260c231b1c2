"""Run reports: per-episode records plus recomputable aggregates.

Aggregates are stored redundantly and re-derived on load; a mismatch
raises, so a tampered or stale report never parses quietly. Serialization
is deterministic (sorted keys, no timestamps), which the byte-identical
reproducibility guarantee relies on.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

TABLE_COLUMNS = (
    "Avg. Precision", "Avg. F1", "Avg. Recall",
    "Complete/Tot", "Success/Tot", "Avg. Turn (Succ)", "Avg. Turn (All)",
)


@dataclass(frozen=True)
class EpisodeRecord:
    seed: int
    episode: int
    goal_seed: int
    outcome: str
    success: bool
    complete: bool
    terminated_early: bool
    turns: int
    episode_return: float
    act_matches: int
    act_predicted: int
    act_reference: int
    attribution: str  # "implicit" | "explicit" | "other" | "" for non-failures
    constraint_satisfaction: dict[str, bool] = field(default_factory=dict)
    retry_attempts: int = 0
    gateway_calls: int = 0


def aggregate(records: list[EpisodeRecord]) -> dict:
    n = len(records)
    if n == 0:
        return {"episodes": 0}
    matched = sum(r.act_matches for r in records)
    n_pred = sum(r.act_predicted for r in records)
    n_ref = sum(r.act_reference for r in records)
    precision = matched / n_pred if n_pred else 0.0
    recall = matched / n_ref if n_ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    successes = [r for r in records if r.success]
    failures = [r for r in records if r.outcome == "failure"]
    implicit_failures = [r for r in failures if r.attribution == "implicit"]
    explicit_failures = [r for r in failures if r.attribution == "explicit"]
    return {
        "episodes": n,
        "avg_precision": precision,
        "avg_recall": recall,
        "avg_f1": f1,
        "complete_rate": sum(r.complete for r in records) / n,
        "success_rate": len(successes) / n,
        "avg_turn_succ": (
            sum(r.turns for r in successes) / len(successes) if successes else 0.0
        ),
        "avg_turn_all": sum(r.turns for r in records) / n,
        "avg_return": sum(r.episode_return for r in records) / n,
        "failures": len(failures),
        "implicit_failure_rate": len(implicit_failures) / n,
        "explicit_failure_rate": len(explicit_failures) / n,
        "implicit_failure_share": (
            len(implicit_failures) / len(failures) if failures else 0.0
        ),
        "explicit_failure_share": (
            len(explicit_failures) / len(failures) if failures else 0.0
        ),
        "avg_retry_attempts": sum(r.retry_attempts for r in records) / n,
        "total_gateway_calls": sum(r.gateway_calls for r in records),
    }


def config_fingerprint(config_dict: dict) -> str:
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass
class RunReport:
    config: dict
    fingerprint: str
    records: list[EpisodeRecord]
    aggregates: dict
    per_seed: dict[str, dict]
    curves: dict[str, list[dict]] = field(default_factory=dict)

    @staticmethod
    def build(config: dict, records: list[EpisodeRecord],
              curves: dict[str, list[dict]] | None = None) -> "RunReport":
        per_seed = {}
        for seed in sorted({r.seed for r in records}):
            per_seed[str(seed)] = aggregate([r for r in records if r.seed == seed])
        return RunReport(
            config=config,
            fingerprint=config_fingerprint(config),
            records=records,
            aggregates=aggregate(records),
            per_seed=per_seed,
            curves=curves or {},
        )

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "fingerprint": self.fingerprint,
            "records": [asdict(r) for r in self.records],
            "aggregates": self.aggregates,
            "per_seed": self.per_seed,
            "curves": self.curves,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def load_report(path: str | Path) -> RunReport:
    """Load and audit: stored aggregates must match recomputation."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    records = [EpisodeRecord(**raw) for raw in payload["records"]]
    report = RunReport(
        config=payload["config"],
        fingerprint=payload["fingerprint"],
        records=records,
        aggregates=payload["aggregates"],
        per_seed=payload["per_seed"],
        curves=payload.get("curves", {}),
    )
    recomputed = aggregate(records)
    if recomputed != report.aggregates:
        raise ValueError("report aggregates do not match their records")
    if config_fingerprint(report.config) != report.fingerprint:
        raise ValueError("report fingerprint does not match its config")
    return report


def render_table(rows: dict[str, dict]) -> str:
    """Plain-text table in the conventional column order, one row per run."""
    keys = ("avg_precision", "avg_f1", "avg_recall", "complete_rate",
            "success_rate", "avg_turn_succ", "avg_turn_all")
    label_width = max([len(label) for label in rows] + [len("Model")])
    header = "Model".ljust(label_width) + " | " + " | ".join(
        c.rjust(16) for c in TABLE_COLUMNS
    )
    lines = [header, "-" * len(header)]
    for label, agg in rows.items():
        cells = []
        for key in keys:
            value = agg.get(key, 0.0)
            cells.append((f"{value:.4f}" if "turn" not in key else f"{value:.2f}").rjust(16))
        lines.append(label.ljust(label_width) + " | " + " | ".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(report: RunReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    keys = ("avg_precision", "avg_f1", "avg_recall", "complete_rate",
            "success_rate", "avg_turn_succ", "avg_turn_all",
            "implicit_failure_rate", "explicit_failure_rate", "episodes")
    writer.writerow(("scope",) + keys)
    writer.writerow(["overall"] + [report.aggregates.get(k, "") for k in keys])
    for seed, agg in sorted(report.per_seed.items(), key=lambda kv: int(kv[0])):
        writer.writerow([f"seed_{seed}"] + [agg.get(k, "") for k in keys])
    return buffer.getvalue()


def write_report(report: RunReport, out_dir: str | Path,
                 label: str | None = None) -> Path:
    """Persist report.json, report.csv, table.txt, and figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.csv").write_text(write_csv(report), encoding="utf-8")
    label = label or report.config.get("mode", "run")
    (out / "table.txt").write_text(
        render_table({label: report.aggregates}), encoding="utf-8"
    )
    from vlkrl.evalharness import figures

    figures.save_report_figures(report, out)
    return out

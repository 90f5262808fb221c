"""Held-out evaluation, sliding-window video scoring, and comparison reports.

The positive class is always the target action. Test clips are center-sampled
and decided by argmax over the binary softmax, so evaluation is deterministic
for a fixed checkpoint.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .actions import ActionLabel
from .dataset import Clip, VideoManifest
from .errors import (
    EmptyEvaluationError,
    ParameterError,
    ReportSchemaError,
    VideoTooShortError,
)
from .frames import FrameStore
from .network import BackboneConfig, HeadConfig, model_forward
from .sampler import SamplerConfig, sample_indices

HEAD_ORDER = ("fully_connected", "lstm", "gru", "bilstm", "bigru")
HEAD_DISPLAY = {
    "fully_connected": "Fully Connected",
    "lstm": "LSTM",
    "gru": "GRU",
    "bilstm": "BiLSTM",
    "bigru": "BiGRU",
}
ACTION_DISPLAY = {
    "abdominal_access": "Abdominal Access",
    "grasping_anatomy": "Grasping Anatomy",
    "knot_pushing": "Knot Pushing",
    "needle_pulling": "Needle Pulling",
    "needle_pushing": "Needle Pushing",
    "suction": "Suction",
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ParameterError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float


def compute_metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy, precision, recall, F1 from counts; 0/0 sub-expressions yield 0."""
    if counts.total == 0:
        raise EmptyEvaluationError("cannot compute metrics over zero clips")

    def _ratio(num, den):
        return num / den if den > 0 else 0.0

    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return Metrics(
        accuracy=(counts.tp + counts.tn) / counts.total,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def average_accuracy(per_action: Sequence[float]) -> float:
    """Arithmetic mean over exactly six per-action accuracies."""
    if len(per_action) != 6:
        raise ParameterError(f"expected exactly 6 per-action values, got {len(per_action)}")
    return float(sum(per_action)) / 6.0


def evaluate_clips(
    labeled_clips: Sequence[tuple[Clip, int]],
    stores: Mapping[str, FrameStore],
    backbone: BackboneConfig,
    head: HeadConfig,
    params,
    sequence_length: int = 20,
) -> tuple[ConfusionCounts, Metrics]:
    """Center-sample and score each test clip; accumulate a confusion table."""
    if not labeled_clips:
        raise EmptyEvaluationError("test split is empty")
    center = SamplerConfig(sequence_length=sequence_length, mode="center")
    tp = fp = fn = tn = 0
    for clip, truth in labeled_clips:
        indices = sample_indices(clip.length, center)
        frames = stores[clip.video_id].load_frames(clip, indices)
        fwd = model_forward(frames, backbone, head, params, training=False)
        predicted = int(np.argmax(fwd.probabilities))
        if truth == 1:
            tp += predicted
            fn += 1 - predicted
        else:
            fp += predicted
            tn += 1 - predicted
    counts = ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)
    return counts, compute_metrics(counts)


@dataclass
class ActionTimeline:
    """Per-window target probabilities for one action over one video."""

    video_id: str
    action: ActionLabel
    entries: list[tuple[int, int, float]] = field(default_factory=list)  # (start, end, prob)


def sliding_window_infer(
    manifest: VideoManifest,
    models: Mapping[ActionLabel, tuple[dict, BackboneConfig, HeadConfig]],
    stores: Mapping[str, FrameStore],
    window_len: int = 50,
    stride: int = 25,
    sequence_length: int = 20,
) -> list[ActionTimeline]:
    """Score fixed-stride windows over a whole video with every action model.

    Windows tile the video at the given stride; a trailing partial window is
    dropped. Each window is center-sampled to the model's input length.
    """
    if window_len < 1 or stride < 1:
        raise ParameterError("window_len and stride must be positive")
    if manifest.frame_count < window_len:
        raise VideoTooShortError(
            f"video {manifest.video_id} has {manifest.frame_count} frames, "
            f"shorter than one window of {window_len}"
        )
    store = stores[manifest.video_id]
    center = SamplerConfig(sequence_length=sequence_length, mode="center")
    rel_indices = sample_indices(window_len, center)
    starts = range(0, manifest.frame_count - window_len + 1, stride)

    timelines = [ActionTimeline(manifest.video_id, action) for action in models]
    for start in starts:
        frames = store.load_absolute(start + rel_indices)
        for timeline, (params, backbone, head) in zip(timelines, models.values()):
            fwd = model_forward(frames, backbone, head, params, training=False)
            timeline.entries.append((start, start + window_len, float(fwd.probabilities[1])))
    return timelines


def write_timelines(path: str | Path, timelines: Sequence[ActionTimeline]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "action", "start_frame", "end_frame", "probability"])
        for timeline in timelines:
            for start, end, prob in timeline.entries:
                writer.writerow([timeline.video_id, timeline.action.value, start, end, f"{prob:.6f}"])


@dataclass(frozen=True)
class ReportRow:
    """Metrics for one (backbone, head, action) triple; values are fractions in [0, 1]."""

    backbone: str
    head: str
    action: ActionLabel
    metrics: Metrics

    def __post_init__(self):
        for name in ("accuracy", "precision", "recall", "f1"):
            value = getattr(self.metrics, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {value}")


def write_metrics_csv(path: str | Path, rows: Sequence[ReportRow]) -> None:
    """One row per (backbone, head, action), plus an average row per model
    whenever all six actions are present."""
    grouped = _group_rows(rows)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backbone", "head", "action", "accuracy", "precision", "recall", "f1"])
        for (backbone, head), by_action in grouped.items():
            for action in sorted(by_action, key=lambda a: a.value):
                m = by_action[action].metrics
                writer.writerow(
                    [backbone, head, action.value]
                    + [f"{v:.6f}" for v in (m.accuracy, m.precision, m.recall, m.f1)]
                )
            if len(by_action) == 6:
                avg = average_accuracy([r.metrics.accuracy for r in by_action.values()])
                writer.writerow([backbone, head, "average", f"{avg:.6f}", "", "", ""])


def read_metrics_csv(path: str | Path) -> list[ReportRow]:
    rows = []
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            if record["action"] == "average":
                continue
            rows.append(
                ReportRow(
                    backbone=record["backbone"],
                    head=record["head"],
                    action=ActionLabel(record["action"]),
                    metrics=Metrics(
                        accuracy=float(record["accuracy"]),
                        precision=float(record["precision"]),
                        recall=float(record["recall"]),
                        f1=float(record["f1"]),
                    ),
                )
            )
    return rows


def _group_rows(rows: Sequence[ReportRow]):
    grouped: dict[tuple[str, str], dict[ActionLabel, ReportRow]] = {}
    for row in rows:
        by_action = grouped.setdefault((row.backbone, row.head), {})
        if row.action in by_action:
            raise ReportSchemaError(
                f"duplicate row for ({row.backbone}, {row.head}, {row.action.value})"
            )
        by_action[row.action] = row
    return grouped


def render_report(rows: Sequence[ReportRow], out_dir: str | Path) -> dict[str, Path]:
    """Render the accuracy comparison table and the per-action F1 bar data.

    Rows are grouped by backbone with heads in the fixed order (Fully
    Connected, LSTM, GRU, BiLSTM, BiGRU); columns are the actions present
    plus an Average column when all six are covered. Values are percentages
    to two decimals; the best value in each column of the text table is
    marked with '*'.
    """
    if not rows:
        raise ReportSchemaError("no report rows supplied")
    grouped = _group_rows(rows)
    action_sets = {frozenset(by_action) for by_action in grouped.values()}
    if len(action_sets) != 1:
        raise ReportSchemaError("rows carry inconsistent action sets across models")
    actions = sorted(next(iter(action_sets)), key=lambda a: a.value)
    with_average = len(actions) == 6

    def _sort_key(key):
        backbone, head = key
        head_rank = HEAD_ORDER.index(head) if head in HEAD_ORDER else len(HEAD_ORDER)
        return (backbone, head_rank, head)

    model_keys = sorted(grouped, key=_sort_key)
    table: list[list] = []
    for key in model_keys:
        by_action = grouped[key]
        accs = [100.0 * by_action[a].metrics.accuracy for a in actions]
        row = [key[0], HEAD_DISPLAY.get(key[1], key[1])] + accs
        if with_average:
            row.append(average_accuracy(accs))
        table.append(row)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["Backbone", "Head"] + [ACTION_DISPLAY.get(a.value, a.value) for a in actions]
    if with_average:
        header.append("Average")

    table_csv = out_dir / "accuracy_table.csv"
    with open(table_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table:
            writer.writerow(row[:2] + [f"{v:.2f}" for v in row[2:]])

    n_numeric = len(header) - 2
    best = [max(row[2 + c] for row in table) for c in range(n_numeric)]
    table_txt = out_dir / "accuracy_table.txt"
    with open(table_txt, "w") as fh:
        cells = [header] + [
            row[:2]
            + [
                f"{v:.2f}*" if v == best[c] else f"{v:.2f}"
                for c, v in enumerate(row[2:])
            ]
            for row in table
        ]
        widths = [max(len(str(line[c])) for line in cells) for c in range(len(header))]
        for line in cells:
            fh.write("  ".join(str(cell).ljust(widths[c]) for c, cell in enumerate(line)).rstrip() + "\n")

    f1_csv = out_dir / "f1_bars.csv"
    with open(f1_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backbone", "head", "action", "f1"])
        for key in model_keys:
            for action in actions:
                writer.writerow(
                    [key[0], key[1], action.value, f"{100.0 * grouped[key][action].metrics.f1:.2f}"]
                )

    return {"table_csv": table_csv, "table_txt": table_txt, "f1_csv": f1_csv}

"""Execution Gantt chart: an SVG with one row per actor plus the CSV it is drawn from."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .model import ProblemInstance, Schedule, TaskKind

COLOURS = {
    TaskKind.GLUE: "#e0a526",
    TaskKind.PICK: "#8c6bb1",
    TaskKind.PLACE: "#3b75af",
    TaskKind.SCREW: "#519e3e",
}

CSV_FIELDS = ("task", "actor", "kind", "level", "start", "end")


@dataclass
class GanttData:
    rows: list[dict]
    barriers: list[tuple[int, int]]  # (level, time)
    actors: list
    labels: list[str]


def gantt_data(schedule: Schedule, instance: ProblemInstance) -> GanttData:
    rows = []
    for i in sorted(schedule.assignment, key=lambda i: (schedule.start[i], i)):
        rows.append({
            "task": instance.task_ids[i],
            "actor": instance.actor_ids[schedule.assignment[i]],
            "kind": instance.tasks[i].kind.value,
            "level": schedule.level[i],
            "start": schedule.start[i],
            "end": schedule.end[i],
        })
    used = sorted(set(schedule.level.values()))
    barriers = [(l, schedule.barriers[l]) for l in used]
    return GanttData(rows, barriers, list(instance.actor_ids), [a.name for a in instance.actors])


def write_csv(data: GanttData, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        w.writerows(data.rows)


def draw(data: GanttData, path, until: float | None = None):
    """Render the chart; ``until`` crops the time axis (handy for long schedules)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Patch

    row_of = {a: r for r, a in enumerate(data.actors)}
    fig, ax = plt.subplots(figsize=(12, 1.2 + 0.8 * len(data.actors)))
    for r in data.rows:
        if until is not None and r["start"] >= until:
            continue
        ax.broken_barh([(r["start"], r["end"] - r["start"])], (row_of[r["actor"]] - 0.4, 0.8),
                       facecolors=COLOURS.get(TaskKind(r["kind"]), "grey"), edgecolors="black", linewidth=0.3)
    for lvl, t in data.barriers:
        if until is not None and t > until:
            continue
        ax.axvline(t, color="crimson", linestyle="--", linewidth=0.8)
        ax.text(t, len(data.actors) - 0.45, f"L{lvl}", color="crimson", fontsize=7, ha="right", va="bottom")
    ax.set_yticks(range(len(data.actors)), data.labels)
    ax.set_ylim(-0.6, len(data.actors) - 0.1)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("actor")
    if until is not None:
        ax.set_xlim(0, until)
    ax.legend(handles=[Patch(color=c, label=k.value) for k, c in COLOURS.items()],
              loc="upper center", bbox_to_anchor=(0.5, -0.25), ncol=len(COLOURS), frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return fig


def export_gantt(schedule: Schedule, instance: ProblemInstance, out, until: float | None = None) -> tuple[Path, Path]:
    """Write ``out`` (SVG) and a sibling ``.csv``; returns both paths."""
    out = Path(out)
    if out.suffix.lower() != ".svg":
        out = out.with_suffix(".svg")
    data = gantt_data(schedule, instance)
    csv_path = out.with_suffix(".csv")
    write_csv(data, csv_path)
    draw(data, out, until)
    return out, csv_path

"""Attack-trace classification and artifact emission.

Traces are append-only logs of attacker actions. ``classify`` labels every
trace event with privacy-violation categories from a fixed four-category
taxonomy (collection / processing / dissemination / invasion, each with a
closed activity vocabulary); the mapping is data, so alternative codings
can be passed in. ``emit`` renders deterministic CSV files and small
self-contained SVG plots (fixed 800x600 canvas, stable element ids).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import mlat
from .mlat import DistanceSample, PositionEstimate

__all__ = [
    "TraceEvent", "AttackTrace", "ViolationReport", "TAXONOMY",
    "DEFAULT_EVENT_LABELS", "classify", "emit",
]

EVENT_KINDS = ("probe", "profile_poll", "localize_result", "identify_round",
               "export")

# Category -> closed activity vocabulary.
TAXONOMY: dict[str, tuple[str, ...]] = {
    "Collection": ("Surveillance", "Information probing", "Interrogation"),
    "Processing": ("Aggregation", "Identification", "Insecurity",
                   "Secondary use", "Exclusion"),
    "Dissemination": ("Breach of confidentiality", "Disclosure", "Exposure",
                      "Increased accessibility", "Appropriation", "Distortion"),
    "Invasion": ("Intrusion of someone's private life",),
}

DEFAULT_EVENT_LABELS: dict[str, tuple[tuple[str, str], ...]] = {
    "probe": (("Collection", "Surveillance"),),
    "profile_poll": (("Collection", "Surveillance"),),
    "localize_result": (("Processing", "Identification"),
                        ("Processing", "Aggregation")),
    "identify_round": (("Processing", "Identification"),
                       ("Processing", "Aggregation")),
    "export": (("Dissemination", "Increased accessibility"),),
}

INTRUSION_LABEL = ("Invasion", "Intrusion of someone's private life")


@dataclass(frozen=True)
class TraceEvent:
    kind: str
    t: float
    target_id: str | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind {self.kind!r}")


class AttackTrace:
    """Ordered attack log; timestamps must be non-decreasing."""

    def __init__(self):
        self.events: list[TraceEvent] = []

    def append(self, event: TraceEvent) -> None:
        if self.events and event.t < self.events[-1].t:
            raise ValueError("trace timestamps must be non-decreasing")
        if event.kind == "localize_result":
            prior = sum(1 for e in self.events
                        if e.kind == "probe" and e.target_id == event.target_id)
            if prior < 1:
                raise ValueError("localize_result without prior probes")
        self.events.append(event)

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class ViolationReport:
    # (event index, event kind, category, activity) per assigned label
    labels: list[tuple[int, str, str, str]]
    tallies: dict[tuple[str, str], int]
    category_totals: dict[str, int]
    unlabeled_activities: list[tuple[str, str]]


def classify(trace: AttackTrace,
             mapping: dict[str, tuple[tuple[str, str], ...]] | None = None
             ) -> ViolationReport:
    """Label every trace event; pure function of the trace.

    On top of the per-kind mapping, a target localized two or more times
    counts as followed over time, which additionally labels those events as
    intrusion.
    """
    mapping = DEFAULT_EVENT_LABELS if mapping is None else mapping
    for kind, labels in mapping.items():
        for cat, act in labels:
            if act not in TAXONOMY.get(cat, ()):
                raise ValueError(f"label {(cat, act)!r} outside the taxonomy")
    labels: list[tuple[int, str, str, str]] = []
    tallies: dict[tuple[str, str], int] = {}
    seen_localizations: dict[str, int] = {}
    for idx, ev in enumerate(trace.events):
        ev_labels = list(mapping.get(ev.kind, ()))
        if ev.kind == "localize_result" and ev.target_id is not None:
            seen_localizations[ev.target_id] = seen_localizations.get(ev.target_id, 0) + 1
            if seen_localizations[ev.target_id] >= 2:
                ev_labels.append(INTRUSION_LABEL)
        for cat, act in ev_labels:
            labels.append((idx, ev.kind, cat, act))
            tallies[(cat, act)] = tallies.get((cat, act), 0) + 1
    category_totals: dict[str, int] = {c: 0 for c in TAXONOMY}
    for (cat, _), n in tallies.items():
        category_totals[cat] += n
    unlabeled = [(c, a) for c, acts in TAXONOMY.items() for a in acts
                 if (c, a) not in tallies]
    return ViolationReport(labels, tallies, category_totals, unlabeled)


# -- artifact emission -------------------------------------------------------

CANVAS_W, CANVAS_H = 800, 600
MARGIN = 60.0


def _fmt(x: float) -> str:
    return repr(float(x))


def _svg(elements: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" '
            f'height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}">')
    return head + "\n" + "\n".join(elements) + "\n</svg>\n"


def _axes() -> list[str]:
    x0, y0 = MARGIN, CANVAS_H - MARGIN
    x1, y1 = CANVAS_W - MARGIN, MARGIN
    return [
        f'<line id="axis-x" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="black"/>',
        f'<line id="axis-y" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" y2="{y1:.2f}" stroke="black"/>',
    ]


class _Scale:
    """Affine data->canvas mapping with equal margins."""

    def __init__(self, xs, ys, keep_aspect=False):
        self.xmin, self.xmax = min(xs), max(xs)
        self.ymin, self.ymax = min(ys), max(ys)
        dx = self.xmax - self.xmin or 1.0
        dy = self.ymax - self.ymin or 1.0
        sx = (CANVAS_W - 2 * MARGIN) / dx
        sy = (CANVAS_H - 2 * MARGIN) / dy
        if keep_aspect:
            sx = sy = min(sx, sy)
        self.sx, self.sy = sx, sy

    def x(self, v: float) -> float:
        return MARGIN + (v - self.xmin) * self.sx

    def y(self, v: float) -> float:
        return CANVAS_H - MARGIN - (v - self.ymin) * self.sy

    def r(self, v: float) -> float:
        return v * self.sx


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def write_runtime_grid(rows: list[tuple[int, int, float]], out_dir: Path) -> list[Path]:
    """(samples, iterations, seconds) grid as CSV plus a log-log SVG."""
    out_dir = Path(out_dir)
    lines = ["samples,iterations,seconds"]
    for n, it, sec in rows:
        lines.append(f"{n},{it},{_fmt(sec)}")
    csv_path = _write(out_dir / "runtime_grid.csv", "\n".join(lines) + "\n")

    by_samples: dict[int, list[tuple[int, float]]] = {}
    for n, it, sec in rows:
        by_samples.setdefault(n, []).append((it, sec))
    all_it = [math.log10(it) for _, it, _ in rows]
    all_sec = [math.log10(max(sec, 1e-9)) for _, _, sec in rows]
    sc = _Scale(all_it, all_sec)
    elements = _axes()
    for n in sorted(by_samples):
        pts = " ".join(f"{sc.x(math.log10(it)):.2f},{sc.y(math.log10(max(sec, 1e-9))):.2f}"
                       for it, sec in sorted(by_samples[n]))
        elements.append(f'<polyline id="series-s{n}" points="{pts}" '
                        f'fill="none" stroke="black"/>')
    svg_path = _write(out_dir / "runtime_grid.svg", _svg(elements))
    return [csv_path, svg_path]


def write_probe_map(samples: list[DistanceSample],
                    estimate: PositionEstimate | None,
                    truth_xy: tuple[float, float] | None,
                    out_dir: Path) -> list[Path]:
    """Map of probe circles (one per sample) plus estimate/truth markers."""
    out_dir = Path(out_dir)
    with open(out_dir / "samples.csv", "w", encoding="utf-8", newline="\n") as fp:
        mlat.samples_to_csv(samples, fp)
    xs, ys = [], []
    for s in samples:
        xs += [s.observer.x_m - s.reported_m, s.observer.x_m + s.reported_m]
        ys += [s.observer.y_m - s.reported_m, s.observer.y_m + s.reported_m]
    if estimate is not None:
        xs.append(estimate.p_hat.x_m)
        ys.append(estimate.p_hat.y_m)
    if truth_xy is not None:
        xs.append(truth_xy[0])
        ys.append(truth_xy[1])
    sc = _Scale(xs, ys, keep_aspect=True)
    elements = []
    for i, s in enumerate(samples):
        elements.append(
            f'<circle id="sample-circle-{i}" cx="{sc.x(s.observer.x_m):.2f}" '
            f'cy="{sc.y(s.observer.y_m):.2f}" r="{sc.r(s.reported_m):.2f}" '
            f'fill="none" stroke="steelblue"/>')
    if truth_xy is not None:
        elements.append(f'<circle id="truth-marker" cx="{sc.x(truth_xy[0]):.2f}" '
                        f'cy="{sc.y(truth_xy[1]):.2f}" r="4" fill="green"/>')
    if estimate is not None:
        elements.append(f'<circle id="estimate-marker" '
                        f'cx="{sc.x(estimate.p_hat.x_m):.2f}" '
                        f'cy="{sc.y(estimate.p_hat.y_m):.2f}" r="4" fill="red"/>')
    svg_path = _write(out_dir / "probe_map.svg", _svg(elements))
    return [out_dir / "samples.csv", svg_path]


def write_pool_curve(pool_rows: list[tuple[str, int, int]], out_dir: Path) -> list[Path]:
    """Identification pool sizes per round (long form) plus a median curve."""
    out_dir = Path(out_dir)
    lines = ["run,round,pool_size"]
    for run, rnd, size in pool_rows:
        lines.append(f"{run},{rnd},{size}")
    csv_path = _write(out_dir / "pool_sizes.csv", "\n".join(lines) + "\n")

    by_round: dict[int, list[int]] = {}
    for _, rnd, size in pool_rows:
        by_round.setdefault(rnd, []).append(size)
    medians = []
    for rnd in sorted(by_round):
        vals = sorted(by_round[rnd])
        medians.append((rnd, vals[len(vals) // 2]))
    sc = _Scale([r for r, _ in medians] or [0, 1],
                [math.log10(max(m, 1)) for _, m in medians] or [0, 1])
    pts = " ".join(f"{sc.x(r):.2f},{sc.y(math.log10(max(m, 1))):.2f}"
                   for r, m in medians)
    elements = _axes() + [f'<polyline id="pool-curve" points="{pts}" '
                          f'fill="none" stroke="black"/>']
    svg_path = _write(out_dir / "pool_sizes.svg", _svg(elements))
    return [csv_path, svg_path]


def write_error_vs_quantum(rows: list[tuple[float, float, float, int]],
                           out_dir: Path) -> list[Path]:
    """(quantum, median error, mean error, trials) rows, ascending quantum."""
    out_dir = Path(out_dir)
    rows = sorted(rows)
    lines = ["quantum_m,median_error_m,mean_error_m,trials"]
    for q, med, mean, n in rows:
        lines.append(f"{_fmt(q)},{_fmt(med)},{_fmt(mean)},{n}")
    csv_path = _write(out_dir / "error_vs_quantum.csv", "\n".join(lines) + "\n")
    sc = _Scale([q for q, *_ in rows], [med for _, med, *_ in rows])
    pts = " ".join(f"{sc.x(q):.2f},{sc.y(med):.2f}" for q, med, *_ in rows)
    elements = _axes() + [f'<polyline id="error-curve" points="{pts}" '
                          f'fill="none" stroke="black"/>']
    svg_path = _write(out_dir / "error_vs_quantum.svg", _svg(elements))
    return [csv_path, svg_path]


def write_violations(report: ViolationReport, out_dir: Path) -> list[Path]:
    """Tallies over the full closed vocabulary (zero rows included) plus
    per-event labels. Activities never produced stay visible as count 0."""
    out_dir = Path(out_dir)
    lines = ["category,activity,count"]
    for cat, acts in TAXONOMY.items():
        for act in acts:
            lines.append(f"{cat},{act},{report.tallies.get((cat, act), 0)}")
    tallies_path = _write(out_dir / "violations.csv", "\n".join(lines) + "\n")
    lines = ["event_index,event_kind,category,activity"]
    for idx, kind, cat, act in report.labels:
        lines.append(f"{idx},{kind},{cat},{act}")
    labels_path = _write(out_dir / "trace_labels.csv", "\n".join(lines) + "\n")
    return [tallies_path, labels_path]


def emit(out_dir: Path, *, runtime_grid=None, probe_map=None, pool_rows=None,
         error_vs_quantum=None, violations=None) -> list[Path]:
    """Write whichever artifacts are provided into ``out_dir``.

    ``probe_map`` is a (samples, estimate, truth_xy) triple. Identical
    inputs produce byte-identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    if runtime_grid is not None:
        paths += write_runtime_grid(runtime_grid, out_dir)
    if probe_map is not None:
        samples, estimate, truth_xy = probe_map
        paths += write_probe_map(samples, estimate, truth_xy, out_dir)
    if pool_rows is not None:
        paths += write_pool_curve(pool_rows, out_dir)
    if error_vs_quantum is not None:
        paths += write_error_vs_quantum(error_vs_quantum, out_dir)
    if violations is not None:
        paths += write_violations(violations, out_dir)
    return paths

"""Heat maps of partition defect values, and plain-text defect reports."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .dbt import CampaignResult, axis_intervals
from .dsr_model import format_number
from .qa import DefectReport

METRICS = ("horizontal", "altitude")
GLYPHS = " .:*#@"
CSV_HEADER = "h_slice,theta_interval,psi_interval,dfb,intensity"


def intensity(dfb: float) -> float:
    """Map a defect value in [0, inf] monotonically onto [0, 1]."""
    if dfb == math.inf:
        return 1.0
    return 1.0 - 1.0 / (1.0 + dfb)


def format_dfb(dfb: float) -> str:
    return "inf" if dfb == math.inf else format_number(dfb)


@dataclass(frozen=True)
class HeatCell:
    dfb: float
    intensity: float


@dataclass(frozen=True)
class HeatmapSlice:
    h_slice_index: int
    h_label: str
    theta_labels: tuple[str, ...]
    psi_labels: tuple[str, ...]
    cells: tuple[tuple[HeatCell, ...], ...]  # [theta][psi]


def build_heatmap(result: CampaignResult, metric: str) -> list[HeatmapSlice]:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    n_theta, n_psi, n_h = result.spec.shape
    thetas = tuple(iv.label for iv in axis_intervals(result.spec.theta_breaks))
    psis = tuple(iv.label for iv in axis_intervals(result.spec.psi_breaks))
    hs = axis_intervals(result.spec.h_breaks)

    grid = {p.partition.index: getattr(p, f"dfb_{metric}") for p in result.per_partition}
    slices = []
    for k in range(n_h):
        cells = tuple(
            tuple(HeatCell(grid[(i, j, k)], intensity(grid[(i, j, k)])) for j in range(n_psi))
            for i in range(n_theta)
        )
        slices.append(HeatmapSlice(k, hs[k].label, thetas, psis, cells))
    return slices


def aggregate_max_over_h(slices) -> HeatmapSlice:
    """Collapse the h axis, keeping the worst defect value per (theta, psi) cell."""
    first = slices[0]
    cells = tuple(
        tuple(
            HeatCell(d, intensity(d))
            for d in (max(s.cells[i][j].dfb for s in slices) for j in range(len(first.psi_labels)))
        )
        for i in range(len(first.theta_labels))
    )
    lo = first.h_label.split(",")[0]
    hi = slices[-1].h_label.split(",")[1]
    return HeatmapSlice(0, f"{lo},{hi}", first.theta_labels, first.psi_labels, cells)


# -- renderers ---------------------------------------------------------------

def render_heatmap_csv(slices) -> bytes:
    lines = [CSV_HEADER]
    for s in slices:
        for i, theta in enumerate(s.theta_labels):
            for j, psi in enumerate(s.psi_labels):
                cell = s.cells[i][j]
                lines.append(f"{s.h_slice_index},{theta},{psi},{format_dfb(cell.dfb)},{format_number(cell.intensity)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


_CSV_ROW = re.compile(r"^(-?\d+),([\[\]][^,\]]*,[^,\]]*\]),([\[\]][^,\]]*,[^,\]]*\]),([^,]+),([^,]+)$")


def parse_heatmap_csv(data: bytes) -> list[dict]:
    """Read back :func:`render_heatmap_csv` output.

    Interval labels contain a comma and are written unquoted, so rows are
    matched structurally rather than with the csv module.
    """
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a heat-map CSV")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        m = _CSV_ROW.match(line)
        if not m:
            raise ValueError(f"line {n}: malformed row {line!r}")
        h, theta, psi, dfb, inten = m.groups()
        rows.append({
            "h_slice": int(h),
            "theta_interval": theta,
            "psi_interval": psi,
            "dfb": math.inf if dfb == "inf" else float(dfb),
            "intensity": float(inten),
        })
    return rows


def gray_level(value: float) -> int:
    # half-up rounding, not banker's
    return int(math.floor(255 * (1.0 - value) + 0.5))


def render_heatmap_svg(slices, cell_size: int = 56) -> bytes:
    left, top, gap = 72, 44, 24
    slices = list(slices)
    n_theta = len(slices[0].theta_labels) if slices else 0
    n_psi = len(slices[0].psi_labels) if slices else 0
    panel_w = left + n_psi * cell_size
    width = len(slices) * panel_w + max(len(slices) - 1, 0) * gap + 8
    height = top + n_theta * cell_size + 28

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    ]
    for n, s in enumerate(slices):
        x0 = n * (panel_w + gap)
        out.append(f'<g id="slice-{s.h_slice_index}">')
        out.append(f'<text x="{x0 + left}" y="14" font-weight="bold">h {escape(s.h_label)}</text>')
        for j, psi in enumerate(s.psi_labels):
            cx = x0 + left + j * cell_size + cell_size // 2
            out.append(f'<text x="{cx}" y="{top - 8}" text-anchor="middle">{escape(psi)}</text>')
        for i, theta in enumerate(s.theta_labels):
            y = top + i * cell_size
            out.append(f'<text x="{x0 + left - 6}" y="{y + cell_size // 2 + 4}" text-anchor="end">{escape(theta)}</text>')
            for j in range(len(s.psi_labels)):
                cell = s.cells[i][j]
                g = gray_level(cell.intensity)
                out.append(
                    f'<rect x="{x0 + left + j * cell_size}" y="{y}" width="{cell_size}" height="{cell_size}" '
                    f'fill="rgb({g},{g},{g})" stroke="#808080"><title>dfb={format_dfb(cell.dfb)}</title></rect>'
                )
        out.append(f'<text x="{x0 + left}" y="{height - 8}">rows: theta, columns: psi</text>')
        out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def glyph(value: float) -> str:
    return GLYPHS[min(int(value * len(GLYPHS)), len(GLYPHS) - 1)]


def render_heatmap_text(slices) -> str:
    blocks = []
    for s in slices:
        width = max([len(p) for p in s.psi_labels] + [3])
        label_w = max(len(t) for t in s.theta_labels)
        lines = [f"h {s.h_label} (slice {s.h_slice_index})"]
        lines.append(" " * label_w + " | " + " ".join(p.center(width) for p in s.psi_labels))
        for i, theta in enumerate(s.theta_labels):
            row = " ".join(glyph(c.intensity).center(width) for c in s.cells[i])
            lines.append(theta.rjust(label_w) + " | " + row)
        blocks.append("\n".join(line.rstrip() for line in lines))
    legend = f"intensity buckets (low -> high): {' '.join(repr(g) for g in GLYPHS)}"
    return "\n\n".join(blocks + [legend]) + "\n"


def render_defect_report_text(report: DefectReport) -> str:
    lines = [f"DSR {report.dsr_id}: {len(report.findings)} finding(s), dbt_ready={str(report.dbt_ready).lower()}"]
    for f in report.findings:
        where = f"{f.element.value}/{f.row}/{f.cell}"
        lines.append(f"  [{f.severity}] {f.category.value:<18} {where:<34} {f.message}")
    return "\n".join(lines) + "\n"

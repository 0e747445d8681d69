"""Artifacts: CSV files, aligned text tables, hand-built SVG heatmaps.

Every artifact opens with a comment naming the invocation that produced
it, so a results directory is self-describing.  CSV readers reject bad
input with the offending line number; the bench CSV round-trips to the
exact records that produced it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .bench import BenchRecord, ScoreResult
from .games import parse_game_id
from .regress import Dataset, RegressionModel

BENCH_HEADER = ["game", "algorithm", "backend", "budget_s", "trials",
                "normalized_mean", "stddev", "ci99_half_width", "raw_counts"]

DATASET_HEADER = ["game", "algorithm", "backend", "d", "t", "b", "target"]


class ReportError(ValueError):
    pass


def _comment(invocation: str | None) -> list[str]:
    return [f"# {invocation}"] if invocation else []


# --- bench csv ---------------------------------------------------------

def write_bench_csv(records, path, invocation: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _comment(invocation):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(BENCH_HEADER)
        for rec in records:
            writer.writerow([
                rec.game.text(), rec.algorithm, rec.backend,
                repr(rec.budget_s), rec.trials, repr(rec.normalized_mean),
                repr(rec.stddev), repr(rec.ci99_half_width),
                ";".join(str(c) for c in rec.raw_counts),
            ])


def read_bench_csv(path) -> list[BenchRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.readlines()
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        if raw.lstrip().startswith("#") or not raw.strip():
            continue
        rows.append((lineno, raw))
    if not rows:
        raise ReportError(f"{path}: no header row")
    header_line, header_raw = rows[0]
    header = next(csv.reader([header_raw]))
    if header != BENCH_HEADER:
        raise ReportError(f"{path}: line {header_line}: bad header {header}")
    for lineno, raw in rows[1:]:
        cells = next(csv.reader([raw]))
        if len(cells) != len(BENCH_HEADER):
            raise ReportError(
                f"{path}: line {lineno}: expected {len(BENCH_HEADER)} cells, "
                f"got {len(cells)}")
        try:
            counts = tuple(int(c) for c in cells[8].split(";") if c)
            records.append(BenchRecord(
                game=parse_game_id(cells[0]), algorithm=cells[1],
                backend=cells[2], budget_s=float(cells[3]),
                trials=int(cells[4]), normalized_mean=float(cells[5]),
                stddev=float(cells[6]), ci99_half_width=float(cells[7]),
                raw_counts=counts))
        except ValueError as exc:
            raise ReportError(f"{path}: line {lineno}: {exc}") from None
    return records


# --- dataset csv -------------------------------------------------------

@dataclass(frozen=True)
class DatasetRow:
    game_text: str
    algorithm: str
    backend: str
    d: float
    t: float
    b: float
    target: float


def write_dataset_csv(rows, path, invocation: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in _comment(invocation):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for row in rows:
            writer.writerow([row.game_text, row.algorithm, row.backend,
                             repr(row.d), repr(row.t), repr(row.b),
                             repr(row.target)])


def read_dataset_rows(path) -> list[DatasetRow]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.readlines()
    body = [(no, raw) for no, raw in enumerate(lines, start=1)
            if raw.strip() and not raw.lstrip().startswith("#")]
    if not body:
        raise ReportError(f"{path}: no header row")
    header = next(csv.reader([body[0][1]]))
    if header != DATASET_HEADER:
        raise ReportError(f"{path}: line {body[0][0]}: bad header {header}")
    for lineno, raw in body[1:]:
        cells = next(csv.reader([raw]))
        if len(cells) != len(DATASET_HEADER):
            raise ReportError(f"{path}: line {lineno}: expected "
                              f"{len(DATASET_HEADER)} cells, got {len(cells)}")
        try:
            out.append(DatasetRow(cells[0], cells[1], cells[2],
                                  float(cells[3]), float(cells[4]),
                                  float(cells[5]), float(cells[6])))
        except ValueError as exc:
            raise ReportError(f"{path}: line {lineno}: {exc}") from None
    return out


def rows_to_dataset(rows, algorithm: str) -> Dataset:
    picked = [r for r in rows if r.algorithm == algorithm]
    if len(picked) < 2:
        raise ReportError(f"need at least 2 rows for algorithm {algorithm!r}")
    import numpy as np

    feats = np.array([[r.d, r.t, r.b] for r in picked])
    targets = np.array([r.target for r in picked])
    return Dataset(("d", "t", "b"), feats, targets)


# --- svg heatmap -------------------------------------------------------

_RAMP = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98),
         (253, 231, 37)]

GRID_CELLS = 64

_PLOT = {"x": 90, "y": 30, "w": 480, "h": 480}


def _ramp_color(v: float) -> str:
    v = min(max(v, 0.0), 1.0)
    pos = v * (len(_RAMP) - 1)
    i = min(int(pos), len(_RAMP) - 2)
    frac = pos - i
    r0, g0, b0 = _RAMP[i]
    r1, g1, b1 = _RAMP[i + 1]
    return "#{:02x}{:02x}{:02x}".format(
        round(r0 + (r1 - r0) * frac),
        round(g0 + (g1 - g0) * frac),
        round(b0 + (b1 - b0) * frac))


@dataclass(frozen=True)
class HeatmapPoint:
    x: float
    y: float
    observed: float


def render_heatmap(model: RegressionModel, x_feature: str, y_feature: str,
                   x_range: tuple[float, float], y_range: tuple[float, float],
                   points, path, fixed: dict | None = None,
                   title: str | None = None) -> None:
    """Model surface as a 64x64 log-log grid, observations as circles.

    Cell color is the model's ln-prediction at the cell center; circles
    share the same color scale through ln(observed).  Any model feature
    that is not an axis must appear in `fixed`.
    """
    from .regress import predict_log

    for name, (lo, hi) in (("x", x_range), ("y", y_range)):
        if lo <= 0 or hi <= 0:
            raise ReportError(f"{name} range must be positive for log axes")
        if lo >= hi:
            raise ReportError(f"{name} range is degenerate: {lo} >= {hi}")
    fixed = dict(fixed or {})
    for name in model.feature_names:
        if name not in (x_feature, y_feature) and name not in fixed:
            raise ReportError(f"model feature {name!r} needs a fixed value")

    lx0, lx1 = math.log(x_range[0]), math.log(x_range[1])
    ly0, ly1 = math.log(y_range[0]), math.log(y_range[1])
    n = GRID_CELLS

    predictions = []
    for row in range(n):
        for col in range(n):
            lxc = lx0 + (lx1 - lx0) * (col + 0.5) / n
            lyc = ly0 + (ly1 - ly0) * (row + 0.5) / n
            feats = dict(fixed)
            feats[x_feature] = math.exp(lxc)
            feats[y_feature] = math.exp(lyc)
            predictions.append(predict_log(model, feats))

    points = list(points)
    observed_logs = []
    for p in points:
        if p.observed <= 0 or p.x <= 0 or p.y <= 0:
            raise ReportError("observations must be positive for log scales")
        observed_logs.append(math.log(p.observed))

    all_values = predictions + observed_logs
    vmin, vmax = min(all_values), max(all_values)
    spread = vmax - vmin

    def norm(v: float) -> float:
        if spread == 0:
            return 0.5  # constant surface: one uniform color
        return (v - vmin) / spread

    px, py, pw, ph = _PLOT["x"], _PLOT["y"], _PLOT["w"], _PLOT["h"]
    cell_w = pw / n
    cell_h = ph / n
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{px + pw + 40}" '
        f'height="{py + ph + 80}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{px + pw + 40}" height="{py + ph + 80}" '
        'fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{px + pw / 2}" y="{py - 10}" '
                     f'text-anchor="middle">{escape(title)}</text>')
    idx = 0
    for row in range(n):
        # row 0 sits at the bottom: y axis grows upward
        y_pix = py + ph - (row + 1) * cell_h
        for col in range(n):
            x_pix = px + col * cell_w
            color = _ramp_color(norm(predictions[idx]))
            parts.append(
                f'<rect x="{x_pix:.2f}" y="{y_pix:.2f}" width="{cell_w:.2f}" '
                f'height="{cell_h:.2f}" fill="{color}"/>')
            idx += 1
    skipped = 0
    for p, lobs in zip(points, observed_logs):
        lpx, lpy = math.log(p.x), math.log(p.y)
        if not (lx0 <= lpx <= lx1 and ly0 <= lpy <= ly1):
            skipped += 1
            continue
        x_pix = px + (lpx - lx0) / (lx1 - lx0) * pw
        y_pix = py + ph - (lpy - ly0) / (ly1 - ly0) * ph
        parts.append(
            f'<circle cx="{x_pix:.2f}" cy="{y_pix:.2f}" r="5" '
            f'fill="{_ramp_color(norm(lobs))}" stroke="black" '
            'stroke-width="1"/>')
    parts.append(
        f'<rect x="{px}" y="{py}" width="{pw}" height="{ph}" fill="none" '
        'stroke="black" stroke-width="1"/>')
    parts.extend(_log_axis_labels(lx0, lx1, px, pw, py + ph, axis="x"))
    parts.extend(_log_axis_labels(ly0, ly1, py, ph, px, axis="y"))
    parts.append(f'<text x="{px + pw / 2:.1f}" y="{py + ph + 45}" '
                 f'text-anchor="middle">{escape(x_feature)} (log scale)</text>')
    parts.append(f'<text x="20" y="{py + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {py + ph / 2:.1f})">'
                 f'{escape(y_feature)} (log scale)</text>')
    if skipped:
        parts.append(f'<text x="{px}" y="{py + ph + 65}">'
                     f'{skipped} observation(s) outside the plotted range'
                     '</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")


def _tick_values(lo_log: float, hi_log: float) -> list[float]:
    lo_dec = math.ceil(lo_log / math.log(10.0))
    hi_dec = math.floor(hi_log / math.log(10.0))
    ticks = [10.0 ** k for k in range(lo_dec, hi_dec + 1)]
    if not ticks:
        ticks = [math.exp(lo_log), math.exp(hi_log)]
    return ticks


def _fmt_tick(v: float) -> str:
    if v >= 1 and v == int(v) and v < 10**6:
        return str(int(v))
    return f"{v:.0e}"


def _log_axis_labels(lo_log, hi_log, origin, span, baseline, axis):
    parts = []
    for tick in _tick_values(lo_log, hi_log):
        frac = (math.log(tick) - lo_log) / (hi_log - lo_log)
        if axis == "x":
            x_pix = origin + frac * span
            parts.append(f'<line x1="{x_pix:.1f}" y1="{baseline}" '
                         f'x2="{x_pix:.1f}" y2="{baseline + 5}" '
                         'stroke="black"/>')
            parts.append(f'<text x="{x_pix:.1f}" y="{baseline + 20}" '
                         f'text-anchor="middle">{_fmt_tick(tick)}</text>')
        else:
            y_pix = origin + span - frac * span
            parts.append(f'<line x1="{baseline - 5}" y1="{y_pix:.1f}" '
                         f'x2="{baseline}" y2="{y_pix:.1f}" stroke="black"/>')
            parts.append(f'<text x="{baseline - 8}" y="{y_pix + 4:.1f}" '
                         f'text-anchor="end">{_fmt_tick(tick)}</text>')
    return parts


# --- tables ------------------------------------------------------------

@dataclass(frozen=True)
class ModelRow:
    algorithm: str
    backend: str
    model: RegressionModel


@dataclass(frozen=True)
class ScoreRow:
    player1: str
    player2: str
    result: ScoreResult


def format_equation(model: RegressionModel) -> str:
    """Three-decimal closed form, e.g. ln(r) = -0.946*ln(d) + 6.291."""
    terms = [(coef, f"*ln({name})")
             for name, coef in zip(model.feature_names, model.coefficients)]
    terms.append((model.intercept, ""))
    out = f"ln({model.target_name}) ="
    for position, (value, suffix) in enumerate(terms):
        magnitude = f"{abs(value):.3f}{suffix}"
        if position == 0:
            out += f" -{magnitude}" if value < 0 else f" {magnitude}"
        else:
            out += f" {'-' if value < 0 else '+'} {magnitude}"
    return out


def _twin_path(path) -> Path:
    path = Path(path)
    if path.suffix == ".csv":
        return path.with_name(path.name + ".csv")
    return path.with_suffix(".csv")


def _write_aligned(path, header, rows, invocation) -> None:
    widths = [max(len(str(header[i])), *(len(str(r[i])) for r in rows))
              if rows else len(str(header[i])) for i in range(len(header))]
    lines = _comment(invocation)
    lines.append("  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(c).ljust(w)
                               for c, w in zip(row, widths)).rstrip())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_model_table(rows, path, invocation: str | None = None) -> None:
    """Aligned text table of fitted models plus a CSV twin alongside."""
    header = ["algorithm", "backend", "model", "mse_train", "mse_test"]
    body = []
    for row in rows:
        m = row.model
        body.append([row.algorithm, row.backend, format_equation(m),
                     f"{m.mse_train:.6f}",
                     "-" if m.mse_test is None else f"{m.mse_test:.6f}"])
    _write_aligned(path, header, body, invocation)
    with open(_twin_path(path), "w", newline="", encoding="utf-8") as fh:
        for line in _comment(invocation):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(header + ["pruned_all"])
        for row in rows:
            m = row.model
            writer.writerow([row.algorithm, row.backend, format_equation(m),
                             repr(m.mse_train),
                             "" if m.mse_test is None else repr(m.mse_test),
                             int(m.pruned_all)])


def write_score_table(rows, path, invocation: str | None = None) -> None:
    header = ["player1", "player2", "games", "p1_wins", "draws", "p2_wins",
              "score_avg", "highest"]
    body = []
    for row in rows:
        r = row.result
        if r.score_avg > 0.5:
            top = row.player1
        elif r.score_avg < 0.5:
            top = row.player2
        else:
            top = "tie"
        body.append([row.player1, row.player2, r.games_played, r.wins,
                     r.draws, r.losses, f"{r.score_avg:.4f}", top])
    _write_aligned(path, header, body, invocation)
    with open(_twin_path(path), "w", newline="", encoding="utf-8") as fh:
        for line in _comment(invocation):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for line_cells in body:
            writer.writerow(line_cells)

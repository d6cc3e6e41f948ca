"""Campaign analytics: delay pairs, factor distributions, grouped means,
the delay-independence regression, and the hidden-delay settling estimate.

All functions are pure over immutable report sets; outputs are plain
comma-separated tables with a header row.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .records import FACTOR_CLASSES, SYZBOT_START, RetrospectionReport

#: Largest acceptable r^2 for "no usable correlation" between the delays.
INDEPENDENCE_R2_BOUND = 0.126


class AnalyticsError(Exception):
    pass


@dataclass(frozen=True)
class DelayPair:
    bug_id: str
    d1_days: int
    d2_days: int
    found_year: int
    guilty_year: int
    directory: str
    factor_class: str


def compute_delays(report: RetrospectionReport, epoch: dt.date = SYZBOT_START) -> DelayPair:
    """Derive the hidden/exposed delay pair for one completed report.

    d1 counts days from the later of the guilty date and the fuzzer-start
    epoch up to the revealing date; d2 from revealing to finding. Dates out
    of order are a validation error, not a clamp.
    """
    if not report.completed:
        raise AnalyticsError(f"{report.bug_id}: report not completed ({report.status})")
    if report.revealing_date is None or report.guilty_date is None or report.finding_date is None:
        raise AnalyticsError(f"{report.bug_id}: missing dates")
    floor = max(report.guilty_date, epoch)
    if report.revealing_date < floor:
        raise AnalyticsError(
            f"{report.bug_id}: revealing date {report.revealing_date} precedes {floor}"
        )
    if report.finding_date < report.revealing_date:
        raise AnalyticsError(
            f"{report.bug_id}: finding date {report.finding_date} precedes revealing date"
        )
    return DelayPair(
        bug_id=report.bug_id,
        d1_days=(report.revealing_date - floor).days,
        d2_days=(report.finding_date - report.revealing_date).days,
        found_year=report.finding_date.year,
        guilty_year=report.guilty_date.year,
        directory=report.directory,
        factor_class=report.factor_class or "needs_manual_review",
    )


def _require(pairs) -> list:
    pairs = list(pairs)
    if not pairs:
        raise AnalyticsError("no delay pairs to aggregate")
    return pairs


def factor_distribution(pairs) -> dict[str, float]:
    """Share of bugs per revealing-factor class; shares sum to 1."""
    pairs = _require(pairs)
    out: dict[str, float] = {}
    for p in pairs:
        out[p.factor_class] = out.get(p.factor_class, 0) + 1
    return {k: v / len(pairs) for k, v in sorted(out.items())}


def hidden_share(shares: dict[str, float]) -> float:
    return 1.0 - shares.get("never_hidden", 0.0)


def reveals_by_year(pairs) -> dict[int, dict[str, int]]:
    pairs = _require(pairs)
    table: dict[int, dict[str, int]] = {}
    for p in pairs:
        row = table.setdefault(p.found_year, {})
        row[p.factor_class] = row.get(p.factor_class, 0) + 1
    return {year: table[year] for year in sorted(table)}


def delays_by_year(pairs) -> dict[int, tuple[float, float, int]]:
    """Per finding year: (mean d1, mean d2, bug count)."""
    pairs = _require(pairs)
    groups: dict[int, list[DelayPair]] = {}
    for p in pairs:
        groups.setdefault(p.found_year, []).append(p)
    return {
        year: (
            sum(p.d1_days for p in members) / len(members),
            sum(p.d2_days for p in members) / len(members),
            len(members),
        )
        for year, members in sorted(groups.items())
    }


def delays_by_directory(pairs) -> dict[str, tuple[float, float, int]]:
    pairs = _require(pairs)
    groups: dict[str, list[DelayPair]] = {}
    for p in pairs:
        groups.setdefault(p.directory, []).append(p)
    return {
        d: (
            sum(p.d1_days for p in members) / len(members),
            sum(p.d2_days for p in members) / len(members),
            len(members),
        )
        for d, members in sorted(groups.items())
    }


def guilty_vs_found(pairs) -> dict[int, dict[int, int]]:
    """Counts of bugs by (guilty year, finding year)."""
    pairs = _require(pairs)
    matrix: dict[int, dict[int, int]] = {}
    for p in pairs:
        row = matrix.setdefault(p.guilty_year, {})
        row[p.found_year] = row.get(p.found_year, 0) + 1
    return {y: matrix[y] for y in sorted(matrix)}


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    ss_res = float(np.sum((y - fitted) ** 2))
    return max(0.0, 1.0 - ss_res / ss_tot)


def independence_check(pairs) -> float:
    """Best r^2 of d2 regressed on d1 across linear, quadratic, and log fits."""
    pairs = _require(pairs)
    if len(pairs) < 3:
        raise AnalyticsError("need at least 3 pairs for a regression")
    x = np.array([p.d1_days for p in pairs], dtype=float)
    y = np.array([p.d2_days for p in pairs], dtype=float)
    if float(np.var(y)) == 0.0:
        return 0.0
    designs = [
        np.column_stack([np.ones_like(x), x]),
        np.column_stack([np.ones_like(x), x, x**2]),
        np.column_stack([np.ones_like(x), np.log1p(x)]),
    ]
    best = 0.0
    for design in designs:
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        best = max(best, _r_squared(y, design @ coef))
    return best


def d1_settling_estimate(factor_shares: dict[str, float], peak_d1: float) -> float:
    """Long-run floor for the hidden delay.

    Reveals driven by fuzzer-side development taper off as that development
    slows, leaving kernel-commit and blocking-bug reveals as the remaining
    share; the hidden delay settles at that share of its peak.
    """
    remaining = factor_shares.get("kernel_commit", 0.0) + factor_shares.get("blocking_bug", 0.0)
    return peak_d1 * remaining


@dataclass
class CampaignStats:
    bug_count: int
    factor_shares: dict[str, float]
    hidden_share: float
    reveals_by_year: dict[int, dict[str, int]]
    delays_by_year: dict[int, tuple[float, float, int]]
    delays_by_directory: dict[str, tuple[float, float, int]]
    guilty_vs_found: dict[int, dict[int, int]]
    r2_best: float
    peak_d1: float
    d1_floor_estimate: float

    def to_doc(self) -> dict:
        return {
            "bug_count": self.bug_count,
            "factor_shares": self.factor_shares,
            "hidden_share": self.hidden_share,
            "reveals_by_year": {str(y): row for y, row in self.reveals_by_year.items()},
            "delays_by_year": {
                str(y): {"mean_d1": a, "mean_d2": b, "bugs": n}
                for y, (a, b, n) in self.delays_by_year.items()
            },
            "delays_by_directory": {
                d: {"mean_d1": a, "mean_d2": b, "bugs": n}
                for d, (a, b, n) in self.delays_by_directory.items()
            },
            "guilty_vs_found": {
                str(g): {str(f): n for f, n in row.items()}
                for g, row in self.guilty_vs_found.items()
            },
            "r2_best": self.r2_best,
            "peak_d1": self.peak_d1,
            "d1_floor_estimate": self.d1_floor_estimate,
        }


def campaign_stats(pairs) -> CampaignStats:
    pairs = _require(pairs)
    shares = factor_distribution(pairs)
    yearly = delays_by_year(pairs)
    peak = max(mean_d1 for mean_d1, _, _ in yearly.values())
    r2 = independence_check(pairs) if len(pairs) >= 3 else 0.0
    matrix = guilty_vs_found(pairs)
    total = sum(n for row in matrix.values() for n in row.values())
    if total != len(pairs):
        raise AnalyticsError(f"matrix total {total} != {len(pairs)} pairs")
    return CampaignStats(
        bug_count=len(pairs),
        factor_shares=shares,
        hidden_share=hidden_share(shares),
        reveals_by_year=reveals_by_year(pairs),
        delays_by_year=yearly,
        delays_by_directory=delays_by_directory(pairs),
        guilty_vs_found=matrix,
        r2_best=r2,
        peak_d1=peak,
        d1_floor_estimate=d1_settling_estimate(shares, peak),
    )


# ---------------------------------------------------------------------------
# table writers (comma-separated, header row first)

FACTOR_TABLE = "fig4_factors.csv"
REVEALS_TABLE = "table1_reveals.csv"
DELAYS_BY_YEAR_TABLE = "fig7_delays_by_year.csv"
DELAYS_BY_DIR_TABLE = "fig8_delays_by_dir.csv"
GUILTY_FOUND_TABLE = "table2_matrix.csv"
VM_CURVE_TABLE = "fig10_vm_curve.csv"


def _write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_stats_tables(stats: CampaignStats, outdir) -> list[str]:
    """Write the five campaign tables; returns the filenames written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    _write_csv(
        outdir / FACTOR_TABLE,
        ["factor", "percent"],
        [(k, f"{v * 100:.4f}") for k, v in stats.factor_shares.items()],
    )

    classes = [c for c in FACTOR_CLASSES if c != "needs_manual_review"]
    extra = sorted(
        {c for row in stats.reveals_by_year.values() for c in row} - set(classes)
    )
    columns = classes + extra
    _write_csv(
        outdir / REVEALS_TABLE,
        ["year"] + columns,
        [
            [year] + [row.get(c, 0) for c in columns]
            for year, row in stats.reveals_by_year.items()
        ],
    )

    _write_csv(
        outdir / DELAYS_BY_YEAR_TABLE,
        ["year", "mean_d1_days", "mean_d2_days", "bugs"],
        [
            (year, f"{a:.3f}", f"{b:.3f}", n)
            for year, (a, b, n) in stats.delays_by_year.items()
        ],
    )

    _write_csv(
        outdir / DELAYS_BY_DIR_TABLE,
        ["directory", "mean_d1_days", "mean_d2_days", "bugs"],
        [
            (d, f"{a:.3f}", f"{b:.3f}", n)
            for d, (a, b, n) in stats.delays_by_directory.items()
        ],
    )

    found_years = sorted({f for row in stats.guilty_vs_found.values() for f in row})
    _write_csv(
        outdir / GUILTY_FOUND_TABLE,
        ["guilty_year"] + [str(y) for y in found_years],
        [
            [g] + [row.get(y, 0) for y in found_years]
            for g, row in stats.guilty_vs_found.items()
        ],
    )
    return [
        FACTOR_TABLE,
        REVEALS_TABLE,
        DELAYS_BY_YEAR_TABLE,
        DELAYS_BY_DIR_TABLE,
        GUILTY_FOUND_TABLE,
    ]


def write_vm_curve(curve, path) -> None:
    _write_csv(path, ["vm_count", "mean_d2_days"], [(v, f"{d:.4f}") for v, d in curve])

"""Affine tables mapping the clearance-time vector ``h`` to scheduled times.

Each cell of a table is either untimed (``None``), a fixed time, or an affine
reference ``h[k] + c`` to one unknown (``k`` is 1-based). Cells hold the time
at which a train leaves a signal location; at stations that is the departure
time, so the matching arrival is the cell value minus the dwell.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DanglingReference, Incomplete, LengthMismatch, Unsupported


@dataclass(frozen=True)
class TimeExpr:
    """Either a fixed time (``k is None``) or ``h[k] + c``."""

    k: int | None
    c: float = 0.0

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("unknown indices are 1-based")
        if self.c < 0:
            raise ValueError("offsets must be non-negative")

    @classmethod
    def fixed(cls, c: float) -> "TimeExpr":
        return cls(None, float(c))

    @classmethod
    def affine(cls, k: int, c: float = 0.0) -> "TimeExpr":
        return cls(int(k), float(c))

    @property
    def is_fixed(self) -> bool:
        return self.k is None

    def shifted(self, d: float) -> "TimeExpr":
        return TimeExpr(self.k, self.c + d)

    def value(self, h: np.ndarray) -> float:
        if self.k is None:
            return self.c
        return h[self.k - 1] + self.c

    def __str__(self) -> str:
        if self.k is None:
            return f"fixed:{self.c!r}"
        if self.c == 0:
            return f"h{self.k}"
        return f"h{self.k}+{self.c!r}"


_EXPR = re.compile(r"^h(\d+)(?:\+([0-9.eE+-]+))?$")


def parse_expr(text: str) -> TimeExpr | None:
    """Parse ``-``, ``fixed:<s>``, ``h<k>`` or ``h<k>+<offset>``."""
    s = text.strip().replace(" ", "")
    if s in ("-", ""):
        return None
    if s.startswith("fixed:"):
        return TimeExpr.fixed(float(s[6:]))
    m = _EXPR.match(s)
    if not m:
        raise ValueError(f"cannot parse time expression {text!r}")
    return TimeExpr.affine(int(m.group(1)), float(m.group(2) or 0.0))


@dataclass(frozen=True, eq=False)
class ConstraintTable:
    """m x (n+1) grid of time expressions with per-train metadata.

    ``buffers[i]`` is the required slack between train ``i`` and train
    ``i+1`` (the last entry applies to the wrap-around pair when ``cycle`` is
    set). ``cycle`` is the repeat period: the first train runs again
    ``cycle`` seconds later and is checked for separation behind the last.
    """

    entries: tuple[tuple[TimeExpr | None, ...], ...]
    dwell: np.ndarray
    buffers: tuple[float, ...] = ()
    cycle: float | None = None
    trains: tuple[str, ...] = ()
    signals: tuple[str, ...] = ()

    def __post_init__(self):
        m = len(self.entries)
        if m == 0:
            raise Incomplete("table has no trains")
        width = len(self.entries[0])
        if any(len(row) != width for row in self.entries):
            raise Incomplete("rows have different lengths")
        dwell = np.zeros((m, width)) if self.dwell is None else np.asarray(self.dwell, dtype=float)
        if dwell.shape != (m, width):
            raise LengthMismatch(f"dwell grid has shape {dwell.shape}, expected {(m, width)}")
        if np.any(dwell < 0):
            raise ValueError("dwell times must be non-negative")
        object.__setattr__(self, "dwell", dwell)
        n_pairs = m if self.cycle is not None else m - 1
        buffers = tuple(float(b) for b in self.buffers) or (0.0,) * n_pairs
        if len(buffers) != n_pairs:
            raise LengthMismatch(f"expected {n_pairs} buffers, got {len(buffers)}")
        if any(b < 0 for b in buffers):
            raise ValueError("buffers must be non-negative")
        object.__setattr__(self, "buffers", buffers)
        if not self.trains:
            object.__setattr__(self, "trains", tuple(f"T{i + 1}" for i in range(m)))
        if not self.signals:
            object.__setattr__(self, "signals", tuple(f"x{j}" for j in range(width)))
        if len(self.trains) != m or len(self.signals) != width:
            raise LengthMismatch("train/signal names do not match the grid")
        for i, row in enumerate(self.entries):
            if row[0] is None or row[-1] is None:
                raise Incomplete(f"train {self.trains[i]} needs timed first and last cells")

    def __eq__(self, other):
        if not isinstance(other, ConstraintTable):
            return NotImplemented
        return (
            self.entries == other.entries
            and np.array_equal(self.dwell, other.dwell)
            and self.buffers == other.buffers
            and self.cycle == other.cycle
            and self.trains == other.trains
            and self.signals == other.signals
        )

    __hash__ = None

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return len(self.entries[0]) - 1

    @property
    def n_unknowns(self) -> int:
        ks = [e.k for row in self.entries for e in row if e is not None and e.k is not None]
        return max(ks, default=0)

    def timed(self, i: int) -> list[int]:
        """Signal indices with a timed cell for train ``i`` (0-based)."""
        return [j for j, e in enumerate(self.entries[i]) if e is not None]

    def cells_of(self, k: int) -> list[tuple[int, int]]:
        """All (train, signal) cells that reference unknown ``h_k``."""
        return [
            (i, j)
            for i, row in enumerate(self.entries)
            for j, e in enumerate(row)
            if e is not None and e.k == k
        ]


def evaluate(table: ConstraintTable, h: Sequence[float]) -> np.ndarray:
    """Numeric times per train and signal; untimed cells are NaN."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or len(h) != table.n_unknowns:
        raise LengthMismatch(f"expected {table.n_unknowns} unknowns, got {h.shape}")
    out = np.full((table.m, table.n + 1), np.nan)
    for i, row in enumerate(table.entries):
        for j, e in enumerate(row):
            if e is not None:
                out[i, j] = e.value(h)
    return out


def build_full_table(
    m: int,
    n: int,
    T: float,
    t0: float = 0.0,
    buffers: Sequence[float] | None = None,
    dwell: np.ndarray | None = None,
) -> ConstraintTable:
    """Chained table where every train is separated on every signal-location segment.

    Train 1 leaves ``x_0`` at ``t0`` and reaches ``x_n`` at ``t0 + T``; every
    later train starts at a free unknown and keeps the same journey time.
    Buffers shift each following train's whole row by the accumulated slack.
    """
    if m < 1 or n < 2:
        raise ValueError("need m >= 1 and n >= 2")
    if m > n // 2:
        raise Unsupported(f"closed-form pattern only covers m <= n//2 (m={m}, n={n})")
    buffers = [0.0] * (m - 1) if buffers is None else [float(b) for b in buffers]
    if len(buffers) != m - 1:
        raise LengthMismatch(f"expected {m - 1} buffers")

    def h(k, c=0.0):
        if k == 0:
            return TimeExpr.fixed(t0 + c)
        return TimeExpr.affine(k, c)

    rows = []
    shift = 0.0
    for i in range(1, m + 1):
        row: list[TimeExpr | None] = [None] * (n + 1)
        for j in range(0, n - 2 * i + 2):
            row[j] = h(2 * i - 2 + j)
        row[n - 2 * i + 2] = TimeExpr.fixed(t0 + T)
        for ell in range(1, i):
            row[n - 2 * i + 2 * ell + 1] = h(n + ell - 1)
            row[n - 2 * i + 2 * ell + 2] = h(2 * ell, T)
        if shift:
            row = [e.shifted(shift) for e in row]
        rows.append(tuple(row))
        if i < m:
            shift += buffers[i - 1]
    return ConstraintTable(entries=tuple(rows), dwell=dwell, buffers=tuple(buffers))


def build_custom_table(
    cells: Mapping[str, Sequence[str | TimeExpr | None]],
    signals: Sequence[str],
    dwell: Mapping[str, Sequence[float]] | np.ndarray | None = None,
    buffers: Sequence[float] = (),
    cycle: float | None = None,
) -> ConstraintTable:
    """Build a table from per-train cell lists (strings are parsed)."""
    trains = tuple(cells)
    rows = []
    for name in trains:
        raw = list(cells[name])
        if len(raw) != len(signals):
            raise Incomplete(f"train {name}: {len(raw)} cells for {len(signals)} signals")
        row = []
        for j, c in enumerate(raw):
            try:
                row.append(parse_expr(c) if isinstance(c, str) else c)
            except ValueError as exc:
                raise Incomplete(f"train {name}, signal {signals[j]}: {exc}") from exc
        rows.append(tuple(row))
    ks = sorted({e.k for row in rows for e in row if e is not None and e.k is not None})
    if ks:
        missing = sorted(set(range(1, ks[-1] + 1)) - set(ks))
        if missing:
            raise DanglingReference(f"unknowns never referenced: {missing}")
    if dwell is None:
        dgrid = np.zeros((len(trains), len(signals)))
    elif isinstance(dwell, Mapping):
        dgrid = np.array([list(dwell.get(t, [0.0] * len(signals))) for t in trains], dtype=float)
    else:
        dgrid = np.asarray(dwell, dtype=float)
    return ConstraintTable(
        entries=tuple(rows),
        dwell=dgrid,
        buffers=tuple(buffers),
        cycle=cycle,
        trains=trains,
        signals=tuple(signals),
    )


# --- separation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    leader: int
    follower: int
    signal: int
    slack: float


@dataclass
class SeparationReport:
    violations: list[Violation] = field(default_factory=list)
    min_slack: float = np.inf
    min_at: Violation | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def extend_cycle(times: np.ndarray, cycle: float | None) -> np.ndarray:
    """Append the wrap-around repeat of the first train, if any."""
    if cycle is None:
        return times
    return np.vstack([times, times[:1] + cycle])


def check_separation(
    times: np.ndarray,
    buffers: Sequence[float] | float = 0.0,
    cycle: float | None = None,
    tol: float = 1e-6,
) -> SeparationReport:
    """Check that each follower enters ``(x_{j-1}, x_{j+1})`` after the leader exits.

    For consecutive trains ``i`` and ``i+1`` and interior signal ``j`` the
    slack is ``t[i+1, j-1] - t[i, j+1] - buffer_i``. Cells that are NaN on
    either side are skipped. Slack below ``-tol`` is a violation.
    """
    grid = extend_cycle(np.asarray(times, dtype=float), cycle)
    pairs = len(grid) - 1
    if np.isscalar(buffers):
        buf = np.full(pairs, float(buffers))
    else:
        buf = np.asarray(buffers, dtype=float)
        if len(buf) != pairs:
            raise LengthMismatch(f"expected {pairs} buffers, got {len(buf)}")
    report = SeparationReport()
    n = grid.shape[1] - 1
    leader_idx = list(range(pairs))
    for i in leader_idx:
        for j in range(1, n):
            a, b = grid[i, j + 1], grid[i + 1, j - 1]
            if np.isnan(a) or np.isnan(b):
                continue
            v = Violation(i, i + 1, j, float(b - a - buf[i]))
            if v.slack < report.min_slack:
                report.min_slack, report.min_at = v.slack, v
            if v.slack < -tol:
                report.violations.append(v)
    return report


def monotone_rows(times: np.ndarray) -> bool:
    """True if the timed cells of every row increase strictly."""
    for row in np.asarray(times):
        r = row[~np.isnan(row)]
        if np.any(np.diff(r) <= 0):
            return False
    return True


# --- text serialization -------------------------------------------------------

def dumps(table: ConstraintTable) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["table"] = {
        "trains": ", ".join(table.trains),
        "signals": ", ".join(table.signals),
        "buffers": ", ".join(repr(b) for b in table.buffers),
        "cycle": "" if table.cycle is None else repr(float(table.cycle)),
    }
    for i, name in enumerate(table.trains):
        cp[f"train {name}"] = {
            sig: "-" if e is None else str(e) for sig, e in zip(table.signals, table.entries[i])
        }
    cp["dwell"] = {name: ", ".join(repr(float(d)) for d in table.dwell[i]) for i, name in enumerate(table.trains)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _split(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def loads(text: str) -> ConstraintTable:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    if "table" not in cp:
        raise Incomplete("missing [table] section")
    head = cp["table"]
    trains = _split(head.get("trains", ""))
    signals = _split(head.get("signals", ""))
    buffers = [float(b) for b in _split(head.get("buffers", ""))]
    cyc = head.get("cycle", "").strip()
    cells = {}
    for name in trains:
        sec = f"train {name}"
        if sec not in cp:
            raise Incomplete(f"missing section [{sec}]")
        row = []
        for sig in signals:
            if sig not in cp[sec]:
                raise Incomplete(f"train {name}: no cell for signal {sig}")
            row.append(cp[sec][sig])
        cells[name] = row
    dwell = None
    if "dwell" in cp:
        dwell = {t: [float(x) for x in _split(cp["dwell"][t])] for t in trains if t in cp["dwell"]}
    return build_custom_table(cells, signals, dwell=dwell, buffers=buffers, cycle=float(cyc) if cyc else None)

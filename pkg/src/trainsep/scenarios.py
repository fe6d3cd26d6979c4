"""Glasgow Queen Street to Edinburgh Waverley shuttle: four trains per hour.

Positions are metres from GLQ. Trains 1 and 3 stop at CRO, FKK and HYM;
trains 2 and 4 stop at FKK, PMT, LIN and HYM. Every intermediate stop has a
60 s dwell. BBG and WGJ are passing points only.
"""

from __future__ import annotations

import numpy as np

from .constraints import ConstraintTable, build_custom_table
from .dynamics import ALTERNATIVE_TRAIN, REFERENCE_TRAIN

STATIONS = ("GLQ", "BBG", "LNZ", "CRO", "FKK", "PMT", "LIN", "WGJ", "HYM", "EDB")
POSITIONS = np.array([0, 5140, 9980, 18350, 34820, 40250, 47590, 55610, 73010, 75700], dtype=float)
DEPARTURES = (0.0, 900.0, 1800.0, 2700.0)
ARRIVALS = (3180.0, 4140.0, 4860.0, 5820.0)
CYCLE = 3600.0
DWELL = 60.0
TRAINS = ("T1", "T2", "T3", "T4")
STOPS = {
    "T1": ("CRO", "FKK", "HYM"),
    "T2": ("FKK", "PMT", "LIN", "HYM"),
    "T3": ("CRO", "FKK", "HYM"),
    "T4": ("FKK", "PMT", "LIN", "HYM"),
}

# speed penalties (m/s) for the weighted schedule, keyed by
# (train index from 0, section index from 1): CRO-FKK for trains 1 and 3
# and HYM-EDB for train 3
WEIGHTED_PENALTIES = {(0, 4): 2.0, (2, 4): 1.0, (2, 9): 7.0}

# constant-speed optimum of the weighted, buffered problem
WEIGHTED_OPTIMUM_H = np.array([519, 830, 1409, 1666, 2109, 2971, 2271, 2584, 3857, 3204, 3460, 4720], dtype=float)


def dwell_grid() -> np.ndarray:
    g = np.zeros((len(TRAINS), len(STATIONS)))
    for i, t in enumerate(TRAINS):
        for s in STOPS[t]:
            g[i, STATIONS.index(s)] = DWELL
    return g


def penalty_grid(weighted: bool = True) -> np.ndarray:
    p = np.zeros((len(TRAINS), len(STATIONS) - 1))
    if weighted:
        for (i, j), v in WEIGHTED_PENALTIES.items():
            p[i, j - 1] = v
    return p


def _fx(t):
    return f"fixed:{t}"


def uniform_table() -> ConstraintTable:
    """Only the GLQ departure and EDB arrival are timed."""
    cells = {
        t: [_fx(d)] + ["-"] * (len(STATIONS) - 2) + [_fx(a)]
        for t, d, a in zip(TRAINS, DEPARTURES, ARRIVALS)
    }
    return build_custom_table(cells, STATIONS, dwell=dwell_grid(), cycle=CYCLE)


def minimal_separation_table() -> ConstraintTable:
    """Clearance times active on LNZ, CRO and LIN segments with no buffer."""
    cells = {
        "T1": [_fx(0), "-", "h1", "h2", "h3", "h4", "h5", "-", "h6", _fx(3180)],
        "T2": [_fx(900), "-", "h3", "h4", "h7", "h8", "h6", "-", "h9", _fx(4140)],
        "T3": [_fx(1800), "-", "h7", "h8", "h10", "h11", "h9", "-", "h12", _fx(4860)],
        "T4": [_fx(2700), "-", "h10", "h11", "h1+3600", "h2+3600", "h12", "-", "h5+3600", _fx(5820)],
    }
    return build_custom_table(cells, STATIONS, dwell=dwell_grid(), buffers=(0, 0, 0, 0), cycle=CYCLE)


def buffered_table(buffer: float = 60.0) -> ConstraintTable:
    """Same active clearance times with a fixed buffer between trains."""
    b = f"{buffer:g}"
    w = f"{CYCLE - buffer:g}"
    cells = {
        "T1": [_fx(0), "-", "h1", "h2", "h3", "h4", "h5", "-", "h6", _fx(3180)],
        "T2": [_fx(900), "-", f"h3+{b}", f"h4+{b}", "h7", "h8", f"h6+{b}", "-", "h9", _fx(4140)],
        "T3": [_fx(1800), "-", f"h7+{b}", f"h8+{b}", "h10", "h11", f"h9+{b}", "-", "h12", _fx(4860)],
        "T4": [_fx(2700), "-", f"h10+{b}", f"h11+{b}", f"h1+{w}", f"h2+{w}", f"h12+{b}", "-", f"h5+{w}", _fx(5820)],
    }
    return build_custom_table(cells, STATIONS, dwell=dwell_grid(), buffers=(buffer,) * 4, cycle=CYCLE)


def reference_trains():
    return [REFERENCE_TRAIN] * len(TRAINS)


def mixed_trains():
    """Trains 1 and 3 use the alternative parameters, 2 and 4 the reference ones."""
    return [ALTERNATIVE_TRAIN, REFERENCE_TRAIN, ALTERNATIVE_TRAIN, REFERENCE_TRAIN]

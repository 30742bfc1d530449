"""Gridded aerodynamic and engine tables.

Tables live in plain-text CSV files (one per coefficient) with a ``#``-comment
header naming the axes, their units and breakpoints, followed by one row per
grid node in C order.  Lookups are multilinear inside the grid hull and clamp
to the edge outside it.

The loaded set is an :class:`AeroTables` named tuple, one field per table.
Compiled kernels take the flattened :class:`PackedTables` form instead (four
arrays, indexed by table number) because passing a large tuple of arrays into
every kernel call costs more than the interpolation itself.
"""

import math
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import TableError

TABLE_NAMES_2D = (
    "axial", "pitch", "roll", "yaw",
    "roll_aileron", "roll_rudder", "yaw_aileron", "yaw_rudder",
    "thrust_idle", "thrust_mil", "thrust_max",
)
TABLE_NAMES_1D = (
    "normal", "axial_q", "side_r", "side_p", "normal_q",
    "roll_r", "roll_p", "pitch_q", "yaw_r", "yaw_p",
)
CONTROL_AND_DAMPING = TABLE_NAMES_1D[1:] + ("roll_aileron", "roll_rudder", "yaw_aileron", "yaw_rudder")
SCALAR_NAMES = ("side_beta", "side_aileron", "side_rudder", "normal_elevator", "normal_beta_scale")


class AeroTables(NamedTuple):
    """Coefficient set of the airframe model.

    2-D entries are ``(grid0, grid1, values)`` and 1-D entries ``(grid0, values)``.
    Force coefficients use the resistive sign convention: axial is positive
    opposing body +x, side opposing body +y, normal opposing body +z (so it is
    lift-like).  Moment coefficients are right-handed about body axes.
    """

    axial: tuple
    pitch: tuple
    roll: tuple
    yaw: tuple
    roll_aileron: tuple
    roll_rudder: tuple
    yaw_aileron: tuple
    yaw_rudder: tuple
    thrust_idle: tuple
    thrust_mil: tuple
    thrust_max: tuple
    normal: tuple
    axial_q: tuple
    side_r: tuple
    side_p: tuple
    normal_q: tuple
    roll_r: tuple
    roll_p: tuple
    pitch_q: tuple
    yaw_r: tuple
    yaw_p: tuple
    side_beta: float
    side_aileron: float
    side_rudder: float
    normal_elevator: float
    normal_beta_scale: float


class PackedTables(NamedTuple):
    grids: np.ndarray  # (n_tables, 2, max_len) breakpoints, zero padded
    sizes: np.ndarray  # (n_tables, 2) breakpoint counts; 1-D tables have size 1 on axis 1
    values: np.ndarray  # (n_tables, max_len0, max_len1)
    scalars: np.ndarray  # SCALAR_NAMES order


TABLE_ORDER = TABLE_NAMES_2D + TABLE_NAMES_1D
(AXIAL, PITCH, ROLL, YAW, ROLL_AILERON, ROLL_RUDDER, YAW_AILERON, YAW_RUDDER,
 THRUST_IDLE, THRUST_MIL, THRUST_MAX, NORMAL, AXIAL_Q, SIDE_R, SIDE_P, NORMAL_Q,
 ROLL_R, ROLL_P, PITCH_Q, YAW_R, YAW_P) = range(len(TABLE_ORDER))
SIDE_BETA, SIDE_AILERON, SIDE_RUDDER, NORMAL_ELEVATOR, NORMAL_BETA_SCALE = range(len(SCALAR_NAMES))


def pack_tables(tables):
    """Flatten an :class:`AeroTables` into a :class:`PackedTables`."""
    if isinstance(tables, PackedTables):
        return tables
    tabs = [getattr(tables, n) for n in TABLE_ORDER]
    m = max(g.size for t in tabs for g in t[:-1])
    grids = np.zeros((len(tabs), 2, m))
    sizes = np.ones((len(tabs), 2), dtype=np.int64)
    values = np.zeros((len(tabs), m, m))
    for k, t in enumerate(tabs):
        v = t[-1].reshape(t[-1].shape[0], -1)
        for ax, g in enumerate(t[:-1]):
            grids[k, ax, :g.size] = g
            sizes[k, ax] = g.size
        values[k, :v.shape[0], :v.shape[1]] = v
    scalars = np.array([getattr(tables, n) for n in SCALAR_NAMES], dtype=float)
    return PackedTables(grids, sizes, values, scalars)


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _bracket(grid, x):
    n = grid.shape[0]
    if x <= grid[0]:
        return 0, 0.0
    if x >= grid[n - 1]:
        return n - 2, 1.0
    i = np.searchsorted(grid, x, side="right") - 1
    return i, (x - grid[i]) / (grid[i + 1] - grid[i])


@njit(cache=True)
def interp1(table, x):
    grid, values = table
    if grid.shape[0] == 1:
        return values[0]
    i, t = _bracket(grid, x)
    return values[i] + t * (values[i + 1] - values[i])


@njit(cache=True)
def interp2(table, x, y):
    gx, gy, v = table
    i, tx = _bracket(gx, x)
    j, ty = _bracket(gy, y)
    a = v[i, j] + ty * (v[i, j + 1] - v[i, j])
    b = v[i + 1, j] + ty * (v[i + 1, j + 1] - v[i + 1, j])
    return a + tx * (b - a)


@njit(cache=True)
def _bracket_n(grid, n, x):
    if x <= grid[0]:
        return 0, 0.0
    if x >= grid[n - 1]:
        return n - 2, 1.0
    i = np.searchsorted(grid[:n], x, side="right") - 1
    return i, (x - grid[i]) / (grid[i + 1] - grid[i])


@njit(cache=True)
def lookup1(pk, k, x):
    """Packed-table counterpart of :func:`interp1` for table number ``k``."""
    n = pk.sizes[k, 0]
    if n == 1:
        return pk.values[k, 0, 0]
    i, t = _bracket_n(pk.grids[k, 0], n, x)
    v = pk.values[k]
    return v[i, 0] + t * (v[i + 1, 0] - v[i, 0])


@njit(cache=True)
def lookup2(pk, k, x, y):
    """Packed-table counterpart of :func:`interp2` for table number ``k``."""
    i, tx = _bracket_n(pk.grids[k, 0], pk.sizes[k, 0], x)
    j, ty = _bracket_n(pk.grids[k, 1], pk.sizes[k, 1], y)
    v = pk.values[k]
    a = v[i, j] + ty * (v[i, j + 1] - v[i, j])
    b = v[i + 1, j] + ty * (v[i + 1, j + 1] - v[i + 1, j])
    return a + tx * (b - a)


# ---------------------------------------------------------------- file IO

def _read_table(path):
    meta = {}
    header_done = False
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition(":")
                if sep:
                    meta[key.strip()] = val.strip()
                continue
            if not header_done:
                header_done = True
                columns = line.split(",")
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if "axes" not in meta:
        raise TableError(f"{path}: missing '# axes:' header")
    axes = meta["axes"].split()
    if columns != axes + ["value"]:
        raise TableError(f"{path}: column header {columns} does not match axes {axes}")
    grids = []
    for ax in axes:
        if ax not in meta:
            raise TableError(f"{path}: no breakpoints for axis {ax}")
        g = np.array([float(t) for t in meta[ax].split()])
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise TableError(f"{path}: axis {ax} is not strictly increasing")
        grids.append(g)
    data = np.array(rows)
    shape = tuple(g.size for g in grids)
    if data.shape != (int(np.prod(shape)), len(axes) + 1):
        raise TableError(f"{path}: expected {np.prod(shape)} rows for grid {shape}, got {data.shape[0]}")
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, len(axes))
    if not np.allclose(mesh, data[:, :-1]):
        raise TableError(f"{path}: rows are not the full grid in C order")
    return tuple(grids) + (data[:, -1].reshape(shape).copy(),), meta


def read_table(path):
    """Read one table file; returns ``(grids..., values)``."""
    return _read_table(path)[0]


def _read_scalars(path):
    out = {}
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    for ln in lines[1:]:
        name, value = ln.split(",")[:2]
        out[name.strip()] = float(value)
    return out


def table_dir(name_or_path="f16"):
    p = Path(name_or_path)
    if p.is_dir():
        return p
    ref = resources.files("dogfight") / "data" / str(name_or_path)
    p = Path(str(ref))
    if not p.is_dir():
        raise TableError(f"unknown table set {name_or_path!r}")
    return p


def load_tables(name_or_path="f16"):
    """Load a table set by packaged name (``"f16"``) or directory path."""
    d = table_dir(name_or_path)
    fields = {}
    for name in TABLE_NAMES_2D + TABLE_NAMES_1D:
        f = d / f"{name}.csv"
        if not f.exists():
            raise TableError(f"{d}: missing table {name}.csv")
        tab = read_table(f)
        expected = 3 if name in TABLE_NAMES_2D else 2
        if len(tab) != expected:
            raise TableError(f"{f}: expected {expected - 1} axes")
        fields[name] = tab
    scalars = _read_scalars(d / "scalars.csv")
    for name in SCALAR_NAMES:
        if name not in scalars:
            raise TableError(f"{d}/scalars.csv: missing {name}")
        fields[name] = scalars[name]
    return AeroTables(**fields)


def uniform_tables(coefficient=0.0, thrust=0.0, base=None):
    """Same grids as ``base`` but every coefficient table constant.

    Control and damping derivatives are zeroed and the sideslip scale removed,
    so each force or moment coefficient evaluates to exactly ``coefficient``.
    Useful for vacuum and hand-evaluation checks.
    """
    base = base or load_tables()
    fields = {}
    for name in TABLE_NAMES_2D + TABLE_NAMES_1D:
        tab = getattr(base, name)
        fill = thrust if name.startswith("thrust") else coefficient
        if name in CONTROL_AND_DAMPING:
            fill = 0.0
        fields[name] = tab[:-1] + (np.full_like(tab[-1], fill),)
    for name in SCALAR_NAMES:
        fields[name] = 0.0
    fields["normal_beta_scale"] = math.inf
    return AeroTables(**fields)

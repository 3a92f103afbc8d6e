"""Compile unitaries into a rectangular mesh of MZI cells and back.

Cell convention, used by everything in this module and its tests: a cell on
adjacent modes (m, m+1) applies

    T(theta, phi) = BS(theta) @ P(phi)
                  = [[exp(i phi) cos(theta),          i sin(theta)],
                     [i exp(i phi) sin(theta),          cos(theta)]]

i.e. a phase phi on the first mode followed by a symmetric beamsplitter with
transmission cos(theta).  theta lies in [0, pi/2], phi in [0, 2 pi).  A mesh
composes as  U = diag(exp(i output_phases)) @ T_K @ ... @ T_1  with cells
listed in application order (T_1 acts first).

Time-bin mapping: one mesh layer per loop traversal.  A loop is the 180 m
fibre delay at group index 1.5 (~900 ns, 36 bins of 25 ns); a cell on modes
(i, i+1) fires when bin i, delayed by the 7.5 m free-space line, co-arrives
with bin i+1, i.e. at bin index i+1 of that traversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalConsistencyError, ValidationError
from .numerics import ensure_unitary

TWO_PI = 2.0 * math.pi

BIN_SPACING_NS = 25.0
FIBRE_LENGTH_M = 180.0
FIBRE_GROUP_INDEX = 1.5
LIGHT_SPEED_M_PER_NS = 0.2998

DEVICE_SWITCH_IN = "EOMa"
DEVICE_SWITCH_OUT = "EOMb"
DEVICE_THETA = "EOM1"
DEVICE_PHI = "EOM2"
DEVICE_OUTPUT_PHASE = "OUT"

_DEVICE_ORDER = {DEVICE_SWITCH_IN: 0, DEVICE_THETA: 1, DEVICE_PHI: 2,
                 DEVICE_SWITCH_OUT: 3, DEVICE_OUTPUT_PHASE: 4}


@dataclass(frozen=True)
class MziSetting:
    """One MZI cell: adjacent mode pair plus its (theta, phi) drive values."""

    mode_pair: tuple[int, int]
    theta: float
    phi: float

    def __post_init__(self):
        i, j = self.mode_pair
        if j != i + 1 or i < 0:
            raise ValidationError(f"mode pair {self.mode_pair} is not adjacent")
        if not (-1e-12 <= self.theta <= math.pi / 2 + 1e-12):
            raise ValidationError(f"theta {self.theta} outside [0, pi/2]")
        if not (0.0 <= self.phi < TWO_PI):
            raise ValidationError(f"phi {self.phi} outside [0, 2pi)")

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        ph = np.exp(1j * self.phi)
        return np.array([[ph * c, 1j * s], [1j * ph * s, c]])


@dataclass(frozen=True)
class Mesh:
    """Cells in application order plus the terminal per-mode output phases."""

    mode_count: int
    cells: tuple[MziSetting, ...]
    output_phases: np.ndarray

    def __post_init__(self):
        phases = np.asarray(self.output_phases, dtype=float)
        if phases.shape != (self.mode_count,):
            raise ValidationError("output_phases must have one entry per mode")
        for cell in self.cells:
            if cell.mode_pair[1] >= self.mode_count:
                raise ValidationError(f"cell {cell.mode_pair} exceeds mode count")
        object.__setattr__(self, "output_phases", phases)

    def layers(self) -> list[list[int]]:
        """Greedy earliest-layer assignment; cells in one layer never share a mode."""
        last = [-1] * self.mode_count
        layers: list[list[int]] = []
        for k, cell in enumerate(self.cells):
            i, j = cell.mode_pair
            lay = max(last[i], last[j]) + 1
            if lay == len(layers):
                layers.append([])
            layers[lay].append(k)
            last[i] = last[j] = lay
        return layers


def _cell_matrix_embedded(n: int, cell: MziSetting) -> np.ndarray:
    t = np.eye(n, dtype=complex)
    i, j = cell.mode_pair
    t[np.ix_([i, j], [i, j])] = cell.matrix()
    return t


def mesh_compose(m: Mesh) -> np.ndarray:
    """Product of cell matrices (first cell applied first) and output phases."""
    u = np.eye(m.mode_count, dtype=complex)
    for cell in m.cells:
        u = _cell_matrix_embedded(m.mode_count, cell) @ u
    return np.exp(1j * m.output_phases)[:, None] * u


def _wrap_phi(phi: float) -> float:
    phi = phi % TWO_PI
    return 0.0 if phi >= TWO_PI else phi


def _null_with_columns(a: complex, b: complex) -> tuple[float, float]:
    """(theta, phi) such that right-multiplying by T^{-1} on columns (c, c+1)
    nulls the element currently worth ``a`` (with ``b`` its right neighbour)."""
    if abs(a) == 0.0:
        return 0.0, 0.0
    if abs(b) == 0.0:
        return math.pi / 2, 0.0
    theta = math.atan2(abs(a), abs(b))
    phi = _wrap_phi(np.angle(a / b) - math.pi / 2)
    return theta, phi


def _null_with_rows(a: complex, b: complex) -> tuple[float, float]:
    """(theta, phi) such that left-multiplying by T on rows (r-1, r) nulls the
    element currently worth ``b`` (with ``a`` the entry above it)."""
    if abs(b) == 0.0:
        return 0.0, 0.0
    if abs(a) == 0.0:
        return math.pi / 2, 0.0
    theta = math.atan2(abs(b), abs(a))
    phi = _wrap_phi(np.angle(b / a) + math.pi / 2)
    return theta, phi


def clements_decompose(u: np.ndarray) -> Mesh:
    """Rectangular mesh realizing ``u``; round-trips through mesh_compose.

    Follows the standard zig-zag elimination: odd anti-diagonals are nulled by
    right-multiplication with inverse cells (column mixing), even ones by
    left-multiplication (row mixing).  The accumulated left factors are then
    commuted through the residual diagonal so every physical cell is a bona
    fide T(theta, phi) and all leftover phases sit at the output.
    """
    u = ensure_unitary(np.asarray(u, dtype=complex), tol=1e-10).copy()
    n = u.shape[0]
    if n == 0:
        raise ValidationError("unitary must have dimension >= 1")

    right_cells: list[MziSetting] = []
    left_ops: list[tuple[int, float, float]] = []  # (mode, theta, phi) of T applied on the left

    for diag in range(1, n):
        if diag % 2 == 1:
            for j in range(diag):
                row, col = n - 1 - j, diag - 1 - j
                theta, phi = _null_with_columns(u[row, col], u[row, col + 1])
                cell = MziSetting((col, col + 1), theta, phi)
                tinv = cell.matrix().conj().T
                u[:, [col, col + 1]] = u[:, [col, col + 1]] @ tinv
                right_cells.append(cell)
        else:
            for j in range(1, diag + 1):
                row, col = n + j - diag - 1, j - 1
                theta, phi = _null_with_rows(u[row - 1, col], u[row, col])
                cell = MziSetting((row - 1, row), theta, phi)
                u[[row - 1, row], :] = cell.matrix() @ u[[row - 1, row], :]
                left_ops.append((row - 1, theta, phi))

    off_diag = np.max(np.abs(u - np.diag(np.diagonal(u)))) if n > 1 else 0.0
    if off_diag > 1e-9:
        raise InternalConsistencyError(
            f"Clements elimination left off-diagonal residue {off_diag:.3e}")

    phases = np.diagonal(u).copy()

    # Commute each accumulated T^dagger through the diagonal:
    #   T(theta, phi)^dagger D = D' T(theta, phi') with
    #   phi' = arg(-d_m / d_n), d'_m = -exp(-i phi) d_n, d'_n = d_n.
    converted: list[MziSetting] = []
    for mode, theta, phi in reversed(left_ops):
        d_m, d_n = phases[mode], phases[mode + 1]
        phi_new = _wrap_phi(float(np.angle(-d_m / d_n)))
        converted.append(MziSetting((mode, mode + 1), theta, phi_new))
        phases[mode] = -np.exp(-1j * phi) * d_n
        phases[mode + 1] = d_n

    cells = tuple(right_cells + converted)
    return Mesh(n, cells, np.angle(phases))


# ---------------------------------------------------------------------------
# Time-bin schedule


@dataclass(frozen=True)
class TimeBinSchedule:
    """Logical EOM drive events, bin-aligned, one mesh layer per loop."""

    events: tuple[tuple[float, str, float], ...]
    bin_spacing_ns: float = BIN_SPACING_NS

    def __post_init__(self):
        seen = set()
        prev = -math.inf
        for t, device, _ in self.events:
            if t < prev:
                raise ValidationError("event times must be non-decreasing")
            prev = t
            if (t, device) in seen:
                raise ValidationError(f"duplicate event ({t}, {device})")
            seen.add((t, device))


def loop_latency_ns(bin_spacing_ns: float = BIN_SPACING_NS) -> float:
    """Fibre loop traversal time rounded to a whole number of bins (900 ns)."""
    raw = FIBRE_LENGTH_M * FIBRE_GROUP_INDEX / LIGHT_SPEED_M_PER_NS
    return round(raw / bin_spacing_ns) * bin_spacing_ns


def compile_timebin_schedule(m: Mesh, bin_spacing_ns: float = BIN_SPACING_NS) -> TimeBinSchedule:
    """One (EOM1, EOM2) pair per cell at its co-arrival bin; EOMa/EOMb bracket
    each layer; terminal output-phase events carry the OUT pseudo-device."""
    loop = loop_latency_ns(bin_spacing_ns)
    events: list[tuple[float, str, float]] = []
    layers = m.layers()
    for lay_idx, cell_ids in enumerate(layers):
        t0 = lay_idx * loop
        modes = [m.cells[k].mode_pair for k in cell_ids]
        first_bin = min(i for i, _ in modes)
        last_bin = max(j for _, j in modes)
        events.append((t0 + first_bin * bin_spacing_ns, DEVICE_SWITCH_IN, 1.0))
        events.append((t0 + (last_bin + 1) * bin_spacing_ns, DEVICE_SWITCH_OUT, 0.0))
        for k in cell_ids:
            cell = m.cells[k]
            t = t0 + cell.mode_pair[1] * bin_spacing_ns
            events.append((t, DEVICE_THETA, cell.theta))
            events.append((t, DEVICE_PHI, cell.phi))
    t_out = len(layers) * loop
    for mode in range(m.mode_count):
        events.append((t_out + mode * bin_spacing_ns, DEVICE_OUTPUT_PHASE,
                       float(m.output_phases[mode])))
    events.sort(key=lambda e: (e[0], _DEVICE_ORDER[e[1]]))
    return TimeBinSchedule(tuple(events), bin_spacing_ns)


# ---------------------------------------------------------------------------
# Loss budget


@dataclass(frozen=True)
class LossModel:
    """Fixed stage transmissions plus the compounding per-loop transmission."""

    stages: tuple[tuple[str, float], ...] = ()
    per_loop_transmission: float = 1.0

    def __post_init__(self):
        for label, t in self.stages:
            if not (0.0 <= t <= 1.0):
                raise ValidationError(f"stage {label!r} transmission {t} outside [0, 1]")
        if not (0.0 <= self.per_loop_transmission <= 1.0):
            raise ValidationError("per-loop transmission outside [0, 1]")


def loss_budget(model: LossModel, loops: int) -> float:
    """Total transmission: per_loop^loops times the product of stage transmissions."""
    if loops < 0:
        raise ValidationError("loops must be >= 0")
    total = model.per_loop_transmission ** loops
    for _, t in model.stages:
        total *= t
    return float(total)

"""
Excitation-profile grids and correlated-error line scans.

A profile is the composite transition probability over a rectangular grid of
static detuning and constituent-pulse duration. Cells are independent; the
grid is split into detuning rows for optional process parallelism and
reassembled by index, so the output never depends on the worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, dynamics, su2
from .errors import ConvergenceError, DomainError
from .sequences import CompositeSequence, compose_sequence, to_degrees

TWO_PI = 2.0 * np.pi

# Default axes: a best-effort window around the pi-pulse point.
DEFAULT_RABI_HZ = 50e3
DEFAULT_DETUNING_HZ = (-60e3, 60e3, 121)
DEFAULT_DURATION_S = (2e-6, 18e-6, 81)


@dataclass(frozen=True)
class GridSpec:
    """Detuning axis (rad/s) and duration axis (s) as ``(min, max, count)``."""

    detuning_axis: tuple
    duration_axis: tuple
    base_pulse: dynamics.PulseSpec

    def __post_init__(self):
        for name in ("detuning_axis", "duration_axis"):
            lo, hi, count = getattr(self, name)
            if int(count) < 2 or not lo < hi:
                raise DomainError(f"{name} needs min < max and count >= 2")
        if self.duration_axis[0] <= 0:
            raise DomainError("durations must be positive")

    @property
    def detunings(self) -> np.ndarray:
        return _axis(*self.detuning_axis)

    @property
    def durations(self) -> np.ndarray:
        return _axis(*self.duration_axis)

    @property
    def shape(self) -> tuple:
        return (int(self.detuning_axis[2]), int(self.duration_axis[2]))


def _axis(lo, hi, count):
    x = np.linspace(lo, hi, int(count))
    if np.isclose(lo, -hi):
        # exact mirror symmetry for axes centred on zero
        x = 0.5 * (x - x[::-1])
    return x


def default_grid(rabi_hz: float = DEFAULT_RABI_HZ, base: dynamics.PulseSpec | None = None) -> GridSpec:
    lo, hi, nd = DEFAULT_DETUNING_HZ
    tlo, thi, nt = DEFAULT_DURATION_S
    if base is None:
        base = dynamics.PulseSpec(omega_peak=TWO_PI * rabi_hz, duration=np.pi / (TWO_PI * rabi_hz))
    return GridSpec((TWO_PI * lo, TWO_PI * hi, nd), (tlo, thi, nt), base)


@dataclass
class ProfileGrid:
    """Transition probabilities ``values[i_detuning, i_duration]``."""

    values: np.ndarray
    detunings: np.ndarray
    durations: np.ndarray
    sequence: str
    phases: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (len(self.detunings), len(self.durations)):
            raise ValueError("values shape does not match axes")

    def mirrored(self) -> "ProfileGrid":
        """Grid reflected about zero detuning."""
        return ProfileGrid(self.values[::-1].copy(), -self.detunings[::-1], self.durations,
                           self.sequence, self.phases, dict(self.provenance))

    def normalized(self) -> "ProfileGrid":
        peak = float(np.max(self.values))
        vals = self.values / peak if peak > 0 else self.values.copy()
        prov = dict(self.provenance, normalized_by=peak)
        return ProfileGrid(vals, self.detunings, self.durations, self.sequence, self.phases, prov)

    def argmax(self) -> tuple:
        """``(detuning, duration)`` of the largest value."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.detunings[i]), float(self.durations[j])

    # output ----------------------------------------------------------------

    def header_lines(self) -> list:
        prov = self.provenance
        items = [f"seq={self.sequence}"]
        items += [f"{k}={_fmt(prov[k])}" for k in ("phi2", "omega_hz") if k in prov]
        items.append(f"phases={self.phases}")
        items += [f"{k}={_fmt(v)}" for k, v in prov.items()
                  if k not in ("phi2", "omega_hz") and not isinstance(v, (dict, list))]
        return ["# " + " ".join(items)]

    def to_csv(self, path=None, extra_header=()) -> str:
        lines = self.header_lines() + [f"# {h}" for h in extra_header]
        lines.append("detuning_hz,duration_s,p12")
        for i, det in enumerate(self.detunings):
            hz = det / TWO_PI
            for j, dur in enumerate(self.durations):
                lines.append(f"{_fmt(hz)},{_fmt(dur)},{_fmt(self.values[i, j])}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None) -> str:
        doc = {
            "sequence": self.sequence,
            "phases": self.phases,
            "detuning_hz": [float(_fmt(d / TWO_PI)) for d in self.detunings],
            "duration_s": [float(_fmt(t)) for t in self.durations],
            "p12": [[float(_fmt(v)) for v in row] for row in self.values],
            "provenance": self.provenance,
        }
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def read_profile_csv(path) -> ProfileGrid:
    """Load a grid written by :meth:`ProfileGrid.to_csv`."""
    header = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for item in line[1:].split():
                k, _, v = item.partition("=")
                if v:
                    header.setdefault(k, v)
        elif line and not line.startswith("detuning_hz"):
            rows.append([float(x) for x in line.split(",")])
    data = np.array(rows)
    det = np.unique(data[:, 0])
    dur = np.unique(data[:, 1])
    vals = data[:, 2].reshape(len(det), len(dur))
    return ProfileGrid(vals, det * TWO_PI, dur, header.get("seq", ""), header.get("phases", ""), header)


# --------------------------------------------------------------------------


def _probabilities(seq, pulse, detunings, durations, tolerance):
    d, t = np.meshgrid(detunings, durations, indexing="ij")
    try:
        u = dynamics.propagate_batch(pulse, tolerance, detuning0=d, duration=t)
    except ConvergenceError:
        for i, det in enumerate(detunings):
            for dur in durations:
                try:
                    dynamics.propagate(pulse.with_(detuning0=det, duration=dur), tolerance)
                except ConvergenceError as err:
                    raise ConvergenceError(
                        f"cell detuning={det / TWO_PI:.6g} Hz duration={dur:.6g} s: {err}",
                        err.residual,
                    ) from err
        raise
    comp = compose_sequence(seq, u)
    return np.clip(su2.transition_probability(comp), 0.0, 1.0)


def _row_job(args):
    return _probabilities(*args)


def _provenance(seq, grid, tolerance):
    base = grid.base_pulse
    phi2 = seq.law().phi2 if seq.n >= 3 else 0
    return {
        "engine": f"unicp-{__version__}",
        "phi2": f"{to_degrees(phi2):.12g}",
        "omega_hz": base.omega_peak / TWO_PI,
        "shape": base.shape.kind,
        "chirp": base.chirp,
        "stark_coeff": base.stark_coeff,
        "tolerance": tolerance,
        "detuning_axis_hz": [grid.detuning_axis[0] / TWO_PI, grid.detuning_axis[1] / TWO_PI,
                             int(grid.detuning_axis[2])],
        "duration_axis_s": [grid.duration_axis[0], grid.duration_axis[1], int(grid.duration_axis[2])],
        # flags whether the best-effort default window was used
        "axes": "default-best-effort" if _is_default_axes(grid) else "user",
    }


def _is_default_axes(grid):
    d = default_grid(grid.base_pulse.omega_peak / TWO_PI)
    return bool(np.allclose(grid.detuning_axis, d.detuning_axis, rtol=1e-12)
                and np.allclose(grid.duration_axis, d.duration_axis, rtol=1e-12))


def scan_profile(
    seq: CompositeSequence,
    grid: GridSpec,
    tolerance: float = dynamics.DEFAULT_TOLERANCE,
    workers: int = 1,
) -> ProfileGrid:
    """Composite transition probability on every (detuning, duration) cell.

    Raises
    ------
    ConvergenceError
        With the offending cell coordinates in the message.
    """
    det, dur = grid.detunings, grid.durations
    if workers > 1:
        chunks = np.array_split(np.arange(len(det)), min(workers * 4, len(det)))
        jobs = [(seq, grid.base_pulse, det[c], dur, tolerance) for c in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = np.concatenate(list(pool.map(_row_job, jobs)), axis=0)
    else:
        values = _probabilities(seq, grid.base_pulse, det, dur, tolerance)
    return ProfileGrid(values, det, dur, seq.name or "custom", str(seq),
                       _provenance(seq, grid, tolerance))


def high_fidelity_area(grid: ProfileGrid, threshold: float = 0.95) -> float:
    """Fraction of cells with value at or above ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise DomainError("threshold must lie in (0, 1)")
    return float(np.mean(grid.values >= threshold))


@dataclass(frozen=True)
class CorrelationPath:
    """Line ``Omega -> Omega (1 + e)``, ``Delta -> Delta0 + kappa Omega e``."""

    kappa: float
    span: tuple = (-0.2, 0.2)
    count: int = 41

    def __post_init__(self):
        if self.count < 2:
            raise DomainError("count must be >= 2")
        if not self.span[0] < self.span[1]:
            raise DomainError("span must be increasing")

    @property
    def errors(self) -> np.ndarray:
        return np.linspace(self.span[0], self.span[1], self.count)


def scan_correlated(
    seq: CompositeSequence,
    path: CorrelationPath,
    base: dynamics.PulseSpec,
    tolerance: float = dynamics.DEFAULT_TOLERANCE,
) -> list:
    """``[(e, P12), ...]`` along a correlated Rabi/detuning error line."""
    e = path.errors
    omega = base.omega_peak * (1.0 + e)
    delta = base.detuning0 + path.kappa * base.omega_peak * e
    u = dynamics.propagate_batch(base, tolerance, omega_peak=omega, detuning0=delta)
    p = np.clip(su2.transition_probability(compose_sequence(seq, u)), 0.0, 1.0)
    return [(float(a), float(b)) for a, b in zip(e, p)]

"""
Single-pulse propagators for physical pulses.

The drive is solved in the frame rotating with the carrier, where

    H(t) = (1/2) (Delta(t) sigma_z + Omega(t) sigma_x),
    Delta(t) = detuning0 + chirp (t - T/2) + stark_coeff Omega(t).

Time-independent pulses (rectangular envelope, no chirp) use the exact
exponential directly. Anything else goes through a fourth-order Magnus
stepper: the window is split into ``N`` equal steps, the Hamiltonian is
sampled at the two Gauss points of each step, the truncated Magnus
generator is exponentiated exactly, and ``N`` is doubled until two
successive refinements agree. Every step is an exact SU(2) rotation so
unitarity does not drift with the step count.

All frequencies are angular (rad/s), times in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import erf

from . import su2
from .errors import ConvergenceError, DomainError

DEFAULT_TOLERANCE = 1e-10
DEFAULT_INITIAL_STEPS = 64
MAX_STEPS = 2**20

# Gaussian envelopes are truncated at +-3 sigma, sigma = T/6.
_GAUSS_HALF_WIDTH_SIGMAS = 3.0


@dataclass(frozen=True)
class Envelope:
    """Normalised pulse envelope on the unit window ``x = t/T``.

    ``kind`` is ``"rectangular"``, ``"gaussian"`` or ``"sampled"``. Sampled
    envelopes carry monotone sample times (any units; they are rescaled onto
    the pulse window) and nonnegative amplitudes as fractions of the peak,
    linearly interpolated in between.
    """

    kind: str = "rectangular"
    times: tuple = ()
    amplitudes: tuple = ()

    def __post_init__(self):
        if self.kind not in ("rectangular", "gaussian", "sampled"):
            raise DomainError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "sampled":
            t = np.asarray(self.times, float)
            a = np.asarray(self.amplitudes, float)
            if t.ndim != 1 or t.size < 2 or t.shape != a.shape:
                raise DomainError("sampled envelope needs >= 2 (time, amplitude) pairs")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
                raise DomainError("sampled envelope contains non-finite values")
            if np.any(np.diff(t) <= 0):
                raise DomainError("sampled envelope times must be strictly increasing")
            if np.any(a < 0):
                raise DomainError("sampled envelope amplitudes must be nonnegative")

    @property
    def _x(self):
        t = np.asarray(self.times, float)
        return (t - t[0]) / (t[-1] - t[0])

    def __call__(self, x):
        """Envelope value at fractional times ``x`` in [0, 1]."""
        x = np.asarray(x, float)
        if self.kind == "rectangular":
            return np.ones_like(x)
        if self.kind == "gaussian":
            z = (x - 0.5) * 2.0 * _GAUSS_HALF_WIDTH_SIGMAS
            return np.exp(-0.5 * z**2)
        return np.interp(x, self._x, np.asarray(self.amplitudes, float))

    def integral(self, x):
        """``int_0^x f(x') dx'`` in closed form."""
        x = np.asarray(x, float)
        if self.kind == "rectangular":
            return x.copy()
        if self.kind == "gaussian":
            k = 2.0 * _GAUSS_HALF_WIDTH_SIGMAS
            c = np.sqrt(np.pi / 2.0) / k
            return c * (erf(k * (x - 0.5) / np.sqrt(2.0)) - erf(-k * 0.5 / np.sqrt(2.0)))
        xs = self._x
        a = np.asarray(self.amplitudes, float)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(xs))])
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        dx = x - xs[i]
        slope = (a[i + 1] - a[i]) / (xs[i + 1] - xs[i])
        return cum[i] + a[i] * dx + 0.5 * slope * dx**2

    @property
    def is_constant(self) -> bool:
        return self.kind == "rectangular"


RECTANGULAR = Envelope("rectangular")
GAUSSIAN = Envelope("gaussian")


def read_envelope(path) -> Envelope:
    """Load a sampled envelope from a two-column text file.

    Each non-comment line holds ``time_seconds amplitude_fraction_of_peak``
    separated by whitespace or a comma; ``#`` starts a comment.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise DomainError(f"{path}:{lineno}: expected two columns, got {raw!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise DomainError(f"{path}: no samples")
    t, a = zip(*rows)
    return Envelope("sampled", tuple(t), tuple(a))


@dataclass(frozen=True)
class PulseSpec:
    """One constituent pulse.

    Parameters
    ----------
    omega_peak : float
        Peak Rabi frequency (rad/s).
    duration : float
        Pulse length T (s).
    detuning0 : float
        Static detuning (rad/s).
    chirp : float
        Linear detuning ramp (rad/s^2), referenced to the pulse centre.
    stark_coeff : float
        Dimensionless; adds ``stark_coeff * Omega(t)`` to the detuning.
    shape : Envelope
        Normalised envelope.
    """

    omega_peak: float
    duration: float
    detuning0: float = 0.0
    chirp: float = 0.0
    stark_coeff: float = 0.0
    shape: Envelope = field(default=RECTANGULAR)

    def __post_init__(self):
        for name in ("omega_peak", "duration", "detuning0", "chirp", "stark_coeff"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.duration <= 0:
            raise DomainError("duration must be positive")
        if self.omega_peak < 0:
            raise DomainError("omega_peak must be nonnegative")

    def with_(self, **changes) -> "PulseSpec":
        return replace(self, **changes)

    @property
    def is_time_independent(self) -> bool:
        return self.shape.is_constant and self.chirp == 0.0

    def rabi(self, t):
        return self.omega_peak * self.shape(np.asarray(t) / self.duration)

    def detuning(self, t):
        t = np.asarray(t, float)
        return (
            self.detuning0
            + self.chirp * (t - 0.5 * self.duration)
            + self.stark_coeff * self.rabi(t)
        )


# --------------------------------------------------------------------------
# Batched kernels. Pulse parameters are arrays broadcast to a batch shape B;
# step arrays have shape B + (N,).


def _rotation(omega, delta, dt):
    """exp(-i dt/2 (delta sz + omega sx)), elementwise."""
    gen = np.sqrt(omega**2 + delta**2)
    theta = 0.5 * dt * gen
    # sin(theta)/gen written through sinc so gen = 0 needs no special case
    s = 0.5 * dt * np.sinc(theta / np.pi)
    c = np.cos(theta)
    u = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * s * delta
    u[..., 0, 1] = -1j * s * omega
    u[..., 1, 0] = -1j * s * omega
    u[..., 1, 1] = c + 1j * s * delta
    return u


def _magnus_step(a1, d1, a2, d2, h):
    """Fourth-order Magnus step for ``H = (a sx + d sz)/2`` sampled at the Gauss points.

    ``Omega_4 = -i h/2 (H1 + H2) - sqrt(3) h^2/12 [H2, H1]`` reduces to
    ``-i v.sigma`` with the commutator along sigma_y.
    """
    vx = 0.25 * h * (a1 + a2)
    vz = 0.25 * h * (d1 + d2)
    vy = (np.sqrt(3.0) / 24.0) * h**2 * (a1 * d2 - a2 * d1)
    theta = np.sqrt(vx**2 + vy**2 + vz**2)
    c = np.cos(theta)
    s = np.sinc(theta / np.pi)  # sin(theta)/theta
    u = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * s * vz
    u[..., 0, 1] = -s * (1j * vx + vy)
    u[..., 1, 0] = -s * (1j * vx - vy)
    u[..., 1, 1] = c + 1j * s * vz
    return u


def _ordered_product(steps):
    """Reduce ``(..., N, 2, 2)`` to ``U_N ... U_1`` by pairwise halving."""
    while steps.shape[-3] > 1:
        n = steps.shape[-3]
        if n % 2:
            eye = np.broadcast_to(np.eye(2, dtype=complex), steps.shape[:-3] + (1, 2, 2))
            steps = np.concatenate([steps, eye], axis=-3)
        steps = steps[..., 1::2, :, :] @ steps[..., 0::2, :, :]
    return steps[..., 0, :, :]


@dataclass(frozen=True)
class _Batch:
    omega_peak: np.ndarray
    duration: np.ndarray
    detuning0: np.ndarray
    chirp: np.ndarray
    stark_coeff: np.ndarray
    shape: Envelope

    def _fields(self, x):
        dur = self.duration[..., None]
        omega = self.omega_peak[..., None] * self.shape(x)
        delta = (
            self.detuning0[..., None]
            + self.chirp[..., None] * (x * dur - 0.5 * dur)
            + self.stark_coeff[..., None] * omega
        )
        return omega, delta

    def midpoint_product(self, n_steps):
        x = (np.arange(n_steps) + 0.5) / n_steps
        omega, delta = self._fields(x)
        return _ordered_product(_rotation(omega, delta, self.duration[..., None] / n_steps))

    def magnus_product(self, n_steps):
        g = 0.5 / np.sqrt(3.0)
        x = np.arange(n_steps) + 0.5
        a1, d1 = self._fields((x - g) / n_steps)
        a2, d2 = self._fields((x + g) / n_steps)
        return _ordered_product(_magnus_step(a1, d1, a2, d2, self.duration[..., None] / n_steps))

    def subset(self, mask):
        return _Batch(
            self.omega_peak[mask], self.duration[mask], self.detuning0[mask],
            self.chirp[mask], self.stark_coeff[mask], self.shape,
        )


def _make_batch(pulse, **overrides):
    names = ("omega_peak", "duration", "detuning0", "chirp", "stark_coeff")
    vals = [np.asarray(overrides.get(k, getattr(pulse, k)), float) for k in names]
    vals = np.broadcast_arrays(*vals)
    for name, v in zip(names, vals):
        if not np.all(np.isfinite(v)):
            raise DomainError(f"{name} must be finite")
    if np.any(vals[1] <= 0):
        raise DomainError("duration must be positive")
    if np.any(vals[0] < 0):
        raise DomainError("omega_peak must be nonnegative")
    return _Batch(*[np.array(v, dtype=float) for v in vals], pulse.shape)


def _exact(batch):
    # one step is exact for a constant Hamiltonian
    return batch.midpoint_product(1)


def _stepper(batch, tolerance, initial_steps, max_steps):
    shape = batch.omega_peak.shape
    out = np.empty(shape + (2, 2), dtype=complex)
    pending = np.ones(shape, dtype=bool)
    n = initial_steps
    coarse = batch.magnus_product(n).reshape(-1, 2, 2)
    residual = np.inf
    while True:
        n *= 2
        if n > max_steps:
            raise ConvergenceError(
                f"no convergence within {max_steps} steps (residual {residual:.3e})",
                residual,
            )
        sub = batch.subset(pending)
        fine = sub.magnus_product(n)
        diff = np.max(np.abs(fine - coarse), axis=(-1, -2))
        done = diff < tolerance
        idx = np.flatnonzero(pending.ravel())
        flat = out.reshape(-1, 2, 2)
        flat[idx[done]] = fine[done]
        pending.ravel()[idx[done]] = False
        if not pending.any():
            return out
        residual = float(np.max(diff[~done]))
        coarse = fine[~done]


def propagate_batch(
    pulse: PulseSpec,
    tolerance: float = DEFAULT_TOLERANCE,
    method: str = "auto",
    initial_steps: int = DEFAULT_INITIAL_STEPS,
    max_steps: int = MAX_STEPS,
    **overrides,
) -> np.ndarray:
    """Propagators for ``pulse`` with some fields replaced by arrays.

    Keyword overrides (``omega_peak``, ``duration``, ``detuning0``, ``chirp``,
    ``stark_coeff``) are broadcast together; the result has shape
    ``broadcast_shape + (2, 2)``. Convergence is judged per element, so each
    entry is exactly what :func:`propagate` returns for that single pulse.
    """
    if tolerance <= 0:
        raise DomainError("tolerance must be positive")
    batch = _make_batch(pulse, **overrides)
    if method not in ("auto", "stepper", "exact"):
        raise ValueError(f"unknown method {method!r}")
    constant = pulse.shape.is_constant and not np.any(batch.chirp)
    if method == "exact" and not constant:
        raise DomainError("closed form only exists for time-independent pulses")
    if method == "exact" or (method == "auto" and constant):
        return _exact(batch)
    return _stepper(batch, tolerance, initial_steps, max_steps)


def propagate(
    pulse: PulseSpec,
    tolerance: float = DEFAULT_TOLERANCE,
    method: str = "auto",
    initial_steps: int = DEFAULT_INITIAL_STEPS,
    max_steps: int = MAX_STEPS,
) -> np.ndarray:
    """Time-ordered propagator of one pulse over ``[0, T]``.

    Parameters
    ----------
    pulse : PulseSpec
    tolerance : float
        Entrywise agreement required between successive step doublings.
    method : {"auto", "stepper", "exact"}
        ``"auto"`` uses the exact exponential for time-independent pulses and
        the stepper otherwise; ``"stepper"`` forces time stepping.

    Raises
    ------
    DomainError
        Non-finite or out-of-range pulse parameters.
    ConvergenceError
        Step budget exhausted; carries the last residual.
    """
    return propagate_batch(pulse, tolerance, method, initial_steps, max_steps)


def transition_probability(pulse: PulseSpec, tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Population transfer ``1 - |u11|^2`` of a single pulse."""
    p = float(su2.transition_probability(propagate(pulse, tolerance)))
    return min(max(p, 0.0), 1.0)


# --------------------------------------------------------------------------
# Reference route in the frame where the detuning sits in the coupling phase,
# H = (Omega/2) [[0, e^{i delta(t)}], [e^{-i delta(t)}, 0]],
# delta(t) = int_0^t Delta(t') dt'. Used to cross-check the rotating frame.


@dataclass(frozen=True)
class PhaseAccumulator:
    """Accumulated detuning phase ``delta(t) = int_0^t Delta``."""

    delta_integral: float = 0.0

    def __add__(self, other):
        return PhaseAccumulator(self.delta_integral + other.delta_integral)


def accumulated_phase(pulse: PulseSpec, t0: float = 0.0, t1=None) -> PhaseAccumulator:
    """Detuning phase picked up between ``t0`` and ``t1`` (default ``T``)."""
    t1 = pulse.duration if t1 is None else t1
    return PhaseAccumulator(float(_delta_phase(pulse, t1) - _delta_phase(pulse, t0)))


def _delta_phase(pulse, t):
    t = np.asarray(t, float)
    T = pulse.duration
    return (
        pulse.detuning0 * t
        + pulse.chirp * (0.5 * t**2 - 0.5 * T * t)
        + pulse.stark_coeff * pulse.omega_peak * T * pulse.shape.integral(t / T)
    )


def propagate_phase_frame(
    pulse: PulseSpec,
    tolerance: float = 1e-8,
    initial_steps: int = DEFAULT_INITIAL_STEPS,
    max_steps: int = MAX_STEPS,
) -> np.ndarray:
    """Propagator computed with the accumulated-phase Hamiltonian.

    The result is transformed back to the rotating frame
    (``U_rot = M(T)^dagger U``, ``M = diag(e^{i delta/2}, e^{-i delta/2})``)
    so it is directly comparable with :func:`propagate`.
    """
    T = pulse.duration

    def product(n):
        t = (np.arange(n) + 0.5) * T / n
        omega = pulse.rabi(t)
        d = _delta_phase(pulse, t)
        # H = (Omega/2)(cos d sx - sin d sy): a rotation about an in-plane axis
        theta = 0.5 * omega * T / n
        c, s = np.cos(theta), np.sin(theta)
        u = np.empty((n, 2, 2), dtype=complex)
        u[:, 0, 0] = c
        u[:, 0, 1] = -1j * s * np.exp(1j * d)
        u[:, 1, 0] = -1j * s * np.exp(-1j * d)
        u[:, 1, 1] = c
        return _ordered_product(u)

    n = initial_steps
    coarse = product(n)
    while True:
        n *= 2
        if n > max_steps:
            raise ConvergenceError("phase-frame stepper did not converge", np.inf)
        fine = product(n)
        if np.max(np.abs(fine - coarse)) < tolerance:
            break
        coarse = fine
    dT = float(_delta_phase(pulse, T))
    m_dag = np.diag([np.exp(-0.5j * dT), np.exp(0.5j * dT)])
    return m_dag @ fine

"""
Complex 2x2 propagator algebra for a single two-level transition.

Propagators are plain ``numpy`` arrays of shape ``(..., 2, 2)`` with complex
dtype; every function broadcasts over leading axes so that whole grids of
pulses can be handled at once. State vectors are arrays of shape ``(..., 2)``.

A single imperfect inversion pulse is parameterised by an error amplitude
``epsilon`` and two phases::

    U(alpha, beta) = [[ eps e^{i alpha},          sqrt(1-eps^2) e^{i beta}],
                      [-sqrt(1-eps^2) e^{-i beta}, eps e^{-i alpha}       ]]

so that its transition probability is ``1 - eps**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Entrywise tolerance for the unitarity contract.
UNITARITY_TOL = 1e-12

# Below this |u11| the phase alpha is unobservable and reported as 0.
_EPS_FLOOR = 1e-14


@dataclass(frozen=True)
class PulseParams:
    """Error amplitude and phases of a single-pulse propagator."""

    epsilon: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")

    @property
    def transition_probability(self) -> float:
        return 1.0 - self.epsilon**2


def propagator(epsilon, alpha, beta) -> np.ndarray:
    """Broadcasting form of :func:`make_propagator` on raw arrays."""
    epsilon = np.asarray(epsilon, dtype=float)
    if np.any((epsilon < 0) | (epsilon > 1)) or not np.all(np.isfinite(epsilon)):
        raise DomainError("epsilon must lie in [0, 1]")
    eps, a, b = np.broadcast_arrays(epsilon, np.asarray(alpha, float), np.asarray(beta, float))
    s = np.sqrt(1.0 - eps**2)
    u = np.empty(eps.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = eps * np.exp(1j * a)
    u[..., 0, 1] = s * np.exp(1j * b)
    u[..., 1, 0] = -s * np.exp(-1j * b)
    u[..., 1, 1] = eps * np.exp(-1j * a)
    return u


def make_propagator(p: PulseParams) -> np.ndarray:
    """Build the 2x2 propagator of a pulse with parameters ``p``."""
    return propagator(p.epsilon, p.alpha, p.beta)


def phase_rotation(phi) -> np.ndarray:
    """Return ``exp(-i phi sigma_z / 2)`` = ``diag(e^{-i phi/2}, e^{i phi/2})``."""
    phi = np.asarray(phi, dtype=float)
    r = np.zeros(phi.shape + (2, 2), dtype=complex)
    r[..., 0, 0] = np.exp(-0.5j * phi)
    r[..., 1, 1] = np.exp(0.5j * phi)
    return r


def dagger(u: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(u, -1, -2))


def shift_phase(u: np.ndarray, phi) -> np.ndarray:
    """Apply a constant drive phase ``phi`` to a propagator.

    Equivalent to ``R(phi)^dagger @ u @ R(phi)``; for a propagator built from
    :class:`PulseParams` this maps ``beta`` to ``beta + phi``. Implemented
    entrywise, which is exact and avoids two matrix products.
    """
    u = np.asarray(u, dtype=complex)
    w = np.exp(1j * np.asarray(phi, dtype=float))
    shape = np.broadcast_shapes(u.shape[:-2], np.shape(w))
    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, 0] = u[..., 0, 0]
    out[..., 0, 1] = u[..., 0, 1] * w
    out[..., 1, 0] = u[..., 1, 0] * np.conj(w)
    out[..., 1, 1] = u[..., 1, 1]
    return out


def compose(mats) -> np.ndarray:
    """Time-ordered product of propagators given in the order they act.

    ``compose([U1, U2, U3])`` returns ``U3 @ U2 @ U1``.
    """
    mats = list(mats)
    if not mats:
        return np.eye(2, dtype=complex)
    out = mats[0]
    for m in mats[1:]:
        out = m @ out
    return out


def unitarity_defect(u: np.ndarray) -> float:
    """Largest entrywise deviation of ``u^dagger u`` from the identity."""
    u = np.asarray(u, dtype=complex)
    return float(np.max(np.abs(dagger(u) @ u - np.eye(2))))


def is_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    return unitarity_defect(u) <= tol


def extract_params(u: np.ndarray, tol: float = 1e-10) -> PulseParams:
    """Recover ``(epsilon, alpha, beta)`` from a 2x2 unitary.

    The global phase is removed by dividing by a square root of the
    determinant, leaving an SU(2) matrix ``[[a, b], [-b*, a*]]``; then
    ``epsilon = |a|``, ``alpha = arg a`` and ``beta = arg b``. The choice of
    square-root branch only adds ``pi`` to both phases, i.e. a global sign.

    Raises
    ------
    ValueError
        If ``u`` is not unitary to within ``tol``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    defect = unitarity_defect(u)
    if defect > tol:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
    v = u / np.sqrt(np.linalg.det(u))
    a, b = v[0, 0], v[0, 1]
    # renormalise so that |b| = 0 gives epsilon = 1 exactly
    eps = min(abs(a) / np.hypot(abs(a), abs(b)), 1.0)
    alpha = float(np.angle(a)) if eps >= _EPS_FLOOR else 0.0
    beta = float(np.angle(b)) if abs(b) >= _EPS_FLOOR else 0.0
    return PulseParams(float(eps), alpha, beta)


def transition_probability(u: np.ndarray):
    """``1 - |u11|^2``, elementwise over leading axes."""
    u = np.asarray(u)
    return 1.0 - np.abs(u[..., 0, 0]) ** 2


def apply(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Propagate state vectors: ``c(t_f) = U c(t_i)``."""
    return np.einsum("...ij,...j->...i", u, state)


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    """True if ``u = e^{i g} v`` for some real ``g`` within ``tol`` entrywise."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.trace(dagger(v) @ u)
    if abs(overlap) < 1e-300:
        return False
    g = overlap / abs(overlap)
    return bool(np.max(np.abs(u - g * v)) <= tol)

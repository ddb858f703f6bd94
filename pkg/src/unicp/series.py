"""
Power-series analysis of the composite propagator in the error amplitude.

Only the relative phase rotations between pulses matter for population
transfer. With ``U0 = U(0, 0)`` and ``R(x) = exp(-i x sigma_z / 2)`` the
composite propagator reduces (up to outer phase rotations) to

    U~ = U0 R(chi_{n-2} + a~) U0 ... U0 R(chi_1 + a~) U0 R(a~) U0,

where ``chi_k = Phi_1 + ... + Phi_k`` and ``a~ = phi2 - 2 alpha``. Its (1,1)
entry is a polynomial in ``eps`` whose coefficients are finite sums of
half-integer harmonics ``e^{i m a~ / 2}``. :func:`expand_u11` computes that
expansion exactly (the a~ dependence is symbolic, not sampled).

Universality to order ``j0`` means every harmonic of every coefficient with
``j <= j0`` vanishes, so that the infidelity scales as ``eps^(2 j0 + 2)`` for
any value of ``alpha``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from . import su2
from .errors import ResourceLimitError
from .sequences import (
    CompositeSequence,
    PhaseLaw,
    compose_phases,
    format_pi_tuple,
    snap,
)

MAX_TRUNCATION = 32
PRUNE_TOL = 1e-14
UNIVERSAL_TOL = 1e-10
TWO_PI = 2.0 * np.pi


def default_truncation(j0: int) -> int:
    return 2 * j0 + 3


# --------------------------------------------------------------------------
# Truncated polynomials in eps with harmonic coefficients


class HarmonicPolynomial:
    """Truncated series ``sum_j sum_h A[j, h] eps^j exp(i h a~ / 2)``.

    Harmonic indices ``h`` are doubled integers so half-integer harmonics
    stay exact. Coefficients are stored densely: ``coeffs[j, c]`` belongs to
    harmonic ``h = hmin + c``. Everything above ``truncation`` is dropped.
    """

    __slots__ = ("coeffs", "hmin")

    def __init__(self, coeffs, hmin: int = 0):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim != 2:
            raise ValueError("coefficient array must be 2-D (order x harmonic)")
        self.hmin = int(hmin)

    # construction ----------------------------------------------------------

    @classmethod
    def zero(cls, truncation: int):
        return cls(np.zeros((truncation + 1, 1)), 0)

    @classmethod
    def constant(cls, value, truncation: int):
        c = np.zeros((truncation + 1, 1), dtype=complex)
        c[0, 0] = value
        return cls(c, 0)

    @classmethod
    def epsilon(cls, truncation: int):
        c = np.zeros((truncation + 1, 1), dtype=complex)
        if truncation >= 1:
            c[1, 0] = 1.0
        return cls(c, 0)

    @classmethod
    def sqrt_one_minus_eps2(cls, truncation: int):
        """Binomial series of ``sqrt(1 - eps^2)`` up to ``eps^truncation``."""
        return cls(_sqrt_series(truncation)[:, None], 0)

    @classmethod
    def from_terms(cls, terms: dict, truncation: int):
        """Build from ``{(j, h): amplitude}``."""
        if not terms:
            return cls.zero(truncation)
        hs = [h for (_, h) in terms]
        hmin, hmax = min(hs), max(hs)
        c = np.zeros((truncation + 1, hmax - hmin + 1), dtype=complex)
        for (j, h), a in terms.items():
            if j <= truncation:
                c[j, h - hmin] += a
        return cls(c, hmin)

    # bookkeeping -----------------------------------------------------------

    @property
    def truncation(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def hmax(self) -> int:
        return self.hmin + self.coeffs.shape[1] - 1

    def terms(self) -> dict:
        """Sparse view ``{(j, h): amplitude}`` with tiny amplitudes pruned."""
        j, c = np.nonzero(np.abs(self.coeffs) > PRUNE_TOL)
        return {(int(a), int(b) + self.hmin): complex(self.coeffs[a, b]) for a, b in zip(j, c)}

    def coefficient(self, j: int) -> dict:
        """Harmonic content ``{h: amplitude}`` of the ``eps^j`` coefficient."""
        return {h: a for (jj, h), a in self.terms().items() if jj == j}

    def _widened(self, hmin, hmax):
        c = np.zeros((self.coeffs.shape[0], hmax - hmin + 1), dtype=complex)
        off = self.hmin - hmin
        c[:, off:off + self.coeffs.shape[1]] = self.coeffs
        return c

    def _aligned(self, other):
        if self.truncation != other.truncation:
            raise ValueError("truncation orders differ")
        lo, hi = min(self.hmin, other.hmin), max(self.hmax, other.hmax)
        return self._widened(lo, hi), other._widened(lo, hi), lo

    # arithmetic ------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, HarmonicPolynomial):
            return self + HarmonicPolynomial.constant(other, self.truncation)
        a, b, lo = self._aligned(other)
        return HarmonicPolynomial(a + b, lo)

    __radd__ = __add__

    def __neg__(self):
        return HarmonicPolynomial(-self.coeffs, self.hmin)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, HarmonicPolynomial):
            return HarmonicPolynomial(self.coeffs * other, self.hmin)
        if self.truncation != other.truncation:
            raise ValueError("truncation orders differ")
        # one Toeplitz product in eps per harmonic of the narrower factor
        a, b = (self, other) if self.coeffs.shape[1] >= other.coeffs.shape[1] else (other, self)
        width = a.coeffs.shape[1] + b.coeffs.shape[1] - 1
        out = np.zeros((a.coeffs.shape[0], width), dtype=complex)
        for col in range(b.coeffs.shape[1]):
            col_vals = b.coeffs[:, col]
            if not np.any(col_vals):
                continue
            out[:, col:col + a.coeffs.shape[1]] += _toeplitz(col_vals) @ a.coeffs
        return HarmonicPolynomial(out, a.hmin + b.hmin)

    __rmul__ = __mul__

    def times_harmonic(self, h: int, amplitude: complex = 1.0):
        """Multiply by ``amplitude * exp(i h a~ / 2)``."""
        return HarmonicPolynomial(self.coeffs * amplitude, self.hmin + h)

    def times_epsilon(self):
        c = np.zeros_like(self.coeffs)
        c[1:] = self.coeffs[:-1]
        return HarmonicPolynomial(c, self.hmin)

    # evaluation ------------------------------------------------------------

    def coefficient_values(self, j: int, alpha_tilde) -> np.ndarray:
        """``c_j(a~)`` evaluated on an array of ``a~``."""
        at = np.asarray(alpha_tilde, float)
        h = np.arange(self.hmin, self.hmax + 1)
        return np.exp(0.5j * at[..., None] * h) @ self.coeffs[j]

    def __call__(self, eps, alpha_tilde):
        eps = np.asarray(eps, float)
        at = np.asarray(alpha_tilde, float)
        eps, at = np.broadcast_arrays(eps, at)
        h = np.arange(self.hmin, self.hmax + 1)
        j = np.arange(self.truncation + 1)
        powers = eps[..., None] ** j
        harm = np.exp(0.5j * at[..., None] * h)
        return np.einsum("...j,jh,...h->...", powers, self.coeffs, harm)

    def max_harmonic(self, j: int) -> float:
        if j > self.truncation or j < 0:
            return 0.0
        return float(np.max(np.abs(self.coeffs[j])))

    def max_over_alpha(self, j: int, grid: int = 2048) -> float:
        """``max_{a~} |c_j(a~)|``; dense grid then bounded refinement."""
        if j > self.truncation or not np.any(np.abs(self.coeffs[j]) > PRUNE_TOL):
            return 0.0
        period = 4.0 * np.pi
        at = np.linspace(0.0, period, grid, endpoint=False)
        vals = np.abs(self.coefficient_values(j, at))
        k = int(np.argmax(vals))
        width = period / grid
        res = minimize_scalar(
            lambda x: -abs(self.coefficient_values(j, np.array([x]))[0]),
            bounds=(at[k] - width, at[k] + width),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return float(max(vals[k], -res.fun))

    def __repr__(self):
        return f"HarmonicPolynomial(truncation={self.truncation}, terms={len(self.terms())})"


def _sqrt_series(truncation):
    s = np.zeros(truncation + 1)
    c = 1.0
    for k in range(truncation // 2 + 1):
        s[2 * k] = c
        c *= (k - 0.5) / (k + 1)
    return s


def _toeplitz(col):
    """Lower-triangular Toeplitz matrix: multiplication by a series in eps."""
    m = len(col)
    t = np.zeros((m, m), dtype=complex)
    for k in range(m):
        t[np.arange(k, m), np.arange(0, m - k)] = col[k]
    return t


# --------------------------------------------------------------------------
# Phase bookkeeping


@dataclass(frozen=True)
class ChiPhases:
    """Cumulative sums ``chi_k = Phi_1 + ... + Phi_k`` (radians, mod 2 pi)."""

    chi: tuple

    @classmethod
    def from_big_phi(cls, big_phi):
        return cls(tuple(float(x) for x in np.mod(np.cumsum(big_phi), TWO_PI)))

    def to_big_phi(self) -> tuple:
        chi = np.asarray(self.chi, float)
        return tuple(float(x) for x in np.mod(np.diff(chi, prepend=0.0), TWO_PI))


# --------------------------------------------------------------------------
# Expansion


def expand_u11(big_phi, truncation: int = 7, max_truncation: int = MAX_TRUNCATION) -> HarmonicPolynomial:
    """Series of the reduced composite ``U11`` in eps with exact a~ harmonics.

    Parameters
    ----------
    big_phi : sequence of float
        Second-difference phases ``Phi_1 .. Phi_{n-2}`` in radians.
    truncation : int
        Highest power of eps kept.

    Raises
    ------
    ResourceLimitError
        If ``truncation`` exceeds ``max_truncation``.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if truncation > max_truncation:
        raise ResourceLimitError(f"truncation {truncation} exceeds cap {max_truncation}")
    chi = np.concatenate([[0.0], np.cumsum(np.asarray(big_phi, float))])
    n = len(chi) + 1
    J = truncation
    W = 2 * (n - 1) + 1
    # column vector U0 @ e1 = (eps, -s); rows: component, eps power, harmonic
    s_mat = _toeplitz(_sqrt_series(J))
    v = np.zeros((2, J + 1, W), dtype=complex)
    mid = n - 1
    v[0, 1, mid] = 1.0
    v[1, :, mid] = -_sqrt_series(J)
    for x in chi:
        # R(x + a~): top row gains e^{-i x/2} and harmonic -1, bottom e^{+i x/2}, +1
        top = np.zeros_like(v[0])
        bot = np.zeros_like(v[1])
        top[:, :-1] = v[0][:, 1:] * np.exp(-0.5j * x)
        bot[:, 1:] = v[1][:, :-1] * np.exp(0.5j * x)
        # U0 = [[eps, s], [-s, eps]]
        eps_top = np.zeros_like(top)
        eps_bot = np.zeros_like(bot)
        eps_top[1:] = top[:-1]
        eps_bot[1:] = bot[:-1]
        v = np.stack([eps_top + s_mat @ bot, -(s_mat @ top) + eps_bot])
    return HarmonicPolynomial(v[0], -(n - 1))


def reduced_u11(big_phi, eps, alpha_tilde) -> np.ndarray:
    """Direct matrix product for the reduced ``U11`` (no series truncation)."""
    chi = np.concatenate([[0.0], np.cumsum(np.asarray(big_phi, float))])
    eps, at = np.broadcast_arrays(np.asarray(eps, float), np.asarray(alpha_tilde, float))
    u0 = su2.propagator(eps, 0.0, 0.0)
    out = u0
    for x in chi:
        out = u0 @ su2.phase_rotation(x + at) @ out
    return out[..., 0, 0]


# --------------------------------------------------------------------------
# Universality check


@dataclass
class UniversalityReport:
    n: int
    claimed_j0: int
    j0_achieved: int
    residuals: list
    minimized_first_order: float
    leading_order: int
    passed: bool
    tolerance: float = UNIVERSAL_TOL

    def to_text(self) -> str:
        lines = [
            f"n: {self.n}",
            f"claimed_j0: {self.claimed_j0}",
            f"j0_achieved: {self.j0_achieved}",
            f"leading_order: {self.leading_order}",
            f"minimized_first_order: {self.minimized_first_order:.12g}",
            f"tolerance: {self.tolerance:g}",
        ]
        lines += [f"residual[{j}]: {r:.3e}" for j, r in self.residuals]
        lines.append(f"passed: {'yes' if self.passed else 'no'}")
        return "\n".join(lines) + "\n"


def verify_universal(big_phi, claimed_j0: int, tolerance: float = UNIVERSAL_TOL,
                     truncation: int | None = None) -> UniversalityReport:
    """Check that all series coefficients up to ``claimed_j0`` vanish.

    For three pulses nothing can be nullified; there the check is that the
    first-order coefficient reaches its analytic floor ``max |c_1| = 1``.
    """
    big_phi = [float(x) for x in big_phi]
    n = len(big_phi) + 2
    J = truncation if truncation is not None else default_truncation(max(claimed_j0, 0))
    J = max(J, claimed_j0 + 1)
    poly = expand_u11(big_phi, J)
    residuals = [(j, poly.max_harmonic(j)) for j in range(J + 1)]
    achieved = -1
    for j, r in residuals:
        if r >= tolerance:
            break
        achieved = j
    leading = achieved + 1
    leading_mag = poly.max_over_alpha(leading) if leading <= J else 0.0
    passed = all(r < tolerance for j, r in residuals if j <= claimed_j0)
    if n == 3:
        passed = passed and leading == 1 and abs(leading_mag - 1.0) < tolerance
    return UniversalityReport(n, claimed_j0, achieved, residuals, leading_mag, leading,
                              passed, tolerance)


# --------------------------------------------------------------------------
# Brute-force oracle


def worst_infidelity(seq: CompositeSequence, eps, alpha_points: int = 721) -> np.ndarray:
    """``max_alpha |U11|^2`` of the composite for each eps (beta drops out)."""
    eps = np.atleast_1d(np.asarray(eps, float))
    alpha = np.linspace(0.0, TWO_PI, alpha_points)
    u = su2.propagator(eps[:, None], alpha[None, :], 0.0)
    comp = compose_phases(u, seq.radians)
    return np.max(np.abs(comp[..., 0, 0]) ** 2, axis=1)


def oracle_scaling(seq: CompositeSequence, eps_grid, alpha_points: int = 721) -> float:
    """Log-log slope of worst-case infidelity against eps.

    Returns ``inf`` when the infidelity is zero on the whole grid.
    """
    eps = np.asarray(eps_grid, float)
    if eps.size < 4:
        raise ValueError("need at least 4 eps values")
    if np.any(eps <= 0):
        raise ValueError("eps values must be positive")
    infid = worst_infidelity(seq, eps, alpha_points)
    if np.all(infid == 0):
        return math.inf
    keep = infid > 0
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(infid[keep]), 1)
    return float(slope)


def phi2_alpha_equivalence(law: PhaseLaw, samples: int = 1000, rng_seed: int = 0) -> float:
    """Max deviation between shifting phi2 by d and shifting alpha by -d/2.

    Random ``(eps, alpha, beta, d)``; compares ``|U11|`` of the two composite
    propagators built by direct matrix products.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    eps = rng.uniform(0.0, 1.0, samples)
    alpha = rng.uniform(0.0, TWO_PI, samples)
    beta = rng.uniform(0.0, TWO_PI, samples)
    d = rng.uniform(-np.pi, np.pi, samples)
    phi2 = float(law.phi2) * np.pi
    big_phi = np.pi * np.array([float(x) for x in law.big_phi])
    base = _law_phases(big_phi, 0.0)
    k = np.arange(law.n)
    ph_a = base + k * (phi2 + d[:, None])
    ph_b = base + k * phi2
    ua = compose_phases(su2.propagator(eps, alpha, beta), ph_a)
    ub = compose_phases(su2.propagator(eps, alpha - d / 2, beta), np.broadcast_to(ph_b, ph_a.shape))
    return float(np.max(np.abs(np.abs(ua[:, 0, 0]) - np.abs(ub[:, 0, 0]))))


def _law_phases(big_phi, phi2):
    """Float version of the phase law (radians, not reduced)."""
    n = len(big_phi) + 2
    out = np.zeros(n)
    for k in range(1, n + 1):
        out[k - 1] = (k - 1) * phi2 + sum((k - l - 1) * big_phi[l - 1] for l in range(1, k - 1))
    return out


# --------------------------------------------------------------------------
# Phase search


@dataclass
class Candidate:
    big_phi: tuple
    residual: float
    leading_magnitude: float

    @property
    def big_phi_pi(self) -> tuple:
        return tuple(snap(x / np.pi) for x in self.big_phi)

    def label(self) -> str:
        return format_pi_tuple(self.big_phi_pi)


@dataclass
class SearchResult:
    n: int
    target_j0: int
    candidates: list = field(default_factory=list)
    best_residual: float = math.inf
    restarts: int = 0


def _expand_free(x, n, anagram):
    m = n - 2
    if not anagram:
        return np.asarray(x)
    half = m // 2
    return np.concatenate([x, x[:half][::-1]])


def _objective(full_phi, target_j0, weight, truncation):
    poly = expand_u11(full_phi, truncation)
    c = poly.coeffs
    null = float(np.sum(np.abs(c[: target_j0 + 1]) ** 2))
    lead = float(np.sum(np.abs(c[target_j0 + 1]) ** 2)) if target_j0 + 1 <= truncation else 0.0
    return null, lead


def _pattern_search(f, x0, step0=np.pi / 4, step_min=1e-13, max_evals=20000):
    """Compass search on 2 pi-periodic coordinates."""
    x = np.mod(np.array(x0, float), TWO_PI)
    fx = f(x)
    step = step0
    evals = 1
    d = len(x)
    while step > step_min and evals < max_evals:
        improved = False
        for i in range(d):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] = (y[i] + sgn * step) % TWO_PI
                fy = f(y)
                evals += 1
                if fy < fx:
                    x, fx = y, fy
                    improved = True
                    break
        if not improved:
            step *= 0.5
    return x, fx


def _single_restart(args):
    x0, n, target_j0, anagram, weight, truncation = args

    def weighted(x):
        null, lead = _objective(_expand_free(x, n, anagram), target_j0, weight, truncation)
        return null + weight * lead

    def null_only(x):
        return _objective(_expand_free(x, n, anagram), target_j0, weight, truncation)[0]

    x, _ = _pattern_search(weighted, x0)
    # second pass lands exactly on the nullification set near the weighted optimum
    x, _ = _pattern_search(null_only, x, step0=1e-3)
    full = _expand_free(x, n, anagram)
    poly = expand_u11(full, truncation)
    residual = max(poly.max_harmonic(j) for j in range(target_j0 + 1))
    return full, residual


def canonicalize(big_phi, tol: float = 1e-6) -> tuple:
    """Representative under global sign flip and order reversal.

    The lexicographically smallest member of the four-element orbit, compared
    on a ``tol`` lattice so that numerically equal tuples tie.
    """

    def wrap(v):
        v = np.mod(v, TWO_PI)
        v[np.abs(v - TWO_PI) < tol] = 0.0
        return v

    x = wrap(np.asarray(big_phi, float))
    orbit = [x, wrap(-x), x[::-1].copy(), wrap(-x)[::-1].copy()]
    best = min(orbit, key=lambda v: tuple(np.round(v / tol)))
    return tuple(float(v) for v in best)


def _periodic_close(a, b, tol):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b) + np.pi, TWO_PI) - np.pi)
    return bool(np.all(d < tol))


def search_phases(
    n: int,
    target_j0: int,
    anagram: bool = True,
    restarts: int = 64,
    rng_seed: int = 0,
    weight: float = 1e-3,
    tolerance: float = 1e-9,
    workers: int = 1,
) -> SearchResult:
    """Multi-start search for second-difference phases nullifying orders <= j0.

    Minimises ``sum_{j<=j0} sum_h |A_jh|^2 + weight * sum_h |A_{j0+1,h}|^2``
    by compass search from scrambled Sobol starting points, then re-converges
    on the nullification term alone. Candidates are canonicalised and
    de-duplicated; the result is deterministic for a fixed seed and does not
    depend on ``workers``.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError("n must be odd and >= 3")
    if target_j0 < 0:
        raise ValueError("target_j0 must be >= 0")
    m = n - 2
    dim = (m + 1) // 2 if anagram else m
    truncation = default_truncation(target_j0)
    sobol = qmc.Sobol(dim, scramble=True, seed=rng_seed)
    starts = sobol.random_base2(max(0, math.ceil(math.log2(max(restarts, 1)))))[:restarts]
    starts = starts * TWO_PI
    jobs = [(x0, n, target_j0, anagram, weight, truncation) for x0 in starts]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_single_restart, jobs))
    else:
        results = [_single_restart(j) for j in jobs]

    out = SearchResult(n, target_j0, restarts=restarts)
    out.best_residual = min(r for _, r in results)
    kept = []
    for full, residual in results:
        if residual >= tolerance:
            continue
        canon = canonicalize(full)
        for c in kept:
            if _periodic_close(c.big_phi, canon, 1e-6):
                if residual < c.residual:
                    c.residual = residual
                break
        else:
            lead = expand_u11(canon, truncation).max_over_alpha(target_j0 + 1)
            kept.append(Candidate(canon, residual, lead))
    kept.sort(key=lambda c: (c.residual, c.big_phi))
    out.candidates = kept
    return out

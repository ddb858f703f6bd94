"""
Phase laws, the catalog of universal sequences, and composite propagators.

Phases here are stored as multiples of pi: a :class:`fractions.Fraction`
when the value is rational (everything built from the catalog or from
degrees on the command line), otherwise a float. Conversion to radians only
happens when a propagator is assembled, which keeps catalog phases exact.

A sequence of ``n`` identical pulses with drive phases ``phi_1 .. phi_n`` is
characterised by the free first difference ``phi2 = phi_2 - phi_1`` and the
second differences ``Phi_k = phi_{k+2} - 2 phi_{k+1} + phi_k``; with the gauge
``phi_1 = 0`` the phases follow as

    phi_k = (k - 1) phi2 + sum_{l < k} (k - l - 1) Phi_l.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path

import numpy as np

from . import dynamics, su2
from .errors import DomainError, UnknownSequenceError

PI = "π"


# --------------------------------------------------------------------------
# Multiples of pi


def from_degrees(deg) -> Fraction:
    """Exact multiple of pi for an angle in degrees (``165 -> 11/12``)."""
    if isinstance(deg, float):
        deg = repr(deg)
    return Fraction(deg) / 180


def to_degrees(x) -> float:
    return float(x) * 180.0


def reduce_mod2(x):
    """Reduce a multiple of pi into ``[0, 2)``."""
    if isinstance(x, Fraction) or isinstance(x, int):
        return Fraction(x) % 2
    r = math.fmod(float(x), 2.0)
    r = r + 2.0 if r < 0 else r
    return 0.0 if r == 2.0 else r


def snap(x, max_denominator: int = 96, tol: float = 1e-9):
    """Return ``x`` as a Fraction if it lies within ``tol`` of one."""
    if isinstance(x, Fraction):
        return x
    f = Fraction(float(x)).limit_denominator(max_denominator)
    return f if abs(float(f) - float(x)) <= tol else float(x)


_PI_RE = re.compile(
    r"^\s*(?P<sign>[-+]?)\s*(?P<num>[0-9.]*(?:/[0-9]+)?)\s*(?P<pi>π)?\s*(?:/\s*(?P<den>[0-9]+))?\s*$"
)


def parse_pi(text: str):
    """Parse a multiple of pi such as ``"2/3π"``, ``"π/2"``, ``"-π"``, ``"0.25pi"``.

    A bare number without the pi symbol is read as a multiple of pi too.
    """
    s = str(text).replace("pi", PI).replace("Pi", PI).replace("*", "")
    m = _PI_RE.match(s)
    if not m or (not m.group("num") and not m.group("pi")):
        raise ValueError(f"cannot parse multiple of pi: {text!r}")
    num = m.group("num") or "1"
    val = Fraction(num) if "." not in num else snap(float(num), 10**6, 1e-15)
    if m.group("den"):
        val = val / int(m.group("den"))
    return -val if m.group("sign") == "-" else val


def format_pi(x) -> str:
    """Inverse of :func:`parse_pi` for exact values; floats keep 15 digits."""
    if not isinstance(x, Fraction):
        return f"{float(x):.15g}{PI}"
    if x == 0:
        return "0"
    num = "" if abs(x.numerator) == 1 else str(abs(x.numerator))
    sign = "-" if x < 0 else ""
    if x.denominator == 1:
        return f"{sign}{num}{PI}"
    return f"{sign}{num or '1'}/{x.denominator}{PI}"


def format_pi_tuple(values) -> str:
    """Table-style rendering, e.g. ``(0,5,2,5,0)π/6``."""
    vals = list(values)
    if all(isinstance(v, Fraction) for v in vals):
        den = reduce(math.lcm, (v.denominator for v in vals), 1)
        nums = ",".join(str(int(v * den)) for v in vals)
        return f"({nums}){PI}" if den == 1 else f"({nums}){PI}/{den}"
    return "(" + ",".join(f"{float(v):.12g}" for v in vals) + f"){PI}"


def parse_pi_tuple(text: str):
    """Parse ``(a,b,c)π/d`` or a comma-separated list of multiples of pi."""
    s = text.strip().replace("pi", PI)
    m = re.match(r"^\((?P<body>[^)]*)\)\s*(?P<pi>π)?\s*(?:/\s*(?P<den>\d+))?$", s)
    if m:
        den = int(m.group("den") or 1)
        return tuple(parse_pi(v) / den for v in m.group("body").split(","))
    return tuple(parse_pi(v) for v in s.split(","))


def _same_mod2(a, b, tol=1e-12) -> bool:
    r = float(reduce_mod2(a - b))
    return min(r, 2.0 - r) <= tol


def _radians(values) -> np.ndarray:
    return np.pi * np.array([float(v) for v in values], dtype=float)


# --------------------------------------------------------------------------
# Laws and sequences


@dataclass(frozen=True)
class PhaseLaw:
    """Control parameters of a universal sequence, in multiples of pi.

    ``big_phi`` holds the ``n - 2`` second differences, ``phi2`` the free
    first difference.
    """

    big_phi: tuple
    phi2: object = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "big_phi", tuple(self.big_phi))
        if len(self.big_phi) < 1:
            raise DomainError("a phase law needs n >= 3 pulses")

    @property
    def n(self) -> int:
        return len(self.big_phi) + 2

    @property
    def is_anagram(self) -> bool:
        """True if ``Phi_k = Phi_{n-k-1}`` for all k (mod 2 pi)."""
        m = len(self.big_phi)
        return all(_same_mod2(self.big_phi[k], self.big_phi[m - 1 - k]) for k in range(m))

    def with_phi2(self, phi2) -> "PhaseLaw":
        return PhaseLaw(self.big_phi, phi2)

    @classmethod
    def from_radians(cls, big_phi, phi2=0.0) -> "PhaseLaw":
        return cls(tuple(snap(v / np.pi) for v in big_phi), snap(phi2 / np.pi))


@dataclass(frozen=True)
class CompositeSequence:
    """Per-pulse drive phases in multiples of pi, gauge ``phases[0] = 0``."""

    phases: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise DomainError("a sequence needs at least one pulse")

    @property
    def n(self) -> int:
        return len(self.phases)

    @property
    def radians(self) -> np.ndarray:
        return _radians(self.phases)

    @property
    def big_phi(self) -> tuple:
        """Second differences of the phases, reduced mod 2 pi."""
        p = self.phases
        return tuple(reduce_mod2(p[k + 2] - 2 * p[k + 1] + p[k]) for k in range(len(p) - 2))

    def law(self) -> PhaseLaw:
        return PhaseLaw(self.big_phi, reduce_mod2(self.phases[1] - self.phases[0]))

    def shifted(self, c) -> "CompositeSequence":
        """All phases shifted by ``c`` (not re-gauged)."""
        return CompositeSequence(tuple(reduce_mod2(p + c) for p in self.phases), self.name)

    def regauged(self) -> "CompositeSequence":
        return self.shifted(-self.phases[0])

    def __str__(self):
        return format_pi_tuple(self.phases)


def phases_from_law(law: PhaseLaw, name: str = "") -> CompositeSequence:
    """Per-pulse phases from the second differences and ``phi2``."""
    phases = []
    for k in range(1, law.n + 1):
        acc = (k - 1) * law.phi2
        for l in range(1, k - 1):
            acc = acc + (k - l - 1) * law.big_phi[l - 1]
        phases.append(reduce_mod2(acc))
    return CompositeSequence(tuple(phases), name)


def reflect(seq: CompositeSequence) -> CompositeSequence:
    """Sign-flip all phases; mirrors the excitation profile about zero detuning."""
    base = seq.regauged()
    name = f"reflect({seq.name})" if seq.name else ""
    return CompositeSequence(tuple(reduce_mod2(-p) for p in base.phases), name)


def reverse(seq: CompositeSequence) -> CompositeSequence:
    """Reverse pulse order and re-gauge; has the same effect as :func:`reflect`."""
    return CompositeSequence(tuple(reversed(seq.phases)), seq.name).regauged()


# --------------------------------------------------------------------------
# Catalog


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    big_phi: tuple
    named_variants: dict
    j0: int

    @property
    def n(self) -> int:
        return len(self.big_phi) + 2

    def law(self, phi2=Fraction(0)) -> PhaseLaw:
        return PhaseLaw(self.big_phi, phi2)


def _entry(name, nums, den, variants, j0):
    return CatalogEntry(
        name,
        tuple(Fraction(v, den) for v in nums),
        {k: from_degrees(v) for k, v in variants.items()},
        j0,
    )


CATALOG = {
    e.name: e
    for e in (
        _entry("U3", (1,), 1, {"a": 90, "b": 0}, 0),
        _entry("U5", (2, 3, 2), 3, {"a": 150, "b": 330}, 2),
        _entry("U7", (6, 4, 5, 4, 6), 6, {"a": 165, "b": 345}, 2),
        _entry("U13", (12, 16, 14, 16, 16, 11, 16, 16, 14, 16, 12), 12,
               {"a": "67.5", "b": "247.5"}, 4),
        _entry("U25", (2, 3, 2, 2, 3, 2, 3, 2, 4, 1, 2, 3, 2, 1, 4, 2, 3, 2, 3, 2, 2, 3, 2),
               3, {"a": 150, "b": 330}, 8),
    )
}


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownSequenceError(
            f"unknown sequence {name!r}; known: {', '.join(CATALOG)}"
        ) from None


def catalog_lookup(name: str, phi2=None) -> CompositeSequence:
    """Catalog sequence ``name`` with free phase ``phi2`` (multiple of pi).

    ``phi2`` may also be a variant label such as ``"a"`` or ``"b"``. The name
    ``"single"`` returns the one-pulse sequence.
    """
    if name in ("single", "U1"):
        return CompositeSequence((Fraction(0),), "single")
    entry = get_entry(name)
    if phi2 is None:
        phi2 = entry.named_variants["a"]
    elif isinstance(phi2, str):
        phi2 = entry.named_variants[phi2]
    label = f"{name}({to_degrees(phi2):g}°)"
    return phases_from_law(entry.law(phi2), label)


# --------------------------------------------------------------------------
# Composite propagators


def compose_phases(u: np.ndarray, phases) -> np.ndarray:
    """Composite of identical pulses ``u`` with drive phases in radians.

    ``phases`` has the pulses on its last axis; any leading axes broadcast
    against the batch axes of ``u``.
    """
    phases = np.asarray(phases, dtype=float)
    out = None
    for k in range(phases.shape[-1]):
        step = su2.shift_phase(u, phases[..., k])
        out = step if out is None else step @ out
    return out


def compose_sequence(seq: CompositeSequence, u: np.ndarray) -> np.ndarray:
    """Composite propagator from a single-pulse propagator array ``u``.

    ``u`` may carry leading batch axes; the result has the same shape.
    """
    return compose_phases(u, seq.radians)


def composite_propagator(seq: CompositeSequence, p: su2.PulseParams) -> np.ndarray:
    """``U(a, b + phi_n) ... U(a, b + phi_1)`` for the abstract pulse ``p``."""
    return compose_sequence(seq, su2.make_propagator(p))


def composite_physical_propagator(
    seq: CompositeSequence,
    pulse: dynamics.PulseSpec,
    tolerance: float = dynamics.DEFAULT_TOLERANCE,
) -> np.ndarray:
    """Composite propagator of contiguous identical physical pulses."""
    return compose_sequence(seq, dynamics.propagate(pulse, tolerance))


# --------------------------------------------------------------------------
# Sequence files
#
#   n=5
#   law: phi2=5/6π; Phi=2/3π,π,2/3π
# or
#   n=5
#   phases: 0,5/6π,1/3π,5/6π,0


def format_sequence_file(seq: CompositeSequence, law: PhaseLaw | None = None) -> str:
    lines = [f"n={seq.n}"]
    if law is not None:
        phis = ",".join(format_pi(v) for v in law.big_phi)
        lines.append(f"law: phi2={format_pi(law.phi2)}; Phi={phis}")
    else:
        lines.append("phases: " + ",".join(format_pi(v) for v in seq.phases))
    return "\n".join(lines) + "\n"


def write_sequence(path, seq: CompositeSequence, law: PhaseLaw | None = None):
    Path(path).write_text(format_sequence_file(seq, law))


def parse_sequence_text(text: str, source: str = "<string>"):
    """Parse sequence-file text into ``(sequence, law_or_None)``."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 2 or not lines[0].startswith("n="):
        raise ValueError(f"{source}: expected 'n=<int>' header followed by a body line")
    n = int(lines[0][2:])
    body = lines[1]
    if body.startswith("law:"):
        fields = {}
        for part in body[4:].split(";"):
            key, _, val = part.partition("=")
            fields[key.strip()] = val.strip()
        if "phi2" not in fields or "Phi" not in fields:
            raise ValueError(f"{source}: law line needs phi2= and Phi=")
        law = PhaseLaw(tuple(parse_pi(v) for v in fields["Phi"].split(",")), parse_pi(fields["phi2"]))
        if law.n != n:
            raise ValueError(f"{source}: header says n={n} but Phi has {len(law.big_phi)} entries")
        return phases_from_law(law, Path(source).stem), law
    if body.startswith("phases:"):
        phases = tuple(parse_pi(v) for v in body[7:].split(","))
        if len(phases) != n:
            raise ValueError(f"{source}: header says n={n} but {len(phases)} phases given")
        seq = CompositeSequence(tuple(reduce_mod2(p) for p in phases), Path(source).stem)
        if seq.phases[0] != 0:
            warnings.warn(f"{source}: first phase is not 0; re-gauging", stacklevel=2)
            seq = seq.regauged()
        return seq, None
    raise ValueError(f"{source}: body must start with 'law:' or 'phases:'")


def read_sequence(path):
    return parse_sequence_text(Path(path).read_text(), str(path))

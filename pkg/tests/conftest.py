from fractions import Fraction

import numpy as np
import pytest

from unicp import dynamics, scanner

# Reference phase rows: (group, Phi numerators, Phi denominator, phi2 [deg], phi_k numerators, phi_k denominator)
REFERENCE_ROWS = [
    ("U3", (1,), 1, "90", (0, 1, 0), 2),
    ("U3", (1,), 1, "0", (0, 0, 1), 1),
    ("U3", (1,), 1, "45", (0, 1, 6), 4),
    ("U3", (1,), 1, "135", (0, 3, 2), 4),
    ("U5", (2, 3, 2), 3, "150", (0, 5, 2, 5, 0), 6),
    ("U5", (2, 3, 2), 3, "330", (0, 11, 2, 11, 0), 6),
    ("U5", (2, 3, 2), 3, "180", (0, 3, 2, 4, 2), 3),
    ("U5", (2, 3, 2), 3, "0", (0, 0, 2, 1, 2), 3),
    ("U7", (6, 4, 5, 4, 6), 6, "165", (0, 11, 10, 17, 10, 11, 0), 12),
    ("U7", (6, 4, 5, 4, 6), 6, "345", (0, 23, 10, 5, 10, 23, 0), 12),
    ("U7", (6, 4, 5, 4, 6), 6, "180", (0, 6, 6, 10, 7, 8, 3), 6),
    ("U7", (6, 4, 5, 4, 6), 6, "0", (0, 0, 6, 4, 7, 2, 3), 6),
    ("U13", (12, 16, 14, 16, 16, 11, 16, 16, 14, 16, 12), 12, "67.5",
     (0, 9, 42, 11, 8, 37, 2, 37, 8, 11, 42, 9, 0), 24),
    ("U13", (12, 16, 14, 16, 16, 11, 16, 16, 14, 16, 12), 12, "247.5",
     (0, 33, 42, 35, 8, 13, 2, 13, 8, 35, 42, 33, 0), 24),
    ("U25", (2, 3, 2, 2, 3, 2, 3, 2, 4, 1, 2, 3, 2, 1, 4, 2, 3, 2, 3, 2, 2, 3, 2), 3, "150",
     (0, 5, 2, 5, 0, 11, 4, 1, 4, 11, 2, 7, 4, 7, 2, 11, 4, 1, 4, 11, 0, 5, 2, 5, 0), 6),
    ("U25", (2, 3, 2, 2, 3, 2, 3, 2, 4, 1, 2, 3, 2, 1, 4, 2, 3, 2, 3, 2, 2, 3, 2), 3, "330",
     (0, 11, 2, 11, 0, 5, 4, 7, 4, 5, 2, 1, 4, 1, 2, 5, 4, 7, 4, 5, 0, 11, 2, 11, 0), 6),
]

REFERENCE_IDS = [f"{r[0]}({r[3]})" for r in REFERENCE_ROWS]


def table_phases(row):
    return tuple(Fraction(v, row[5]) % 2 for v in row[4])


def table_big_phi(row):
    return tuple(Fraction(v, row[2]) for v in row[1])


def rabi_formula(omega, delta, t):
    """Closed-form generalized Rabi transition probability."""
    w = np.hypot(omega, delta)
    return (omega / w) ** 2 * np.sin(0.5 * w * t) ** 2


@pytest.fixture(scope="session")
def default_axes_grid():
    return scanner.default_grid()


@pytest.fixture
def pi_pulse():
    omega = 2 * np.pi * 50e3
    return dynamics.PulseSpec(omega_peak=omega, duration=np.pi / omega)


# acceptance lines, printed once at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

import math

import numpy as np
import pytest

from slowsid import MultisineSignal, SamplingGrid
from slowsid.experiments import nonparametric_study_input, parametric_study_input, rao_garnier

_acceptance_lines = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, passed, detail=""):
        _acceptance_lines.append(
            f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
            + (f" -- {detail}" if detail else "")
        )
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rg():
    return rao_garnier()


@pytest.fixture
def input_a():
    return nonparametric_study_input()


@pytest.fixture
def input_b():
    return parametric_study_input()


def aligned_input(bins, count, h, dc=1.0, amplitudes=1.0, phases=None):
    """Multisine whose tones sit exactly on DFT bins of an ``N``-sample record."""
    spacing = 2 * math.pi / (count * h)
    w = np.asarray(bins, float) * spacing
    if phases is None:
        phases = np.linspace(0.3, 5.0, len(w))
    return MultisineSignal.from_arrays(dc, amplitudes, w, phases), SamplingGrid(h, count)

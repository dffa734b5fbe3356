import numpy as np
import pytest
from hypothesis import strategies as st

from fplab.spectrum import make_spectrum, monodisperse
from fplab.transforms import build_bundle


@pytest.fixture(scope="session")
def mono():
    return build_bundle(monodisperse(1.0))


@pytest.fixture(scope="session")
def poly():
    return build_bundle(make_spectrum([(1, 0.5), (2, 0.25)]))


@st.composite
def finite_spectra(draw, max_size=12, max_terms=5, total=None):
    """Random finite-support spectra; ``total`` rescales m0 to at most that value."""
    ks = draw(st.lists(st.integers(1, max_size), min_size=1, max_size=max_terms, unique=True))
    vs = draw(st.lists(st.floats(0.01, 1.0), min_size=len(ks), max_size=len(ks)))
    vs = np.asarray(vs)
    if total is not None:
        vs = vs / vs.sum() * draw(st.floats(0.05, total))
    return make_spectrum(zip(ks, vs.tolist()))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from hsloc.symbol import SymbolPoly

PI_INTERVAL = (0.0, np.pi)


@pytest.fixture
def laplacian():
    return SymbolPoly.laplacian()


def _complex(bound: float):
    f = st.floats(-bound, bound, allow_nan=False, allow_infinity=False)
    return st.builds(complex, f, f)


@st.composite
def symbols(draw, max_order: int = 4, min_lead: float = 0.1, bound: float = 5.0):
    """Symbols of order 1..max_order with |a_m| >= min_lead."""
    m = draw(st.integers(1, max_order))
    coeffs = [draw(_complex(bound)) for _ in range(m)]
    lead = draw(_complex(bound))
    if abs(lead) < min_lead:
        lead = complex(min_lead, 0.0) if lead == 0 else lead / abs(lead) * min_lead
    return SymbolPoly(coeffs + [lead])


complex_values = _complex

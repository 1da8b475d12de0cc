import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from tpam import special


class TestBessel:
    xs = np.concatenate([[0.0, 1e-8, 0.5, 1.0, 2.0], np.linspace(3, 30, 28), [50.0, 200.0, 1e4, 1e6]])

    def test_i0e(self):
        np.testing.assert_allclose(special.i0e(self.xs), sp.i0e(self.xs), rtol=1e-13)

    def test_i1e(self):
        np.testing.assert_allclose(special.i1e(self.xs), sp.i1e(self.xs), rtol=1e-13, atol=1e-300)

    def test_ratio(self):
        x = self.xs[1:]
        np.testing.assert_allclose(special.bessel_ratio(x), sp.i1e(x) / sp.i0e(x), rtol=1e-12)

    def test_log_i0(self):
        x = np.array([0.1, 3.0, 40.0, 1e5])
        np.testing.assert_allclose(special.log_i0(x), np.log(sp.i0e(x)) + x, rtol=1e-13)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            special.i0e(-1.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 1e5))
    def test_ratio_bounded(self, x):
        r = float(special.bessel_ratio(x)) if x > 0 else 0.0
        assert 0 <= r < 1

import math

import numpy as np
import pytest

from nnmpc.errors import ArgumentError
from nnmpc.paths import PERIODIC_KINDS, PathParams, path_point, step_sequence


class TestInfinity:
    def test_offset_at_zero(self):
        p = PathParams(kind="infinity", A=2.0, B=3.0, C=4.0, omega=1.0, y0=[1.0, 2.0, 3.0])
        assert np.allclose(path_point(p, 0.0), [1.0, 2.0, 3.0], atol=1e-15)

    def test_quarter_period(self):
        p = PathParams(kind="infinity", A=2.0, B=3.0, C=4.0, omega=2.0, y0=[1.0, 2.0, 3.0])
        t = (math.pi / 2.0) / 2.0
        assert np.allclose(path_point(p, t), [3.0, 2.0, 7.0], atol=1e-12)


class TestPringle:
    def test_paraboloid_constraint(self, rng):
        p = PathParams(kind="pringle", A=1.5, B=2.0, C=3.0, omega=0.7, y0=[0.5, -1.0, 2.0])
        for t in rng.uniform(0, 30, size=50):
            y = path_point(p, float(t))
            lat1 = y[1] - p.y0[1]
            lat2 = y[2] - p.y0[2]
            expected = p.A * (lat2**2 / p.B**2 - lat1**2 / p.C**2) + p.y0[0]
            assert y[0] == pytest.approx(expected, rel=1e-12)

    def test_swirl_is_pringle_family(self, rng):
        kwargs = dict(A=1.0, B=2.0, C=2.0, omega=0.3, y0=[0.0, 0.0, 0.0])
        a = PathParams(kind="pringle", **kwargs)
        b = PathParams(kind="swirl", **kwargs)
        for t in rng.uniform(0, 10, size=10):
            assert np.array_equal(path_point(a, float(t)), path_point(b, float(t)))


class TestLine:
    def test_chirp_breaks_periodicity(self):
        p = PathParams(kind="line", A=1.0, B=2.0, C=2.0, omega=1.0, y0=[0.0, 0.0, 0.0])
        t = 1000.0
        period = 2.0 * math.pi / p.omega
        assert not np.allclose(path_point(p, t), path_point(p, t + period), atol=1e-9)

    def test_lateral_components_track_same_phase(self):
        p = PathParams(kind="line", A=1.0, B=2.0, C=4.0, omega=1.0, y0=[0.0, 0.0, 0.0])
        y = path_point(p, 0.37)
        assert y[2] / 4.0 == pytest.approx(y[1] / 2.0, rel=1e-12)


class TestPeriodicity:
    @pytest.mark.parametrize("kind", PERIODIC_KINDS)
    def test_period_is_two_pi_over_omega(self, kind, rng):
        p = PathParams(kind=kind, A=1.2, B=0.8, C=1.5, omega=0.9, y0=[0.1, 0.2, 0.3])
        period = 2.0 * math.pi / p.omega
        for t in rng.uniform(0, 20, size=20):
            assert np.allclose(
                path_point(p, float(t)), path_point(p, float(t) + period), atol=1e-9
            )


class TestStep:
    def test_single_level_constant(self):
        p = step_sequence([1.5], dwell=2.0)
        for t in (0.0, 1.0, 5.0, 100.0):
            assert np.array_equal(path_point(p, t), [1.5])

    def test_benchmark_schedule(self):
        p = step_sequence([0.5, 1.0, 2.0], dwell=20.0)
        assert path_point(p, 0.0)[0] == 0.5
        assert path_point(p, 19.999)[0] == 0.5
        assert path_point(p, 20.0)[0] == 1.0
        assert path_point(p, 39.999)[0] == 1.0
        assert path_point(p, 40.0)[0] == 2.0
        assert path_point(p, 1e6)[0] == 2.0

    def test_dwell_boundaries_half_open(self):
        p = step_sequence([0.0, 1.0], dwell=1.0)
        assert path_point(p, 1.0 - 1e-12)[0] == 0.0
        assert path_point(p, 1.0)[0] == 1.0

    def test_empty_levels_rejected(self):
        with pytest.raises(ArgumentError):
            step_sequence([], dwell=1.0)


class TestValidation:
    def test_unknown_kind(self):
        with pytest.raises(ArgumentError):
            PathParams(kind="zigzag")

    def test_nonpositive_omega_for_periodic(self):
        with pytest.raises(ArgumentError):
            PathParams(kind="infinity", omega=0.0)

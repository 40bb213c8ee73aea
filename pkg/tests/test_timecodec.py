import math
from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, strategies as st

from residentid.errors import DataError
from residentid.timecodec import (
    TimeComponents,
    cyclic_distance,
    encode_component,
    encode_timestamp,
    parse_timestamp,
)


class TestEncodeComponent:
    def test_weekday_example(self):
        # Thursday as the 3rd day (counting Monday = 0) of a 7-day week
        sin, cos = encode_component(3, 7)
        assert sin == pytest.approx(0.434, abs=1e-3)
        assert cos == pytest.approx(-0.901, abs=1e-3)

    def test_second_of_day_example(self):
        sin, cos = encode_component(54000, 86400)
        assert sin == pytest.approx(-0.707, abs=1e-3)
        assert cos == pytest.approx(-0.707, abs=1e-3)

    def test_day_of_year_example(self):
        sin, cos = encode_component(236, 365)
        assert sin == pytest.approx(-0.796, abs=1e-3)
        assert cos == pytest.approx(-0.605, abs=1e-3)

    def test_zero_maps_to_unit_cos(self):
        assert encode_component(0, 24) == (0.0, 1.0)
        assert encode_component(0, 7) == (0.0, 1.0)

    def test_t_max_aliases_zero(self):
        sin, cos = encode_component(86400, 86400)
        assert sin == pytest.approx(0.0, abs=1e-12)
        assert cos == pytest.approx(1.0, abs=1e-12)

    def test_invalid_t_max(self):
        with pytest.raises(ValueError):
            encode_component(1, 0)
        with pytest.raises(ValueError):
            encode_component(1, -7)

    @given(st.integers(min_value=0, max_value=10 ** 6), st.integers(min_value=1, max_value=86400))
    def test_unit_circle(self, t, t_max):
        sin, cos = encode_component(t, t_max)
        assert abs(sin * sin + cos * cos - 1.0) < 1e-9

    @given(st.integers(min_value=0, max_value=10 ** 6), st.integers(min_value=1, max_value=86400))
    def test_periodicity(self, t, t_max):
        a = encode_component(t, t_max)
        b = encode_component(t % t_max, t_max)
        assert a[0] == pytest.approx(b[0], abs=1e-9)
        assert a[1] == pytest.approx(b[1], abs=1e-9)

    @given(st.integers(min_value=8, max_value=100000))
    def test_wraparound_continuity(self, t_max):
        origin = encode_component(0, t_max)
        near = cyclic_distance(encode_component(t_max - 1, t_max), origin)
        far = cyclic_distance(encode_component(t_max // 2, t_max), origin)
        assert near < far


class TestEncodeTimestamp:
    def test_paper_worked_example(self):
        vec = encode_timestamp(datetime(2023, 8, 24, 15, 0, 0))
        expected = [-0.796, -0.605, 0.434, -0.901, -0.707, -0.707]
        assert np.allclose(vec, expected, atol=1e-3)

    def test_jan_first_monday(self):
        # 2018-01-01 was a Monday in a non-leap year
        vec = encode_timestamp(datetime(2018, 1, 1, 0, 0, 0))
        expected = [
            math.sin(2 * math.pi / 365),
            math.cos(2 * math.pi / 365),
            0.0,
            1.0,
            0.0,
            1.0,
        ]
        assert np.allclose(vec, expected, atol=1e-9)
        assert vec[0] == pytest.approx(0.0172, abs=1e-4)
        assert vec[1] == pytest.approx(0.99985, abs=1e-5)

    def test_same_second_of_day_across_days(self):
        a = encode_timestamp(datetime(2023, 3, 10, 8, 30, 0))
        b = encode_timestamp(datetime(2023, 3, 11, 8, 30, 0))
        assert np.allclose(a[4:], b[4:], atol=0)

    def test_string_input(self):
        vec = encode_timestamp("2023-08-24 15:00:00")
        assert vec.shape == (6,)

    def test_leap_year_uses_366(self):
        comp = TimeComponents.from_datetime(datetime(2020, 12, 31, 12, 0, 0))
        assert comp.days_in_year == 366
        assert comp.day_of_year == 366


class TestCyclicDistance:
    def test_paper_near_wraparound(self):
        d = cyclic_distance(encode_component(0, 24), encode_component(23, 24))
        assert d == pytest.approx(0.03407, abs=1e-3)

    def test_paper_far_apart(self):
        d = cyclic_distance(encode_component(0, 24), encode_component(15, 24))
        assert d == pytest.approx(1.7071, abs=1e-3)

    def test_identical_inputs(self):
        p = encode_component(12345, 86400)
        assert cyclic_distance(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cyclic_distance((0.0, 0.0), (0.0, 1.0))


class TestParseTimestamp:
    def test_full_format(self):
        assert parse_timestamp("2009-08-24 00:00:19") == datetime(2009, 8, 24, 0, 0, 19)

    def test_fractional_seconds(self):
        ts = parse_timestamp("2009-08-24 00:00:19.123456")
        assert ts.microsecond == 123456

    def test_iso_t_separator(self):
        assert parse_timestamp("2023-08-24T15:00:00") == datetime(2023, 8, 24, 15, 0, 0)

    def test_yearless_needs_default_year(self):
        assert parse_timestamp("08-24 00:00:19", default_year=2009) == datetime(
            2009, 8, 24, 0, 0, 19
        )
        with pytest.raises(DataError):
            parse_timestamp("08-24 00:00:19")

    def test_leap_day_with_leap_default_year(self):
        assert parse_timestamp("02-29 06:00:00", default_year=2008) == datetime(
            2008, 2, 29, 6, 0, 0
        )
        with pytest.raises(DataError):
            parse_timestamp("02-29 06:00:00", default_year=2009)

    def test_garbage_rejected(self):
        with pytest.raises(DataError):
            parse_timestamp("not-a-time")

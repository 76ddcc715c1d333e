from fractions import Fraction

import pytest

from retrospace.exceptions import DuplicateElementError, MissingElementError
from retrospace.models import INF, Point
from retrospace.services.oracle import NaiveTimeline, ref_shift, ref_shuffle, ref_z_sort


def test_ref_shuffle():
    assert ref_shuffle((1, 0), 1) == 0b10
    assert ref_shuffle((0, 1), 1) == 0b01
    assert ref_shuffle((3, 0), 2) == 0b1010
    assert ref_shuffle((5,), 3) == 5


def test_ref_shift():
    p = Point((0, 0), 4)
    assert ref_shift(p, 0) == ((0, 0), 4)
    assert ref_shift(p, 1) == ((5, 5), 5)
    assert ref_shift(p, 2) == ((10, 10), 5)


def test_ref_z_sort():
    points = [Point((1, 1), 1), Point((0, 1), 1), Point((1, 0), 1), Point((0, 0), 1)]
    assert ref_z_sort(points) == [Point((0, 0), 1), Point((0, 1), 1), Point((1, 0), 1), Point((1, 1), 1)]


@pytest.fixture
def timeline():
    timeline = NaiveTimeline()
    timeline.add(Point((10,), 8), 0, INF, 0)
    timeline.add(Point((14,), 8), 2, 6, 1)
    timeline.add(Point((6,), 8), 0, 10, 2)
    return timeline


def test_alive_and_exact_answers(timeline):
    assert [handle for _, handle in timeline.alive_at(3)] == [0, 1, 2]
    assert [handle for _, handle in timeline.alive_at(6)] == [0, 2]
    assert timeline.exact_range(Point((10,), 8), Fraction(4, 256), 1) == [(Point((10,), 8), 0), (Point((6,), 8), 2)]
    assert timeline.exact_nn(Point((10,), 8), 3) == (Point((10,), 8), 0)
    assert timeline.exact_nn(Point((8,), 8), 12) == (Point((10,), 8), 0)
    # 10 and 14 tie at distance 2; the smaller handle wins
    assert timeline.exact_nn(Point((12,), 8), 3)[1] == 0
    assert NaiveTimeline().exact_nn(Point((1,), 8), 0) is None


def test_contract_checks(timeline):
    q = Point((10,), 8)
    r = Fraction(1, 256)
    assert timeline.range_ok([(q, 0)], q, r, 0.5, 3)
    assert not timeline.range_ok([], q, r, 0.5, 3)
    assert not timeline.range_ok([(q, 0), (Point((14,), 8), 1)], q, r, 0.5, 3)
    assert not timeline.range_ok([(q, 0), (q, 0)], q, r, 0.5, 3)
    assert timeline.empty_ok(None, Point((2,), 8), r, 0.5, 3)
    assert not timeline.empty_ok(None, q, r, 0.5, 3)
    assert timeline.empty_ok((q, 0), q, r, 0.5, 3)
    assert timeline.ann_ok((Point((14,), 8), 1), Point((13,), 8), 0.1, 3)
    assert timeline.ann_ok((Point((10,), 8), 0), Point((12,), 8), 0.1, 3)
    assert not timeline.ann_ok((Point((14,), 8), 1), Point((13,), 8), 0.1, 7)
    assert not timeline.ann_ok((Point((6,), 8), 2), Point((13,), 8), 0.5, 3)
    assert not timeline.ann_ok(None, q, 0.5, 3)
    assert NaiveTimeline().ann_ok(None, q, 0.5, 3)


def test_handle_errors(timeline):
    with pytest.raises(DuplicateElementError):
        timeline.add(Point((1,), 8), 0, 1, 0)
    with pytest.raises(MissingElementError):
        timeline.remove(9)
    timeline.remove(1)
    assert len(timeline) == 2

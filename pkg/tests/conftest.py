import numpy as np
import pytest

from residentid.geometry import AccessibilityGraph, LayoutMap, Point, Segment


@pytest.fixture
def paper_ag() -> AccessibilityGraph:
    """The worked 4x4 distance-matrix example."""
    dist = np.array(
        [
            [0, 1, 0, 0],
            [1, 0, 2, 3],
            [0, 2, 0, 1],
            [0, 3, 1, 0],
        ],
        dtype=np.float64,
    )
    return AccessibilityGraph(node_ids=["1", "2", "3", "4"], dist=dist)


@pytest.fixture
def square_layout() -> LayoutMap:
    """Four POIs on a 10x10 square with a central obstacle."""
    return LayoutMap(
        pois=[
            ("M1", Point((0.0, 0.0))),
            ("M2", Point((10.0, 0.0))),
            ("M3", Point((10.0, 10.0))),
            ("M4", Point((0.0, 10.0))),
        ],
        obstacles=[Segment(Point((4.0, 5.0)), Point((6.0, 5.0)))],
    )

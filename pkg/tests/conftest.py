import numpy as np
import pytest

from ma_isac import ArrayLayout, RectRegion, min_pairwise_distance

LAM = 0.05
REGION = RectRegion.square(5 * LAM)


@pytest.fixture
def region():
    return REGION


def random_feasible_layout(rng, n, min_spacing=LAM / 2, region=REGION, lam=LAM):
    """Rejection-sample an in-region layout with the required spacing."""
    lo_y, hi_y, lo_z, hi_z = region.bounding_box()
    while True:
        y = rng.uniform(lo_y, hi_y, n)
        z = rng.uniform(lo_z, hi_z, n)
        layout = ArrayLayout(y, z, region, lam)
        if min_pairwise_distance(layout) >= min_spacing:
            return layout

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dsshell import load_demo_kb
from dsshell.evidence import Frame, MassFunction


@pytest.fixture(scope="session")
def demo_kb():
    return load_demo_kb()


@pytest.fixture
def site_frame():
    return Frame("site_of_play", ("craton", "shelf", "margin"))


@pytest.fixture
def initial_site_mass(site_frame):
    """The worked example's starting assignment over the site frame."""
    f = site_frame
    return MassFunction(
        f,
        {
            f.subset(["margin", "shelf"]): 0.45,
            f.singleton("margin"): 0.25,
            f.singleton("shelf"): 0.1,
            f.singleton("craton"): 0.1,
            f.theta(): 0.1,
        },
    )


@pytest.fixture
def rule03_mass(site_frame):
    f = site_frame
    return MassFunction(f, {f.subset(["shelf", "margin"]): 0.8, f.theta(): 0.2})


WORKED_SCRIPT = """\
volunteer initial_signs margin_trend
answer dist less_equal_200
volunteer beds_dip seaward
volunteer abrupt_change no
answer move seaward
answer sed_finer seaward
answer sed_homogeneous seaward
answer fauna_deepens seaward
"""


@pytest.fixture(scope="session")
def worked_script():
    return WORKED_SCRIPT

import hypothesis
import pytest

from elaa_doa.scenarios import paper_array

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=60, derandomize=True
)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def paper_cfg():
    return paper_array()

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

# persistent kernel-table cache keeps repeated test sessions fast
os.environ.setdefault(
    "SBE_CACHE_DIR", os.path.join(os.path.dirname(__file__), "..", ".sbe_cache")
)

from sbe import stable_kernel as sk  # noqa: E402


@pytest.fixture(scope="session")
def law15():
    return sk.StableLaw(1.5, 1)


@pytest.fixture(scope="session")
def law_cauchy():
    return sk.StableLaw(1.0, 1)


@pytest.fixture(scope="session")
def law_gauss():
    return sk.StableLaw(2.0, 1)


@pytest.fixture(scope="session")
def law15_d2():
    return sk.StableLaw(1.5, 2)

from __future__ import annotations

import pytest

from tggsync.bench import bundled


@pytest.fixture(scope="session")
def docgen():
    return bundled("docgen")


@pytest.fixture(scope="session")
def evalg():
    return bundled("eval")

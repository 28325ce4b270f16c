from __future__ import annotations

import pytest

from spiral_acq.config import MissionParams


@pytest.fixture
def defaults() -> MissionParams:
    return MissionParams()

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from klnmf import _kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    # keep JIT compilation out of individual test timings
    _kernels.warm_up()

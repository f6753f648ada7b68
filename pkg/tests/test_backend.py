import os
import subprocess
import sys

import numpy as np
import pytest

from relboltz import _backend, _pykernels


def test_get_by_name():
    assert _backend.get("numpy") is _pykernels
    assert _backend.get() is _backend.kernels
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_env_forces_numpy():
    env = dict(os.environ, RELBOLTZ_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import relboltz; print(relboltz.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@pytest.mark.skipif(_backend.compiled is None, reason="compiled kernels not built")
def test_loss_points_agree():
    rng = np.random.default_rng(2)
    nodes = rng.uniform(-3, 3, (50, 3))
    node_e = np.sqrt(1 + np.sum(nodes**2, 1))
    fvals = rng.uniform(0, 1, 50)
    pts = rng.uniform(-3, 3, (7, 3))
    a = _backend.compiled.loss_points(fvals, pts, nodes, node_e, 1)
    b = _pykernels.loss_points(fvals, pts, nodes, node_e)
    np.testing.assert_allclose(a, b, rtol=1e-13)

"""Compiled kernel vs NumPy fallback: same inputs, bit-identical outputs."""

import numpy as np
import pytest

from d2d_effcap._backend import BACKEND_NAME, HAVE_KERNEL, get_backend
from d2d_effcap.errors import ConfigError
from d2d_effcap.montecarlo import SimConfig, simulate_service_paths

needs_kernel = pytest.mark.skipif(
    not HAVE_KERNEL, reason="compiled kernel not built"
)


def test_get_backend_resolution():
    mod, name = get_backend(None)
    assert name == BACKEND_NAME
    assert get_backend("auto")[1] == BACKEND_NAME
    assert get_backend("python")[1] == "python"
    with pytest.raises(ConfigError):
        get_backend("fortran")
    if not HAVE_KERNEL:
        with pytest.raises(ConfigError):
            get_backend("kernel")


@needs_kernel
def test_backends_bit_identical(params, budget, detection, markov_rows):
    cfg = SimConfig(num_paths=1500, num_blocks=80, seed=4321)
    via_python = simulate_service_paths(
        params, budget, detection, markov_rows, cfg, backend="python"
    )
    via_kernel = simulate_service_paths(
        params, budget, detection, markov_rows, cfg, backend="kernel"
    )
    assert np.array_equal(via_python, via_kernel)


@needs_kernel
def test_backends_bit_identical_forced_scenarios(params, budget, detection,
                                                 markov_rows):
    for scenario in ("overlay", "underlay"):
        cfg = SimConfig(num_paths=400, num_blocks=60, seed=77,
                        scenario=scenario)
        a = simulate_service_paths(params, budget, detection, markov_rows,
                                   cfg, backend="python")
        b = simulate_service_paths(params, budget, detection, markov_rows,
                                   cfg, backend="kernel")
        assert np.array_equal(a, b)

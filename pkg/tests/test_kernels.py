import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import eval_hermite, factorial

from quadsub import _kernels_py, catalog, kernels
from quadsub.symbols import hamilton_map

try:
    from quadsub import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
BACKENDS = [_kernels_py] + ([compiled] if compiled is not None else [])


def hermite_reference(x, k):
    return eval_hermite(k, x) * np.exp(-x * x / 2) / np.sqrt(2.0 ** k * factorial(k) * np.sqrt(np.pi))


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__)
def test_hermite_functions_against_scipy(impl):
    x = np.linspace(-5, 5, 41)
    H = impl.hermite_functions(x, 12)
    for k in range(13):
        np.testing.assert_allclose(H[k], hermite_reference(x, k), atol=1e-12)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__)
def test_riccati_harmonic_tanh(impl):
    q = catalog.harmonic()
    times = np.array([0.0, 0.1, 0.25])
    snaps, done = impl.riccati_rk4(q.Q_re, np.zeros((2, 2)), times, 1e-3, 1e6)
    assert done == 3
    for t, G in zip(times, snaps):
        np.testing.assert_allclose(G, np.tanh(2 * t) / 2 * np.eye(2), atol=1e-12)


@needs_compiled
@pytest.mark.parametrize("name", ["davies", "kfp", "chain"])
def test_backends_agree_on_riccati(name):
    q = catalog.get(name).symbol
    F_im = hamilton_map(q).F_im
    times = np.linspace(0, 0.2, 9)
    a, na = _kernels_py.riccati_rk4(q.Q_re, F_im, times, 1e-3, 1e6)
    b, nb = compiled.riccati_rk4(q.Q_re, F_im, times, 1e-3, 1e6)
    assert na == nb == len(times)
    np.testing.assert_allclose(a, b, atol=1e-14)


@needs_compiled
def test_backends_agree_on_hermite():
    x = np.linspace(-12, 12, 301)
    np.testing.assert_allclose(_kernels_py.hermite_functions(x, 150),
                               compiled.hermite_functions(x, 150), atol=1e-13)


@needs_compiled
def test_backends_agree_on_blowup():
    Q = np.diag([1.0, -1.0])
    a = _kernels_py.riccati_rk4(Q, np.zeros((2, 2)), [0.1, 0.79], 1e-4, 1e6)
    b = compiled.riccati_rk4(Q, np.zeros((2, 2)), [0.1, 0.79], 1e-4, 1e6)
    assert a[1] == b[1] == 1


def test_read_only_inputs_accepted():
    q = catalog.davies()
    assert not q.Q_re.flags.writeable
    kernels.riccati_rk4(q.Q_re, hamilton_map(q).F_im, np.array([0.01]), 1e-3, 1e6)


def test_backend_selection_env():
    code = "import quadsub.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, QUADSUB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "cython")
    if compiled is not None and os.environ.get("QUADSUB_PURE_PYTHON", "") in ("", "0"):
        assert kernels.BACKEND == "cython"


def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--repeat", "1"], capture_output=True, text=True)
    assert out.returncode == 0 and "riccati_rk4" in out.stdout

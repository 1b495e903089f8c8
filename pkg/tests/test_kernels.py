"""numba kernels against the numpy fallback."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from twinbeam import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@needs_numba
def test_filter_parity(rng):
    x = rng.standard_normal(50_000)
    b0, b1, a1 = 0.93, -0.88, -0.95
    y_np, xl_np, yl_np = K.first_order_filter_np(b0, b1, a1, x, 0.3, -0.2)
    y_nb, xl_nb, yl_nb = K.first_order_filter_nb(b0, b1, a1, x, 0.3, -0.2)
    np.testing.assert_allclose(y_nb, y_np, rtol=1e-12, atol=1e-12)
    assert xl_np == xl_nb and yl_nb == pytest.approx(yl_np, abs=1e-12)


def test_filter_state_carries_across_calls(rng):
    x = rng.standard_normal(10_001)
    b0, b1, a1 = 0.5, 0.2, -0.7
    whole, _, _ = K.first_order_filter(b0, b1, a1, x, 0.0, 0.0)
    y1, xp, yp = K.first_order_filter(b0, b1, a1, x[:3333], 0.0, 0.0)
    y2, _, _ = K.first_order_filter(b0, b1, a1, x[3333:], xp, yp)
    np.testing.assert_allclose(np.concatenate([y1, y2]), whole, rtol=1e-13, atol=1e-13)
    empty, xp2, yp2 = K.first_order_filter(b0, b1, a1, np.empty(0), 1.0, 2.0)
    assert empty.size == 0 and (xp2, yp2) == (1.0, 2.0)


@needs_numba
def test_detect_and_attenuate_parity(rng):
    a, b, dp, dm, x, v = rng.standard_normal((6, 20_000))
    for w_plus in (0.5, 0.3):
        s_np, d_np = K.balanced_detect_np(a, b, dp, dm, 0.9, w_plus, 1 - w_plus)
        s_nb, d_nb = K.balanced_detect_nb(a, b, dp, dm, 0.9, w_plus, 1 - w_plus)
        np.testing.assert_allclose(s_nb, s_np, rtol=1e-14, atol=1e-14)
        np.testing.assert_allclose(d_nb, d_np, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(K.attenuate_nb(x, v, 0.6), K.attenuate_np(x, v, 0.6),
                               rtol=1e-14, atol=1e-14)


_SNIPPET = """
import json, numpy as np
from twinbeam import BACKEND
from twinbeam.spectra import EXPERIMENT_CAVITY, PumpDrive
from twinbeam.synth import CollectiveTargets, synthesize
from twinbeam.mzi import InterferometerConfig, MachZehnder
t = CollectiveTargets.from_opo(EXPERIMENT_CAVITY, PumpDrive(1.39, 0.33))
s = synthesize(t, 5e-9, 1 << 16, seed=4, f_warp=2e6)
su, di = MachZehnder(InterferometerConfig.for_frequency(2e6), 5e-9, 1).process(s.p_s, s.q_s)
print(json.dumps({"backend": BACKEND, "q": s.q_s[-5:].tolist(), "d": di[-5:].tolist()}))
"""


def _run(flag):
    env = dict(os.environ)
    env.pop("TWINBEAM_DISABLE_NUMBA", None)
    if flag:
        env["TWINBEAM_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", _SNIPPET], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


@needs_numba
def test_env_flag_selects_fallback_with_same_results():
    fast, slow = _run(False), _run(True)
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    np.testing.assert_allclose(fast["q"], slow["q"], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(fast["d"], slow["d"], rtol=1e-10, atol=1e-12)

import os
import subprocess
import sys

import numpy as np

from bicacomp import kernels
from bicacomp.coding import quantize_counts


def _cum(p):
    counts = quantize_counts(np.asarray(p))
    cum = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=cum[1:])
    return cum


def test_compiled_and_fallback_encode_bit_identical():
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(16))
    syms = rng.choice(16, size=500, p=p).astype(np.int64)
    cum = _cum(p)
    out_a = np.zeros(500 * 20 + 128, dtype=np.uint8)
    out_b = np.zeros(500 * 20 + 128, dtype=np.uint8)
    na = kernels.ac_encode(syms, cum, out_a)
    nb = kernels._ac_encode_core(syms, cum, out_b)
    assert na == nb
    assert np.array_equal(out_a[:na], out_b[:nb])


def test_compiled_and_fallback_decode_bit_identical():
    rng = np.random.default_rng(2)
    p = rng.dirichlet(np.ones(8))
    syms = rng.choice(8, size=400, p=p).astype(np.int64)
    cum = _cum(p)
    buf = np.zeros(400 * 20 + 128, dtype=np.uint8)
    n = kernels.ac_encode(syms, cum, buf)
    bits = buf[:n]
    out_a = np.zeros(400, dtype=np.int64)
    out_b = np.zeros(400, dtype=np.int64)
    kernels.ac_decode(bits, 400, cum, out_a)
    kernels._ac_decode_core(bits, 400, cum, out_b)
    assert np.array_equal(out_a, syms)
    assert np.array_equal(out_a, out_b)


def test_compiled_and_fallback_assign_identical():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((200, 4))
    cents = rng.standard_normal((10, 4))
    bias = rng.random(10)
    bias[3] = np.inf  # retired cluster is never picked
    a1 = np.zeros(200, dtype=np.int64)
    a2 = np.zeros(200, dtype=np.int64)
    t1 = kernels.ecvq_assign(x, cents, bias, a1)
    t2 = kernels._ecvq_assign_core(x, cents, bias, a2)
    assert np.array_equal(a1, a2)
    assert t1 == t2
    assert not np.any(a1 == 3)


def test_env_flag_disables_numba():
    code = (
        "import bicacomp.kernels as k; "
        "print(k.NUMBA_ACTIVE, k.ac_encode is k._ac_encode_core)"
    )
    env = dict(os.environ, BICACOMP_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False True"


def test_numba_enabled_by_default_when_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return
    env = {k: v for k, v in os.environ.items() if k != "BICACOMP_NUMBA"}
    code = "import bicacomp.kernels as k; print(k.NUMBA_ACTIVE)"
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"

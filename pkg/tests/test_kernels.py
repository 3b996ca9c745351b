import numpy as np
import pytest

from splitshare import kernels
from splitshare.instance_gen import GenParams, generate
from splitshare.sharing import build_shared_catalog


def packed(seed):
    s = generate(GenParams(seed=seed, n_devices=(3, 4)))
    return kernels.pack_problem(s, build_shared_catalog(s), list(s.trace))


def test_backends_agree():
    for seed in range(20):
        p = packed(seed)
        n_codes = p.comp.shape[1] ** p.comp.shape[0]
        obj_py, code_py = kernels._search_py(
            p.comp, p.mem, p.cap, p.lat, p.bw, p.enc_idx, p.enc_in,
            p.enc_out, p.head_idx, p.src_idx, 0, n_codes)
        obj_np, code_np = kernels._search_np(p, 0, n_codes)
        assert code_py == code_np
        assert obj_py == obj_np  # bit-identical, not approx


@pytest.mark.skipif(kernels._search_nb is None, reason="numba unavailable")
def test_numba_backend_agrees():
    for seed in range(5):
        p = packed(seed)
        n_codes = p.comp.shape[1] ** p.comp.shape[0]
        args = (p.comp, p.mem, p.cap, p.lat, p.bw, p.enc_idx, p.enc_in,
                p.enc_out, p.head_idx, p.src_idx, 0, n_codes)
        assert kernels._search_nb(*args) == kernels._search_py(*args)


def test_backend_env_flag(monkeypatch):
    monkeypatch.setenv("SPLITSHARE_NUMBA", "0")
    assert kernels.backend_name() == "numpy"
    monkeypatch.delenv("SPLITSHARE_NUMBA")
    if kernels._search_nb is not None:
        assert kernels.backend_name() == "numba"


def test_decode_assignment_roundtrip():
    p = packed(1)
    n_dev = p.comp.shape[1]
    code = n_dev ** p.comp.shape[0] - 1
    a = kernels.decode_assignment(p, code)
    assert np.all(a == n_dev - 1)
    assert np.all(kernels.decode_assignment(p, 0) == 0)

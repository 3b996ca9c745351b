"""Hot kernel for brute-force placement search.

Enumerates every module-to-device assignment (module 0 is the most
significant digit, devices in scenario order) and returns the lowest
total analytic latency together with the first code that attains it.

Two interchangeable backends: a numba @njit kernel and a chunked pure-numpy
fallback. Selection: numpy when the environment variable SPLITSHARE_NUMBA
is set to "0" (or numba is not importable), numba otherwise. Both follow
the exact summation order of routing.analytic_latency so objectives are
bit-identical with the pure-Python evaluator.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def _use_numba() -> bool:
    return numba is not None and os.environ.get("SPLITSHARE_NUMBA", "1") != "0"


def backend_name() -> str:
    return "numba" if _use_numba() else "numpy"


@dataclass
class PackedProblem:
    """Array view of a (scenario, catalog, request set) triple.

    comp[m, n] is +inf where the device cannot host the module; lat/bw
    are dense with zero diagonals and +inf latency for missing links.
    """
    comp: np.ndarray      # float64[M, N]
    mem: np.ndarray       # int64[M]
    cap: np.ndarray       # int64[N]
    lat: np.ndarray       # float64[N, N]
    bw: np.ndarray        # float64[N, N]
    enc_idx: np.ndarray   # int64[R, Emax], -1 padded
    enc_in: np.ndarray    # float64[R, Emax]
    enc_out: np.ndarray   # float64[R, Emax]
    head_idx: np.ndarray  # int64[R]
    src_idx: np.ndarray   # int64[R]

    @property
    def n_modules(self) -> int:
        return self.comp.shape[0]

    @property
    def n_devices(self) -> int:
        return self.comp.shape[1]


def pack_problem(scenario, catalog, requests) -> PackedProblem:
    devices = scenario.devices
    mods = catalog.distinct_modules
    dev_pos = {d.device_id: i for i, d in enumerate(devices)}
    mod_pos = {m.function_key: i for i, m in enumerate(mods)}
    M, N = len(mods), len(devices)

    comp = np.full((M, N), np.inf)
    for j, m in enumerate(mods):
        for i, d in enumerate(devices):
            e = scenario.compute.get(m.function_key, d.device_id)
            if e is not None:
                comp[j, i] = e.comp_time
    mem = np.array([m.memory_req for m in mods], dtype=np.int64)
    cap = np.array([d.memory_capacity for d in devices], dtype=np.int64)

    lat = np.full((N, N), np.inf)
    bw = np.ones((N, N))
    np.fill_diagonal(lat, 0.0)
    for (a, b), link in scenario.network.links.items():
        i, k = dev_pos[a], dev_pos[b]
        if i != k:
            lat[i, k] = link.latency
            bw[i, k] = link.bandwidth

    emax = max((len(scenario.model(q.model_id).encoder_ids)
                for q in requests), default=1)
    R = len(requests)
    enc_idx = np.full((R, emax), -1, dtype=np.int64)
    enc_in = np.zeros((R, emax))
    enc_out = np.zeros((R, emax))
    head_idx = np.zeros(R, dtype=np.int64)
    src_idx = np.zeros(R, dtype=np.int64)
    for r, q in enumerate(requests):
        k = scenario.model(q.model_id)
        for e, mid in enumerate(k.encoder_ids):
            m = scenario.module(mid)
            enc_idx[r, e] = mod_pos[m.function_key]
            enc_in[r, e] = m.input_size
            enc_out[r, e] = m.output_size
        head_idx[r] = mod_pos[scenario.module(k.head_id).function_key]
        src_idx[r] = dev_pos[q.source_device]
    return PackedProblem(comp, mem, cap, lat, bw,
                         enc_idx, enc_in, enc_out, head_idx, src_idx)


def _search_py(comp, mem, cap, lat, bw,
               enc_idx, enc_in, enc_out, head_idx, src_idx,
               code_lo, code_hi):
    M, N = comp.shape
    R, E = enc_idx.shape
    best = np.inf
    best_code = np.int64(-1)
    assign = np.empty(M, dtype=np.int64)
    usage = np.empty(N, dtype=np.int64)
    for code in range(code_lo, code_hi):
        c = code
        for j in range(M - 1, -1, -1):
            assign[j] = c % N
            c //= N
        usage[:] = 0
        feasible = True
        for j in range(M):
            n = assign[j]
            usage[n] += mem[j]
            if usage[n] > cap[n] or comp[j, n] == np.inf:
                feasible = False
                break
        if not feasible:
            continue
        obj = 0.0
        for r in range(R):
            hd = assign[head_idx[r]]
            sd = src_idx[r]
            t_enc = 0.0
            for e in range(E):
                j = enc_idx[r, e]
                if j < 0:
                    break
                n = assign[j]
                t = 0.0
                if n != sd:
                    t = lat[sd, n] + enc_in[r, e] / bw[sd, n]
                t = t + comp[j, n]
                if n != hd:
                    t = t + (lat[n, hd] + enc_out[r, e] / bw[n, hd])
                if t > t_enc:
                    t_enc = t
            obj += t_enc + comp[head_idx[r], hd]
        if obj < best:
            best = obj
            best_code = code
    return best, best_code


if numba is not None:
    _search_nb = numba.njit(cache=True)(_search_py)


def _search_np(p: PackedProblem, code_lo: int, code_hi: int,
               chunk: int = 65536):
    """Chunk-vectorized numpy equivalent of _search_py."""
    M, N = p.comp.shape
    best = np.inf
    best_code = -1
    radix = N ** np.arange(M - 1, -1, -1, dtype=np.int64)
    for lo in range(code_lo, code_hi, chunk):
        codes = np.arange(lo, min(lo + chunk, code_hi), dtype=np.int64)
        A = (codes[:, None] // radix[None, :]) % N  # (C, M) device index
        C = codes.size
        usage = np.zeros((C, N), dtype=np.int64)
        rows = np.arange(C)
        for j in range(M):
            np.add.at(usage, (rows, A[:, j]), p.mem[j])
        ok = np.all(usage <= p.cap[None, :], axis=1)
        for j in range(M):
            ok &= np.isfinite(p.comp[j, A[:, j]])
        if not ok.any():
            continue
        A = A[ok]
        codes = codes[ok]
        obj = np.zeros(A.shape[0])
        for r in range(p.enc_idx.shape[0]):
            hd = A[:, p.head_idx[r]]
            sd = p.src_idx[r]
            t_enc = np.zeros(A.shape[0])
            for e in range(p.enc_idx.shape[1]):
                j = p.enc_idx[r, e]
                if j < 0:
                    break
                n = A[:, j]
                t = np.where(n != sd,
                             p.lat[sd, n] + p.enc_in[r, e] / p.bw[sd, n],
                             0.0)
                t = t + p.comp[j, n]
                t = t + np.where(n != hd,
                                 p.lat[n, hd]
                                 + p.enc_out[r, e] / p.bw[n, hd],
                                 0.0)
                t_enc = np.maximum(t_enc, t)
            obj += t_enc + p.comp[p.head_idx[r], hd]
        i = int(np.argmin(obj))
        if obj[i] < best:
            best = float(obj[i])
            best_code = int(codes[i])
    return best, best_code


def search_best_placement(p: PackedProblem):
    """Return (objective, code) of the best feasible assignment, or
    (inf, -1) when none is feasible. First-in-enumeration-order wins ties."""
    n_codes = p.n_devices ** p.n_modules
    if _use_numba():
        obj, code = _search_nb(p.comp, p.mem, p.cap, p.lat, p.bw,
                               p.enc_idx, p.enc_in, p.enc_out,
                               p.head_idx, p.src_idx, 0, n_codes)
        return float(obj), int(code)
    return _search_np(p, 0, n_codes)


def decode_assignment(p: PackedProblem, code: int) -> np.ndarray:
    N = p.n_devices
    out = np.empty(p.n_modules, dtype=np.int64)
    for j in range(p.n_modules - 1, -1, -1):
        out[j] = code % N
        code //= N
    return out

"""Pure-numpy sampling kernel.

One sample consumes exactly four 64-bit words from a counter-based
generator (one block per sample): component choice for the first
outcome, its Gaussian offset, component choice for the second outcome,
its Gaussian offset.  Because each sample owns its counter block, any
partition of a run into chunks or threads reproduces the same stream.

The compiled kernel in _sampler_cy mirrors every floating-point
operation of this module in the same order, so the two backends emit
bit-identical samples.  Keep the two files in sync.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

TWO_NEG53 = 1.0 / 9007199254740992.0
CHUNK_TARGET = 4_194_304


def _chunk_size(d: int) -> int:
    return max(256, CHUNK_TARGET // max(d, 1))


def _uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Four uniforms in (0, 1] per sample from counter block ``start + i``."""
    counter = np.zeros(4, dtype=np.uint64)
    counter[0] = start
    bitgen = np.random.Philox(key=seed, counter=counter)
    words = bitgen.random_raw(4 * count).reshape(count, 4)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * TWO_NEG53


def _sample_chunk(plan, seed: int, start: int, count: int):
    d = plan.eigs_a.size
    u = _uniforms(seed, start, count)

    t1 = u[:, 0] * plan.wa_cum[-1]
    j = np.searchsorted(plan.wa_cum, t1, side="right")
    j = np.minimum(j, d - 1)
    za = ndtri(u[:, 1])
    a = plan.eigs_a[j] + plan.sigma_a * za

    diff = a[:, None] - plan.eigs_a[None, :]
    e = np.exp((diff * diff) * plan.neg_lam_a)
    c_re = e * plan.psi_re[None, :]
    c_im = e * plan.psi_im[None, :]

    t_re = np.zeros((count, d))
    t_im = np.zeros((count, d))
    for n in range(d):
        cr = c_re[:, n][:, None]
        ci = c_im[:, n][:, None]
        ur = plan.u_re[:, n][None, :]
        ui = plan.u_im[:, n][None, :]
        t_re += cr * ur - ci * ui
        t_im += cr * ui + ci * ur

    q = t_re**2 + t_im**2
    qcum = np.cumsum(q, axis=1)
    t2 = u[:, 2] * qcum[:, -1]
    hit = qcum > t2[:, None]
    m_idx = np.where(hit.any(axis=1), hit.argmax(axis=1), d - 1)
    zb = ndtri(u[:, 3])
    b = plan.eigs_b[m_idx] + plan.sigma_b * zb
    return a, b


def sample_block(plan, seed: int, start: int, count: int):
    """Samples ``start .. start + count - 1`` of the stream for ``seed``."""
    a_out = np.empty(count)
    b_out = np.empty(count)
    step = _chunk_size(plan.eigs_a.size)
    pos = 0
    while pos < count:
        m = min(step, count - pos)
        a_out[pos : pos + m], b_out[pos : pos + m] = _sample_chunk(plan, seed, start + pos, m)
        pos += m
    return a_out, b_out

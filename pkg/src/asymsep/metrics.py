"""BSS-eval source separation scores (SDR, SIR, SAR).

Each estimate is decomposed by least-squares projection onto time-shifted
copies of the references (shifts ``0 .. filter_len - 1``, signals extended by
``filter_len - 1`` zeros):

* target       = projection onto shifts of the matching reference
* interference = projection onto shifts of all references, minus target
* artifact     = estimate minus both

The Gram matrices of shifted references are block Toeplitz and are built from
FFT cross-correlations rather than by materialising the shifted copies.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.signal import fftconvolve

from .errors import DataError

SCORE_CLAMP_DB = 200.0
RIDGE = 1e-10


@dataclass(frozen=True)
class SeparationScores:
    sdr: float
    sir: float
    sar: float
    target_energy: float
    interference_energy: float
    artifact_energy: float


def ratio_db(num: float, den: float) -> float:
    """``10 log10(num / den)`` clamped to +-200 dB."""
    if den <= 0.0:
        return SCORE_CLAMP_DB if num > 0.0 else -SCORE_CLAMP_DB
    if num <= 0.0:
        return -SCORE_CLAMP_DB
    return float(np.clip(10.0 * np.log10(num / den), -SCORE_CLAMP_DB, SCORE_CLAMP_DB))


def _as_matrix(signals, name):
    arr = np.atleast_2d(np.asarray(signals, dtype=np.float64))
    if arr.ndim != 2:
        raise DataError(f"{name} must be a list of 1-D signals")
    return arr


def _xcorr(a, b, max_lag):
    """``c[k] = sum_n a[n + k] b[n]`` for ``k = -max_lag .. max_lag``."""
    n = len(a)
    full = fftconvolve(a, b[::-1], mode="full")   # index n-1 is lag 0
    if max_lag >= n:
        pad = max_lag - n + 1
        full = np.concatenate([np.zeros(pad), full, np.zeros(pad)])
        n += pad
    return full[n - 1 - max_lag:n + max_lag]


def _solve(gram, rhs):
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(gram, rhs, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
            pass
    warnings.warn("singular projection system; solving with ridge regularisation",
                  RuntimeWarning, stacklevel=3)
    lam = RIDGE * max(np.trace(gram) / len(gram), np.finfo(float).tiny)
    return scipy.linalg.solve(gram + lam * np.eye(len(gram)), rhs, assume_a="pos")


class _Projector:
    """Projection onto shifted references, shared across estimates."""

    def __init__(self, references, filter_len):
        self.refs = references
        self.L = filter_len
        nsrc, n = references.shape
        L = filter_len
        gram = np.empty((nsrc * L, nsrc * L))
        for i in range(nsrc):
            for j in range(i, nsrc):
                c = _xcorr(references[i], references[j], L - 1)
                # block[a, b] = sum_n r_i(n - a) r_j(n - b) = c[b - a]
                lags = np.arange(L)[None, :] - np.arange(L)[:, None]
                block = c[lags + L - 1]
                gram[i * L:(i + 1) * L, j * L:(j + 1) * L] = block
                gram[j * L:(j + 1) * L, i * L:(i + 1) * L] = block.T
        self.gram = gram

    def _rhs(self, est, idx):
        L = self.L
        # d[a] = sum_n r_i(n - a) e(n) = xcorr(e, r_i)[a]
        return np.concatenate([_xcorr(est, self.refs[i], L - 1)[L - 1:] for i in idx])

    def _rebuild(self, coef, idx):
        L = self.L
        n = self.refs.shape[1]
        out = np.zeros(n + L - 1)
        for k, i in enumerate(idx):
            out += fftconvolve(self.refs[i], coef[k * L:(k + 1) * L])
        return out

    def project(self, est, idx):
        L = self.L
        sel = np.concatenate([np.arange(i * L, (i + 1) * L) for i in idx])
        coef = _solve(self.gram[np.ix_(sel, sel)], self._rhs(est, idx))
        return self._rebuild(coef, idx)


def decompose(estimate, projector: _Projector, j: int):
    """Return ``(s_target, e_interf, e_artif)``, each of length ``n + L - 1``."""
    nsrc, n = projector.refs.shape
    L = projector.L
    e = np.concatenate([estimate, np.zeros(L - 1)])
    s_target = projector.project(estimate, [j])
    if nsrc == 1:
        p_all = s_target
    else:
        p_all = projector.project(estimate, list(range(nsrc)))
    e_interf = p_all - s_target
    e_artif = e - p_all
    return s_target, e_interf, e_artif


def _scores(s_target, e_interf, e_artif) -> SeparationScores:
    t = float(s_target @ s_target)
    i = float(e_interf @ e_interf)
    a = float(e_artif @ e_artif)
    ia = e_interf + e_artif
    ti = s_target + e_interf
    return SeparationScores(
        sdr=ratio_db(t, float(ia @ ia)),
        sir=ratio_db(t, i),
        sar=ratio_db(float(ti @ ti), a),
        target_energy=t,
        interference_energy=i,
        artifact_energy=a,
    )


def _validate(estimates, references, filter_len):
    est = _as_matrix(estimates, "estimates")
    ref = _as_matrix(references, "references")
    if est.shape[1] != ref.shape[1]:
        raise DataError(
            f"estimates have {est.shape[1]} samples, references {ref.shape[1]}")
    if ref.shape[0] < 1:
        raise DataError("need at least one reference")
    if filter_len < 1:
        raise ValueError("filter_len must be >= 1")
    return est, ref


def bss_eval(estimates, references, filter_len: int = 512) -> list[SeparationScores]:
    """Score ``estimates[j]`` against ``references[j]`` for every ``j``."""
    est, ref = _validate(estimates, references, filter_len)
    if est.shape[0] > ref.shape[0]:
        raise DataError("more estimates than references")
    proj = _Projector(ref, filter_len)
    return [_scores(*decompose(est[j], proj, j)) for j in range(est.shape[0])]


def permute_and_score(estimates, references, filter_len: int = 512):
    """Best assignment of estimates to references by mean SDR.

    Returns ``(perm, scores)`` where ``perm[j]`` is the estimate index
    assigned to reference ``j`` and ``scores[j]`` its scores.
    """
    est, ref = _validate(estimates, references, filter_len)
    nsrc = ref.shape[0]
    if est.shape[0] != nsrc:
        raise DataError("permutation scoring needs as many estimates as references")
    proj = _Projector(ref, filter_len)
    table = [[_scores(*decompose(est[e], proj, j)) for e in range(nsrc)]
             for j in range(nsrc)]
    best = max(itertools.permutations(range(nsrc)),
               key=lambda p: np.mean([table[j][p[j]].sdr for j in range(nsrc)]))
    return tuple(best), [table[j][best[j]] for j in range(nsrc)]

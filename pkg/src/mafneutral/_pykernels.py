"""Vectorized numpy implementation of the batch statistic kernels.

Same contract as the compiled ``_ckernels`` module; used when the extension
is unavailable or ``MAFNEUTRAL_PURE_PYTHON`` is set.
"""

import numpy as np

W, T, CHI2, CATT, W_HWD, T_HWD = range(6)


def _one(code, param, r0, r1, R, s0, s1, S):
    N = R + S
    lam = R / N
    sqrt_m = np.sqrt(2.0 * R * S / N)
    qa = (2.0 * r0 + r1) / (2.0 * R)
    qu = (2.0 * s0 + s1) / (2.0 * S)
    diff = qu - qa

    if code == W or code == W_HWD:
        qd = param * qa + (1.0 - param) * qu
        var = qd * (1.0 - qd)
        if code == W_HWD:
            q11d = param * (r0 / R) + (1.0 - param) * (s0 / S)
            var = var + (q11d - qd * qd)
    elif code == T:
        var = lam * qu * (1.0 - qu) + (1.0 - lam) * qa * (1.0 - qa)
    elif code == T_HWD:
        va = qa * (1.0 - qa) + r0 / R - qa * qa
        vu = qu * (1.0 - qu) + s0 / S - qu * qu
        var = lam * vu + (1.0 - lam) * va
    elif code == CHI2:
        a = 2.0 * r0 + r1
        b = 2.0 * R - a
        c = 2.0 * s0 + s1
        d = 2.0 * S - c
        margins = (a + b) * (c + d) * (a + c) * (b + d)
        out = 2.0 * N * (a * d - b * c) ** 2 / margins
        return np.where(margins > 0.0, out, np.nan)
    elif code == CATT:
        x1 = param
        n1 = r1 + s1
        n2 = r0 + s0
        u = x1 * (R * s1 - S * r1) + (R * s0 - S * r0)
        sx = x1 * n1 + n2
        sxx = x1 * x1 * n1 + n2
        var = R * S * (sxx - sx * sx / N)
        out = u / np.sqrt(np.where(var > 0.0, var, 1.0))
        return np.where(var > 0.0, out, np.nan)
    else:
        raise ValueError(f"unknown method code {code}")

    ok = var > 0.0
    out = sqrt_m * diff / np.sqrt(np.where(ok, var, 1.0))
    return np.where(ok, out, np.nan)


def batch_statistics(r0, r1, R, s0, s1, S, codes, params):
    """Statistics for every (method, table) pair; NaN marks an undefined value."""
    r0, r1, R, s0, s1, S = (np.asarray(x, dtype=np.float64) for x in (r0, r1, R, s0, s1, S))
    out = np.empty((len(codes), r0.shape[0]), dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j, (code, param) in enumerate(zip(codes, params)):
            out[j] = _one(int(code), float(param), r0, r1, R, s0, s1, S)
    return out


def count_rejections(r0, r1, R, s0, s1, S, codes, params, crit):
    """Per-method counts of rejections and of defined statistics.

    Normal-type statistics reject when ``|stat| > crit``; CHI2 rejects when
    ``stat > crit`` (pass the squared normal critical value for it).
    """
    stats = batch_statistics(r0, r1, R, s0, s1, S, codes, params)
    rejects = np.zeros(len(codes), dtype=np.int64)
    defined = np.zeros(len(codes), dtype=np.int64)
    for j, code in enumerate(codes):
        row = stats[j]
        ok = ~np.isnan(row)
        defined[j] = int(ok.sum())
        value = row[ok] if int(code) == CHI2 else np.abs(row[ok])
        rejects[j] = int((value > crit[j]).sum())
    return rejects, defined

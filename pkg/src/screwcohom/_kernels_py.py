"""Pure-Python/NumPy versions of the compiled kernels."""
import math

import numpy as np


def small_d(ell, beta):
    dim = 2 * ell + 1
    c, s = math.cos(0.5 * beta), math.sin(0.5 * beta)
    lf = [math.lgamma(n + 1.0) for n in range(2 * ell + 2)]
    out = np.zeros((dim, dim))
    for mp in range(-ell, ell + 1):
        for m in range(-ell, ell + 1):
            pref = 0.5 * (lf[ell + mp] + lf[ell - mp] + lf[ell + m] + lf[ell - m])
            acc = 0.0
            for k in range(max(0, m - mp), min(ell + m, ell - mp) + 1):
                term = math.exp(pref - lf[ell + m - k] - lf[k] - lf[mp - m + k] - lf[ell - mp - k])
                term *= c ** (2 * ell + m - mp - 2 * k) * s ** (mp - m + 2 * k)
                acc += -term if (mp - m + k) & 1 else term
            out[mp + ell, m + ell] = acc
    return out


def orbit_forcing(alphas, W, G):
    acc = np.array(G[-1], dtype=complex)
    for r in range(len(G) - 2, -1, -1):
        acc = G[r] + alphas[r] * (W @ acc)
    return acc


def orbit_recursion(F0, alphas, W, G):
    L = len(G)
    Wh = W.conj().T
    out = np.empty((L + 1, len(F0)), dtype=complex)
    out[0] = F0
    for j in range(L):
        out[j + 1] = np.conj(alphas[j]) * (Wh @ (out[j] + G[j]))
    return out


def series_sum(coeffs, ks, ncol, xs, dmats):
    # inner[p, b] = sum_m coeffs[b, m] * dmats[p, m, ncol[b]]
    inner = np.einsum("bm,pmb->pb", coeffs, dmats[:, :, ncol])
    phases = np.exp(2j * np.pi * (xs @ ks.T))
    return np.sum(inner * phases, axis=1)

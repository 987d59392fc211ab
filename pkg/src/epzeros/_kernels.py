"""Compiled inner loops (numba).

The Epstein kernel evaluates the rotated incomplete gamma integrals

    G_s(lam) = int_lam^inf mu^(s-1) exp(-mu * delta) dmu,   delta = exp(i phi),

for a batch of real parts rho_k sharing one imaginary part t, at an
ascending list of abscissae lam.  The nodes of the backward panel
integration are shared by the whole batch, so each extra real part only
costs one real exponential per node.
"""
from __future__ import annotations

import cmath
import math

import numba as nb
import numpy as np

_NB = dict(nogil=True, cache=True)


def gauss_rules(orders=(4, 6, 8, 10, 12, 16, 20, 24, 32, 48, 64), tol=1e-16):
    """Flattened Gauss-Legendre rules with the largest admissible phase budget V.

    For an integrand exp(c x) on a panel of length w, V = |c| w, the classical
    remainder gives rel. error ~ V^(2n) (n!)^4 / ((2n+1) ((2n)!)^3).
    """
    xs, ws, off, ns, vmax = [], [], [], [], []
    pos = 0
    for n in orders:
        x, w = np.polynomial.legendre.leggauss(n)
        lg = (
            math.log(tol)
            + math.log(2 * n + 1)
            + 3 * math.lgamma(2 * n + 1)
            - 4 * math.lgamma(n + 1)
        )
        xs.append(x)
        ws.append(w)
        off.append(pos)
        ns.append(n)
        vmax.append(math.exp(lg / (2 * n)))
        pos += n
    return (
        np.concatenate(xs),
        np.concatenate(ws),
        np.array(off, dtype=np.int64),
        np.array(ns, dtype=np.int64),
        np.array(vmax),
    )


@nb.njit(**_NB)
def cf_upper_gamma_scaled(s, z):
    """h with Gamma(s, z) = z^s exp(-z) h, Legendre continued fraction (modified Lentz)."""
    tiny = 1e-300
    b = z + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < 1e-16:
            break
    return h


@nb.njit(**_NB)
def rotated_tails(t, rhos, phi, lam, lam_series, gser, lstart, rx, rw, roff, rn, rvmax):
    """G_{rho_k + i t}(lam_i) for a real-part set closed under rho -> 1 - rho (sorted)."""
    K = rhos.shape[0]
    n = lam.shape[0]
    out = np.empty((K, n), dtype=np.complex128)
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    delta = complex(cphi, sphi)

    # small abscissae: power series around 0, sum_m z^m / (s)_(m+1)
    smin = 1e300
    for k in range(K):
        sa = abs(complex(rhos[k], t))
        if sa < smin:
            smin = sa
    mmax = 0
    if n > 0 and lam[0] <= lam_series:
        mmax = int(39.2 / math.log(smin / lam_series)) + 3
    inv = np.empty((max(mmax, 1), K), dtype=np.complex128)
    for m in range(mmax):
        for k in range(K):
            inv[m, k] = 1.0 / complex(rhos[k] + m + 1.0, t)
    term = np.empty(K, dtype=np.complex128)
    tot = np.empty(K, dtype=np.complex128)
    i = 0
    while i < n and lam[i] <= lam_series:
        ll = math.log(lam[i])
        z = lam[i] * delta
        nt = min(mmax, int(39.2 / math.log(smin / lam[i])) + 3)
        for k in range(K):
            term[k] = 1.0 / complex(rhos[k], t)
            tot[k] = term[k]
        for m in range(nt):
            for k in range(K):
                term[k] = term[k] * z * inv[m, k]
                tot[k] += term[k]
        ph = t * ll - z.imag
        e = complex(math.cos(ph), math.sin(ph))
        for k in range(K):
            out[k, i] = gser[k] - (math.exp(rhos[k] * ll - z.real) * e) * tot[k]
        i += 1
    if i == n:
        return out

    # far abscissa: continued fraction, then integrate backwards
    g = np.empty(K, dtype=np.complex128)
    zs = lstart * delta
    lls = math.log(lstart)
    for k in range(K):
        s = complex(rhos[k], t)
        g[k] = cmath.exp(s * lls - zs) * cf_upper_gamma_scaled(s, zs)
    acc = np.empty(K, dtype=np.complex128)
    pacc = np.empty(K, dtype=np.complex128)
    pmid = np.empty(K, dtype=np.float64)
    nr = rn.shape[0]
    half = K // 2
    smom = np.empty(13, dtype=np.complex128)
    rmax = 0.0
    for k in range(K):
        if abs(rhos[k]) > rmax:
            rmax = abs(rhos[k])
    hi = lstart
    for j in range(n - 1, i - 1, -1):
        lo = lam[j]
        if hi > lo:
            dmax = 0.0
            for k in range(K):
                sm1 = complex(rhos[k] - 1.0, t)
                d1 = abs(sm1 / lo - delta)
                d2 = abs(sm1 / hi - delta)
                if d1 > dmax:
                    dmax = d1
                if d2 > dmax:
                    dmax = d2
            V = dmax * (hi - lo)
            r = 0
            while r < nr and rvmax[r] < V:
                r += 1
            npan = 1
            if r == nr:
                r = nr - 1
                npan = int(V / rvmax[r]) + 1
            # keep the branch point mu = 0 outside the convergence ellipse
            nsing = int((hi - lo) / (0.5 * lo)) + 1
            if nsing > npan:
                npan = nsing
                r = 0
                while r < nr - 1 and rvmax[r] < V / npan:
                    r += 1
            w = (hi - lo) / npan
            mid0 = lo + 0.5 * w
            off = roff[r]
            nn = rn[r]
            for k in range(K):
                acc[k] = 0.0
            # per-node factors (1 + h/mid)^rho_k: Taylor in rho dl when |rho dl| is tiny
            xb = rmax * max(abs(math.log1p(0.5 * w / mid0)), abs(math.log1p(-0.5 * w / mid0)))
            M = 0
            term = 1.0
            while term > 1e-17 and M <= 12:
                M += 1
                term *= xb / M
            for p in range(npan):
                mid = lo + (p + 0.5) * w
                # phase and magnitude at the panel midpoint; nodes only add small offsets
                lmid = math.log(mid)
                phm = t * lmid - mid * sphi
                cm = complex(math.cos(phm), math.sin(phm)) * math.exp(-mid * cphi - lmid)
                if M <= 12:
                    for m in range(M + 1):
                        smom[m] = 0.0
                    for q in range(nn):
                        h = 0.5 * w * rx[off + q]
                        dl = math.log1p(h / mid)
                        dph = t * dl - h * sphi
                        mag = rw[off + q] * math.exp(-h * cphi - dl)
                        base = complex(mag * math.cos(dph), mag * math.sin(dph))
                        pw = 1.0
                        for m in range(M + 1):
                            smom[m] += base * pw
                            pw *= dl
                    for k in range(K):
                        tot = smom[M]
                        for m in range(M - 1, -1, -1):
                            tot = smom[m] + tot * (rhos[k] / (m + 1))
                        acc[k] += cm * math.exp(rhos[k] * lmid) * tot
                    continue
                for k in range(half):
                    pmid[k] = math.exp(rhos[k] * lmid)
                for k in range(K):
                    pacc[k] = 0.0
                for q in range(nn):
                    h = 0.5 * w * rx[off + q]
                    dl = math.log1p(h / mid)
                    dph = t * dl - h * sphi
                    mag = rw[off + q] * math.exp(-h * cphi - dl)
                    base = complex(mag * math.cos(dph), mag * math.sin(dph))
                    # the batch is symmetric: rho_{K-1-k} = 1 - rho_k
                    for k in range(half):
                        pw = math.exp(rhos[k] * dl)
                        pacc[k] += base * pw
                        pacc[K - 1 - k] += base * ((1.0 + h / mid) / pw)
                    if K % 2 == 1:
                        pacc[half] += base * math.sqrt(1.0 + h / mid)
                for k in range(half):
                    acc[k] += cm * pmid[k] * pacc[k]
                    acc[K - 1 - k] += cm * (mid / pmid[k]) * pacc[K - 1 - k]
                if K % 2 == 1:
                    acc[half] += cm * math.sqrt(mid) * pacc[half]
            for k in range(K):
                g[k] += 0.5 * w * acc[k]
        for k in range(K):
            out[k, j] = g[k]
        hi = lo
    return out


@nb.njit(**_NB)
def assemble_weights(t, sigs, phi, lam, G, i1, i2):
    """W_k(lam) = lam^-s G_s(lam) + conj(delta) lam^(s-1) conj(G_{1-conj s}(lam)), s = sigs[k] + i t.

    G rows i1[k] and i2[k] hold G_s and G_{1-conj s}; the phase lam^-it is shared.
    """
    n = lam.shape[0]
    Ks = sigs.shape[0]
    W = np.empty((Ks, n), dtype=np.complex128)
    dbar = complex(math.cos(phi), -math.sin(phi))
    for i in range(n):
        ll = math.log(lam[i])
        e = complex(math.cos(t * ll), -math.sin(t * ll))
        ec = dbar * e.conjugate() / lam[i]
        for k in range(Ks):
            a = math.exp(-sigs[k] * ll)
            W[k, i] = a * e * G[i1[k], i] + (ec / a) * G[i2[k], i].conjugate()
    return W

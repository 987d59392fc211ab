"""Empirical value distribution of the 2J-vector L(sigma + it), rectangle discrepancy, Tsang smoothing."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BranchTrackingFailure, DomainError, TooManySkips
from .lfun import TrackingConfig, log_vector
from .qf import CharacterSystem

QUANTILES = tuple(k / 10 for k in range(1, 10))


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    sigma: float
    T: float
    samples: np.ndarray  # (n, 2J)
    ts: np.ndarray
    skipped: int
    seed: int

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def stratified_points(T: float, n: int, seed: int, strata: int | None = None, t2: float | None = None) -> np.ndarray:
    """n points in [T, t2) (default t2 = 2T): point i lies in stratum floor(i K / n) of K equal pieces."""
    K = min(1024, n) if strata is None else strata
    hi = 2 * T if t2 is None else t2
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random(n)
    s = (np.arange(n) * K) // n
    return T + (hi - T) * (s + u) / K


def empirical_measure(sigma: float, T: float, n: int, sys: CharacterSystem, ctxs, seed: int = 0,
                      threads: int = 1, track: TrackingConfig = TrackingConfig(), strata: int | None = None,
                      max_skip: float = 0.01) -> EmpiricalMeasure:
    """Samples of L(sigma + it) at stratified random t in [T, 2T]."""
    if not 0.5 < sigma < 1:
        raise DomainError("empirical_measure needs 1/2 < sigma < 1")
    ts = stratified_points(T, n, seed, strata)

    def one(t):
        try:
            return log_vector(sigma, float(t), sys, ctxs, track).components
        except BranchTrackingFailure:
            return None

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(one, ts))
    else:
        rows = [one(t) for t in ts]
    keep = [i for i, r in enumerate(rows) if r is not None and np.all(np.isfinite(r))]
    skipped = n - len(keep)
    if skipped >= max_skip * n and skipped > 0:
        raise TooManySkips(f"{skipped} of {n} samples failed branch tracking")
    samples = np.array([rows[i] for i in keep]).reshape(len(keep), 2 * sys.J)
    return EmpiricalMeasure(float(sigma), float(T), samples, ts[keep], skipped, seed)


def _as_samples(x) -> np.ndarray:
    return x.samples if isinstance(x, EmpiricalMeasure) else np.asarray(x, float)


def psi_rect(meas, lo, hi) -> float:
    """Fraction of samples x with lo < x <= hi in every coordinate (infinite bounds allowed)."""
    S = _as_samples(meas)
    if S.shape[0] == 0:
        return math.nan
    inside = np.all((S > np.asarray(lo)) & (S <= np.asarray(hi)), axis=1)
    return float(np.mean(inside))


@dataclass(frozen=True, eq=False)
class RectFamily:
    lo: np.ndarray  # (m, d)
    hi: np.ndarray
    seed: int
    n_anchored: int

    def __len__(self) -> int:
        return self.lo.shape[0]


def rect_family(anchor_samples, seed: int = 0, n_random: int = 10_000, quantiles=QUANTILES) -> RectFamily:
    """Half-spaces through the anchor quantiles of each coordinate, plus seeded random boxes.

    Random boxes pick, per coordinate, either the whole line (probability 1/2) or an interval
    between two random anchor quantiles; the family depends only on the anchors and the seed.
    """
    S = _as_samples(anchor_samples)
    d = S.shape[1]
    Q = np.quantile(S, quantiles, axis=0)  # (nq, d)
    los, his = [], []
    for qi in range(len(quantiles)):
        for c in range(d):
            lo = np.full(d, -np.inf)
            hi = np.full(d, np.inf)
            hi[c] = Q[qi, c]
            los.append(lo.copy())
            his.append(hi.copy())
            hi[c] = np.inf
            lo[c] = Q[qi, c]
            los.append(lo)
            his.append(hi)
    n_anch = len(los)
    if n_random:
        rng = np.random.Generator(np.random.Philox(key=seed))
        u = np.sort(rng.random((n_random, d, 2)), axis=2)
        full = rng.random((n_random, d)) < 0.5
        qlo = np.empty((n_random, d))
        qhi = np.empty((n_random, d))
        for c in range(d):
            qlo[:, c] = np.quantile(S[:, c], u[:, c, 0])
            qhi[:, c] = np.quantile(S[:, c], u[:, c, 1])
        qlo[full] = -np.inf
        qhi[full] = np.inf
        los.extend(qlo)
        his.extend(qhi)
    return RectFamily(np.array(los), np.array(his), int(seed), n_anch)


def psi_family(samples, family: RectFamily, block: int = 256) -> np.ndarray:
    S = _as_samples(samples)
    out = np.empty(len(family))
    for b in range(0, len(family), block):
        lo = family.lo[b : b + block]
        hi = family.hi[b : b + block]
        inside = np.all((S[None, :, :] > lo[:, None, :]) & (S[None, :, :] <= hi[:, None, :]), axis=2)
        out[b : b + block] = inside.mean(axis=1)
    return out


@dataclass(frozen=True)
class DiscrepancyReport:
    sigma: float
    T: float
    n_emp: int
    n_model: int
    family_seed: int
    sup_lower_bound: float
    stderr: float
    argmax: int

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "T": self.T,
            "n_emp": self.n_emp,
            "n_model": self.n_model,
            "family_seed": self.family_seed,
            "sup_lower_bound": self.sup_lower_bound,
            "stderr": self.stderr,
        }


def discrepancy_sup(emp, model, family: RectFamily, sigma: float = math.nan, T: float = math.nan) -> DiscrepancyReport:
    """max over the family of |Psi_T(R) - Psi(R)|, with the binomial stderr at the maximizer."""
    E = _as_samples(emp)
    M = _as_samples(model)
    pe = psi_family(E, family)
    pm = psi_family(M, family)
    d = np.abs(pe - pm)
    i = int(np.argmax(d))
    ne, nm = E.shape[0], M.shape[0]
    se = math.sqrt(pe[i] * (1 - pe[i]) / ne + pm[i] * (1 - pm[i]) / nm)
    if isinstance(emp, EmpiricalMeasure):
        sigma, T = emp.sigma, emp.T
    return DiscrepancyReport(float(sigma), float(T), ne, nm, family.seed, float(d[i]), se, i)


# ---------------------------------------------------------------------------
# Tsang smoothing


def _wcot(w: float) -> float:
    """w cot(pi w) for 0 <= w <= 1/2, with the limit 1/pi at 0."""
    if w < 1e-4:
        pw = math.pi * w
        return (1.0 - pw * pw / 3.0) / math.pi
    return w / math.tan(math.pi * w)


def tsang_G(u: float) -> float:
    """G(u) = 2u/pi + 2(1-u) u cot(pi u) on [0, 1], continuous at both ends (G(0) = 2/pi, G(1) = 0)."""
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"G is defined on [0, 1], got {u}")
    if u <= 0.5:
        return 2 * u / math.pi + 2 * (1 - u) * _wcot(u)
    return 2 * u / math.pi - 2 * u * _wcot(1 - u)


def _G_vec(v: np.ndarray) -> np.ndarray:
    w = np.minimum(v, 1 - v)
    pw = np.pi * w
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(w < 1e-4, (1.0 - pw * pw / 3.0) / np.pi, w / np.tan(pw))
    return np.where(v <= 0.5, 2 * v / np.pi + 2 * (1 - v) * k, 2 * v / np.pi - 2 * v * k)


_GL = np.polynomial.legendre.leggauss(24)


def _smoothed(alpha, beta, eta, x, npan):
    xg, wg = _GL
    edges = np.linspace(0.0, 1.0, npan + 1)
    a, b = edges[:-1, None], edges[1:, None]
    v = (0.5 * (b - a) * (xg[None, :] + 1) + a).ravel()
    w = (0.5 * (b - a) * wg[None, :]).ravel()
    G = _G_vec(v)
    u = eta * v
    # Im[e^{2 pi i u x} f(u)] with f(u) = (e^{-2 pi i alpha u} - e^{-2 pi i beta u}) / 2
    g = 0.5 * (np.sin(2 * math.pi * u * (x - alpha)) - np.sin(2 * math.pi * u * (x - beta)))
    return float(np.sum(w * G * g / v))


def tsang_indicator(alpha: float, beta: float, eta: float, x: float, tol: float = 1e-12) -> float:
    """Band-limited approximation Im int_0^eta G(u/eta) e^{2 pi i u x} f_{alpha,beta}(u) du/u of 1_[alpha,beta](x).

    Composite Gauss-Legendre in v = u/eta, panels doubled until two levels agree.
    """
    if not alpha < beta:
        raise DomainError("need alpha < beta")
    if eta <= 0:
        raise DomainError("need eta > 0")
    cycles = eta * (abs(x - alpha) + abs(x - beta))
    npan = max(4, int(cycles) + 4)
    prev = _smoothed(alpha, beta, eta, x, npan)
    for _ in range(12):
        npan *= 2
        cur = _smoothed(alpha, beta, eta, x, npan)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return cur


def fejer_bound(alpha: float, beta: float, eta: float, x: float) -> float:
    """(sin pi eta (x-alpha) / (pi eta (x-alpha)))^2 + the same at beta."""

    def F(y):
        z = math.pi * eta * y
        return 1.0 if z == 0 else (math.sin(z) / z) ** 2

    return F(x - alpha) + F(x - beta)

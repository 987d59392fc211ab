"""Random Euler-product model.

Each rational prime p gets an independent uniform X(p) on the unit circle and

    log L_j(sigma, X) = sum_P sum_k chi_j(P)^k X(p)^k / (k N(P)^(k sigma)).

Grouped per rational prime: a split p carries (chi(P1)^k + chi(P2)^k)/k =
2 cos(2 pi k theta)/k, a ramified p carries chi(P)^k/k with N(P) = p, and an
inert p carries 1/k with N(P) = p^2, multiplying X(p)^k as written in the
model (X(p)^k and X(p)^(2k) have the same law).

Uniforms come from a Philox counter-based generator keyed by
(base_seed, sample_index); the prime index is the position in that stream, so
any sample can be regenerated on its own and block/thread layout never
changes a result.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from ._arith import primes_upto
from .errors import ConfigError, DegenerateConfig, EstimatorDisagreement
from .lfun import LogVector, assemble_components, log_coeffs
from .qf import INERT, CharacterSystem, EulerTable

_NB = dict(nogil=True, cache=True)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ModelConfig:
    P_max: int = 100_000
    k_max: int = 3
    n_samples: int = 10_000
    base_seed: int = 20240917
    sigmas: tuple = ()
    block: int = 2048
    threads: int = 1

    def __post_init__(self):
        if self.P_max < 2:
            raise ConfigError("P_max must be at least 2")
        if self.k_max < 1:
            raise ConfigError("k_max must be at least 1")
        if self.n_samples < 1 or self.block < 1 or self.threads < 1:
            raise ConfigError("n_samples, block and threads must be positive")
        if not 0 <= self.base_seed <= _MASK64:
            raise ConfigError("base_seed must fit in 64 bits")


@dataclass(frozen=True)
class RandomSample:
    seed: int
    sample_index: int
    P_max: int
    primes: np.ndarray
    values: np.ndarray  # X(p), unit modulus

    def as_dict(self) -> dict[int, complex]:
        return dict(zip(self.primes.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    std_error: float
    n: int
    rejected: int = 0
    tail_bound: float = 0.0
    estimator: str = "mc"

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.std_error,
            "n": self.n,
            "rejected": self.rejected,
            "tail_bound": self.tail_bound,
            "estimator": self.estimator,
        }


@dataclass(frozen=True)
class MPrimeEstimate:
    pathwise: MomentEstimate
    finite_difference: MomentEstimate
    combined_stderr: float

    @property
    def mean(self) -> float:
        return self.pathwise.mean

    @property
    def std_error(self) -> float:
        return self.pathwise.std_error

    @property
    def discrepancy(self) -> float:
        return abs(self.pathwise.mean - self.finite_difference.mean)


# ---------------------------------------------------------------------------
# random numbers


def uniforms(base_seed: int, sample_index: int, n: int) -> np.ndarray:
    """U_0..U_{n-1} in [0, 1) for one sample (53-bit doubles)."""
    bg = np.random.Philox(key=((base_seed & _MASK64) << 64) | (sample_index & _MASK64))
    raw = bg.random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _uniform_block(cfg: ModelConfig, start: int, count: int, n: int) -> np.ndarray:
    out = np.empty((count, n))
    for i in range(count):
        out[i] = uniforms(cfg.base_seed, start + i, n)
    return out


def sample_x(cfg: ModelConfig, sample_index: int) -> RandomSample:
    primes = primes_upto(cfg.P_max)
    u = uniforms(cfg.base_seed, sample_index, primes.size)
    vals = np.exp(2j * np.pi * u)
    return RandomSample(cfg.base_seed, int(sample_index), cfg.P_max, primes, vals)


# ---------------------------------------------------------------------------
# per-prime model coefficients


@dataclass(frozen=True, eq=False)
class ModelTerms:
    """coef[j, i, k-1] and log N(P) so that log L_j = sum coef * X^k * exp(-k sigma logN)."""

    primes: np.ndarray
    kinds: np.ndarray
    coef: np.ndarray
    logN: np.ndarray
    k_max: int
    log_c: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)


def model_terms(table: EulerTable, P_max: int, k_max: int) -> ModelTerms:
    if P_max > table.P_max:
        raise ConfigError(f"P_max={P_max} exceeds the Euler table ({table.P_max})")
    sel = table.primes <= P_max
    primes = table.primes[sel]
    kinds = table.kinds[sel]
    theta = table.prime_angles[sel]  # (np, J)
    J = table.J
    k = np.arange(1, k_max + 1)
    coef = np.empty((J, primes.size, k_max))
    for j in range(J):
        c = np.cos(2 * np.pi * np.outer(theta[:, j], k))
        # split: chi(P1)^k + chi(P2)^k; ramified: chi(P)^k; inert: N(P) = p^2, chi = 1
        c = np.where((kinds == INERT)[:, None], 1.0, np.where((kinds > 0)[:, None], 2.0 * c, np.round(c)))
        coef[j] = c / k[None, :]
    logN = np.log(primes.astype(float)) * np.where(kinds == INERT, 2.0, 1.0)
    sys = table.system
    return ModelTerms(primes, kinds, coef, logN, k_max, log_coeffs(sys.coeffs), np.asarray(sys.coeffs, float))


@nb.njit(**_NB)
def _model_kernel(U, coef, logN, mag, want_d, out, dout):
    """log L_j and d/dsigma log L_j for a block of samples at several sigma."""
    nb_, np_ = U.shape
    J = coef.shape[0]
    kmax = coef.shape[2]
    ns = mag.shape[0]
    xk = np.empty(kmax, dtype=np.complex128)
    for b in range(nb_):
        for s in range(ns):
            for j in range(J):
                out[b, s, j] = 0.0
                dout[b, s, j] = 0.0
        for i in range(np_):
            ang = 2.0 * math.pi * U[b, i]
            x = complex(math.cos(ang), math.sin(ang))
            xk[0] = x
            for k in range(1, kmax):
                xk[k] = xk[k - 1] * x
            for s in range(ns):
                for k in range(kmax):
                    m = mag[s, i, k]
                    if m == 0.0:
                        continue
                    w = m * xk[k]
                    for j in range(J):
                        term = coef[j, i, k] * w
                        out[b, s, j] += term
                        if want_d:
                            dout[b, s, j] -= (k + 1) * logN[i] * term


def _mags(terms: ModelTerms, sigmas) -> np.ndarray:
    k = np.arange(1, terms.k_max + 1)
    mag = np.exp(-np.asarray(sigmas, float)[:, None, None] * terms.logN[None, :, None] * k[None, None, :])
    mag[mag < 1e-300] = 0.0
    return mag


def model_logs(sigmas, cfg: ModelConfig, terms: ModelTerms, derivative: bool = False, start: int = 0, count: int | None = None):
    """log L_j(sigma, X_i) for samples i in [start, start+count), shape (n, n_sigma, J).

    Returns (logL, dlogL) with dlogL None unless derivative is set.
    """
    n = cfg.n_samples if count is None else count
    sig = np.atleast_1d(np.asarray(sigmas, float))
    mag = _mags(terms, sig)
    J = terms.coef.shape[0]
    out = np.empty((n, sig.size, J), dtype=complex)
    dout = np.empty((n, sig.size, J), dtype=complex) if derivative else np.empty((1, sig.size, J), dtype=complex)
    nprime = terms.primes.size
    blocks = [(b0, min(cfg.block, n - b0)) for b0 in range(0, n, cfg.block)]

    def work(b):
        b0, cnt = b
        U = _uniform_block(cfg, start + b0, cnt, nprime)
        o = np.empty((cnt, sig.size, J), dtype=complex)
        d = np.empty((cnt, sig.size, J), dtype=complex)
        _model_kernel(U, terms.coef, terms.logN, mag, derivative, o, d)
        out[b0 : b0 + cnt] = o
        if derivative:
            dout[b0 : b0 + cnt] = d

    if cfg.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            list(ex.map(work, blocks))
    else:
        for b in blocks:
            work(b)
    return out, (dout if derivative else None)


def _terms_for(cfg: ModelConfig, table: EulerTable) -> ModelTerms:
    key = (id(table), cfg.P_max, cfg.k_max)
    hit = _terms_cache.get(key)
    if hit is not None and hit[0] is table:
        return hit[1]
    terms = model_terms(table, cfg.P_max, cfg.k_max)
    if len(_terms_cache) > 16:
        _terms_cache.clear()
    _terms_cache[key] = (table, terms)
    return terms


_terms_cache: dict = {}


# ---------------------------------------------------------------------------
# single-sample API


def log_l_random(sigma: float, X: RandomSample, j: int, table: EulerTable, k_max: int = 3) -> complex:
    terms = model_terms(table, X.P_max, k_max)
    x = X.values[: terms.primes.size]
    k = np.arange(1, k_max + 1)
    xk = x[:, None] ** k[None, :]
    mag = np.exp(-sigma * terms.logN[:, None] * k[None, :])
    return complex(np.sum(terms.coef[j] * mag * xk))


def bold_l_random(sigma: float, X: RandomSample, sys: CharacterSystem, table: EulerTable, k_max: int = 3) -> LogVector:
    logL = np.array([log_l_random(sigma, X, j, table, k_max) for j in range(sys.J)])
    lc = log_coeffs(sys.coeffs)
    return LogVector(float(sigma), math.nan, logL, lc, assemble_components(logL, lc))


def components_batch(logL: np.ndarray, log_c: np.ndarray) -> np.ndarray:
    """Vectorized assemble_components: (n, J) complex -> (n, 2J) real."""
    z = logL + log_c[None, :]
    J = z.shape[1]
    u = z.real.copy()
    v = z.imag.copy()
    u[:, : J - 1] -= z[:, J - 1 : J].real
    v[:, : J - 1] -= z[:, J - 1 : J].imag
    return np.concatenate([u, v], axis=1)


def model_vectors(sigma: float, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable, start: int = 0) -> np.ndarray:
    """2J-vectors L(sigma, X_i) for i < n_samples, shape (n, 2J)."""
    terms = _terms_for(cfg, table)
    logL, _ = model_logs([sigma], cfg, terms, start=start)
    return components_batch(logL[:, 0, :], terms.log_c)


# ---------------------------------------------------------------------------
# estimators


def tail_bound(sigma: float, P_max: int) -> float:
    """L2 size of the neglected primes, sqrt(sum_{p > P} 4 p^(-2 sigma)) (integral estimate)."""
    if sigma <= 0.5:
        return math.inf
    a = 2 * sigma - 1
    L = math.log(P_max)
    return math.sqrt(4 * P_max ** (-a) / (a * L))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return m, se


def _log_abs_F(logL: np.ndarray, coeffs: np.ndarray):
    F = np.sum(coeffs[None, ..., :] * np.exp(logL), axis=-1)
    a = np.abs(F)
    ok = a >= 1e-300
    return F, a, ok


def estimate_M(sigma: float, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable) -> MomentEstimate:
    """E log|sum_j c_j L_j(sigma, X)|."""
    if cfg.n_samples < 100:
        raise DegenerateConfig("estimate_M needs at least 100 samples")
    terms = _terms_for(cfg, table)
    logL, _ = model_logs([sigma], cfg, terms)
    _, a, ok = _log_abs_F(logL[:, 0, :], terms.coeffs)
    m, se = _mean_se(np.log(a[ok]))
    return MomentEstimate(m, se, int(ok.sum()), int((~ok).sum()), tail_bound(sigma, cfg.P_max), "mc")


def m_prime_samples(sigmas, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable, h: float = 1e-3,
                    chunk: int = 1 << 16):
    """Per-sample pathwise and central-difference derivatives of log|F| at each sigma.

    Returns (pathwise, fd), each of shape (n, len(sigmas)); rejected samples are NaN.
    """
    terms = _terms_for(cfg, table)
    sig = np.atleast_1d(np.asarray(sigmas, float))
    grid = np.concatenate([sig, sig - h, sig + h])
    c = terms.coeffs
    ns = sig.size
    n = cfg.n_samples
    path = np.empty((n, ns))
    fd = np.empty((n, ns))
    for b0 in range(0, n, chunk):
        cnt = min(chunk, n - b0)
        logL, dlogL = model_logs(grid, cfg, terms, derivative=True, start=b0, count=cnt)
        L = np.exp(logL)
        F = L @ c
        dF = (L * dlogL) @ c
        a = np.abs(F)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_ = np.real(dF[:, :ns] / F[:, :ns])
            f_ = (np.log(a[:, 2 * ns :]) - np.log(a[:, ns : 2 * ns])) / (2 * h)
        bad = (a < 1e-300).reshape(cnt, 3, ns).any(axis=1)
        p_[bad] = np.nan
        f_[bad] = np.nan
        path[b0 : b0 + cnt] = p_
        fd[b0 : b0 + cnt] = f_
    return path, fd


def estimate_M_prime(sigma: float, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable, h: float = 1e-3) -> MPrimeEstimate:
    """M'(sigma) by the pathwise derivative and by a common-random-number central difference."""
    if cfg.n_samples < 100:
        raise DegenerateConfig("estimate_M_prime needs at least 100 samples")
    path, fd = m_prime_samples([sigma], cfg, sys, table, h)
    return _mprime_from(path[:, 0], fd[:, 0], sigma, cfg)


def _mprime_from(path: np.ndarray, fd: np.ndarray, sigma: float, cfg: ModelConfig) -> MPrimeEstimate:
    ok = np.isfinite(path) & np.isfinite(fd)
    rej = int((~ok).sum())
    tb = tail_bound(sigma, cfg.P_max)
    m1, s1 = _mean_se(path[ok])
    m2, s2 = _mean_se(fd[ok])
    est = MPrimeEstimate(
        MomentEstimate(m1, s1, int(ok.sum()), rej, tb, "pathwise"),
        MomentEstimate(m2, s2, int(ok.sum()), rej, tb, "finite_difference"),
        math.hypot(s1, s2),
    )
    if est.discrepancy > 5 * est.combined_stderr:
        raise EstimatorDisagreement(
            f"M'({sigma}): pathwise {m1:.6g} vs finite difference {m2:.6g} (stderr {est.combined_stderr:.3g})"
        )
    return est


def char_fn_mc(w, z, sigma: float, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable) -> tuple[complex, float]:
    """E exp(i (w, z) . L(sigma, X)); returns (value, stderr of the complex mean)."""
    w = np.asarray(w, float)
    z = np.asarray(z, float)
    if not np.any(w) and not np.any(z):
        return 1.0 + 0j, 0.0
    V = model_vectors(sigma, cfg, sys, table)
    ph = V @ np.concatenate([w, z])
    e = np.exp(1j * ph)
    n = e.size
    se = math.sqrt((np.var(e.real, ddof=1) + np.var(e.imag, ddof=1)) / n)
    return complex(np.mean(e)), se


def char_fn_bessel_axis(y: float, sigma: float, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable,
                        first_order: bool = False) -> complex:
    """Psi-hat(y, 0, ..., 0) as a product of one-dimensional circle averages.

    With first_order set, each factor is replaced by J0((a_1(p) - a_J(p)) y / p^sigma).
    """
    if y == 0:
        return 1.0 + 0j
    if sys.J < 2:
        raise ConfigError("the axis characteristic function needs J >= 2")
    terms = _terms_for(cfg, table)
    J = sys.J
    dc = terms.coef[0] - terms.coef[J - 1]  # (np, k)
    k = np.arange(1, terms.k_max + 1)
    mag = np.exp(-sigma * terms.logN[:, None] * k[None, :])
    amp = dc * mag
    c = terms.coeffs
    pref = np.exp(1j * y * math.log(abs(c[0] / c[J - 1])))
    if first_order:
        return complex(pref * np.prod(bessel_j0(amp[:, 0] * y)))
    live = np.flatnonzero(np.any(amp != 0, axis=1))
    logs = 0j
    # trapezoid rule on the circle: exact for trigonometric polynomials of degree < N
    for i in live:
        reach = y * np.sum(np.abs(amp[i]) * k)
        N = int(max(64, 2 * reach + 64))
        th = 2 * np.pi * np.arange(N) / N
        f = np.cos(np.outer(th, k)) @ amp[i]
        logs += np.log(np.mean(np.exp(1j * y * f)))
    return complex(pref * np.exp(logs))


# ---------------------------------------------------------------------------
# Bessel J0


_J0_ASY_P = (1.0, -9.0 / 128, 3675.0 / 32768, -2401245.0 / 4194304, 13043905875.0 / 2147483648,
             -30241281245175.0 / 274877906944)
_J0_ASY_Q = (-1.0 / 8, 75.0 / 1024, -59535.0 / 262144, 57972915.0 / 33554432, -418854310875.0 / 68719476736)


@nb.njit(**_NB)
def _j0_scalar(x):
    x = abs(x)
    if x < 4.0:
        # power series sum (-x^2/4)^k / (k!)^2
        q = -0.25 * x * x
        term = 1.0
        tot = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            tot += term
            if abs(term) < 1e-17 * max(abs(tot), 1e-3):
                break
        return tot
    if x < 50.0:
        # Miller backward recurrence normalized by J0 + 2 sum J_2k = 1
        n0 = int(1.2 * x) + 40
        if n0 % 2 == 1:
            n0 += 1
        jp1 = 0.0
        jn = 1e-30
        norm = 0.0
        j0 = 0.0
        for n in range(n0, 0, -1):
            jm1 = 2.0 * n / x * jn - jp1
            jp1 = jn
            jn = jm1
            if abs(jn) > 1e250:
                jn *= 1e-250
                jp1 *= 1e-250
                norm *= 1e-250
            if (n - 1) % 2 == 0 and n - 1 > 0:
                norm += 2.0 * jn
        j0 = jn
        norm += j0
        return j0 / norm
    # Hankel asymptotic expansion
    y = 1.0 / (x * x)
    P = 0.0
    yp = 1.0
    for c in _J0_ASY_P_T:
        P += c * yp
        yp *= y
    Q = 0.0
    yp = 1.0 / x
    for c in _J0_ASY_Q_T:
        Q += c * yp
        yp *= y
    chi = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (P * math.cos(chi) - Q * math.sin(chi))


_J0_ASY_P_T = np.array(_J0_ASY_P)
_J0_ASY_Q_T = np.array(_J0_ASY_Q)


@nb.vectorize(["float64(float64)"], cache=True)
def _j0_vec(x):
    return _j0_scalar(x)


def bessel_j0(x):
    """Bessel function J0 (scalar or array)."""
    r = _j0_vec(np.asarray(x, dtype=float))
    return float(r) if np.ndim(r) == 0 else r


# ---------------------------------------------------------------------------
# moment checks


def window_sum_moments(sigma: float, y: float, z: float, j: int, ks, cfg: ModelConfig, table: EulerTable):
    """E|sum_{y<p<=z} a_j(p) X(p) / p^sigma|^(2k) by MC, with the bound 2^(2k) k! (sum p^(-2 sigma))^k.

    Returns a list of (k, mean, stderr, bound).
    """
    sel = (table.primes > y) & (table.primes <= z)
    primes = table.primes[sel]
    idx = np.flatnonzero(table.primes <= z)
    a = np.array([table.coeff(j, int(p), 1) for p in primes])
    wts = a * primes.astype(float) ** (-sigma)
    first = int(np.flatnonzero(sel)[0]) if primes.size else 0
    S = np.empty(cfg.n_samples, dtype=complex)
    for i in range(cfg.n_samples):
        u = uniforms(cfg.base_seed, i, idx.size)[first : first + primes.size]
        S[i] = np.sum(wts * np.exp(2j * np.pi * u))
    v = np.sum(primes.astype(float) ** (-2 * sigma))
    out = []
    for k in ks:
        x = np.abs(S) ** (2 * k)
        m, se = _mean_se(x)
        out.append((int(k), m, se, 2.0 ** (2 * k) * math.factorial(k) * v**k))
    return out


def log_moments(sigma: float, ks, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable):
    """E|log|F||^(2k) and E|log c_j L_j|^(2k) (per j) over model samples.

    Returns (list of (k, mean, se) for F, dict j -> list of (k, mean, se)).
    """
    terms = _terms_for(cfg, table)
    logL, _ = model_logs([sigma], cfg, terms)
    logL = logL[:, 0, :]
    _, a, ok = _log_abs_F(logL, terms.coeffs)
    lf = np.abs(np.log(a[ok]))
    outF = [(int(k), *_mean_se(lf ** (2 * k))) for k in ks]
    outj = {}
    z = np.abs(logL + terms.log_c[None, :])
    for j in range(sys.J):
        if not np.isfinite(terms.log_c[j].real):
            continue
        outj[j] = [(int(k), *_mean_se(z[:, j] ** (2 * k))) for k in ks]
    return outF, outj


def variance_direct(sigma: float, j: int, table: EulerTable, P_max: int, k_max: int = 3) -> float:
    """E|log L_j(sigma, X)|^2 summed exactly: distinct powers of X(p) are orthogonal."""
    terms = model_terms(table, P_max, k_max)
    k = np.arange(1, k_max + 1)
    mag = np.exp(-sigma * terms.logN[:, None] * k[None, :])
    return float(np.sum((terms.coef[j] * mag) ** 2))


def estimate_json(est: MomentEstimate, sigma: float, cfg: ModelConfig) -> dict:
    return {
        "sigma": float(sigma),
        "P_max": cfg.P_max,
        "k_max": cfg.k_max,
        "n": est.n,
        "mean": est.mean,
        "stderr": est.std_error,
        "tail_bound": est.tail_bound,
        "estimator": est.estimator,
    }

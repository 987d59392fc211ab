"""Zeros of E(s, Q) in rectangles: argument principle, isolation, Jensen and Littlewood integrals."""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .errors import (
    BoundaryZero,
    ConfigError,
    ConvergenceFailure,
    DomainError,
    NegativeDensity,
    NonIntegralWinding,
)
from .lfun import EvalContext, FormBank, epstein_zeta_line
from .rmodel import ModelConfig, m_prime_samples, tail_bound
from .qf import CharacterSystem, EulerTable

JITTER = (0.0, 1e-6, -1e-6, 3e-6, -3e-6)
SIGMA0 = 3.0


@dataclass(frozen=True)
class Rectangle:
    sigma_lo: float
    sigma_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not (self.sigma_lo < self.sigma_hi and self.t_lo < self.t_hi):
            raise DomainError(f"degenerate rectangle {self}")

    def shifted(self, dt: float) -> "Rectangle":
        return Rectangle(self.sigma_lo, self.sigma_hi, self.t_lo + dt, self.t_hi + dt)

    def contains(self, z: complex) -> bool:
        return self.sigma_lo <= z.real <= self.sigma_hi and self.t_lo <= z.imag <= self.t_hi

    @property
    def width(self) -> float:
        return self.sigma_hi - self.sigma_lo

    @property
    def height(self) -> float:
        return self.t_hi - self.t_lo

    def split(self) -> tuple["Rectangle", "Rectangle"]:
        if self.height >= self.width:
            m = 0.5 * (self.t_lo + self.t_hi)
            return Rectangle(self.sigma_lo, self.sigma_hi, self.t_lo, m), Rectangle(self.sigma_lo, self.sigma_hi, m, self.t_hi)
        m = 0.5 * (self.sigma_lo + self.sigma_hi)
        return Rectangle(self.sigma_lo, m, self.t_lo, self.t_hi), Rectangle(m, self.sigma_hi, self.t_lo, self.t_hi)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.sigma_lo, self.sigma_hi, self.t_lo, self.t_hi)


@dataclass(frozen=True)
class ZeroRecord:
    beta: float
    gamma: float
    residual: float
    cell: tuple
    converged: bool = True
    verified: bool | None = None

    @property
    def rho(self) -> complex:
        return complex(self.beta, self.gamma)


@dataclass(frozen=True)
class WindingConfig:
    max_step_change: float = math.pi / 2
    min_abs: float = 1e-9
    min_step: float = 1e-10
    max_rounds: int = 80
    step_scale: float = 0.5
    sigma_step: float = 1.0 / 32
    integrality: float = 1e-6


# ---------------------------------------------------------------------------
# evaluation with memo


class LineEvaluator:
    """E(sigma + i t) with batching over sigma and a value memo keyed by (sigma, t)."""

    def __init__(self, f, D: int | None = None, threads: int = 1):
        if isinstance(f, (EvalContext, FormBank)):
            ctx = f
            D = ctx.D if D is None else D
            f = lambda sig, t: epstein_zeta_line(sig, t, ctx)  # noqa: E731
        self.f = f
        self.D = D
        self.threads = threads
        self.memo: dict = {}
        self.calls = 0

    def line(self, sigmas, t: float) -> np.ndarray:
        sig = [float(s) for s in np.atleast_1d(sigmas)]
        t = float(t)
        miss = sorted({s for s in sig if (s, t) not in self.memo})
        if miss:
            vals = np.asarray(self.f(np.array(miss), t), dtype=complex)
            self.calls += 1
            for s, v in zip(miss, vals):
                self.memo[(s, t)] = complex(v)
        return np.array([self.memo[(s, t)] for s in sig])

    def lines(self, sigmas, ts) -> np.ndarray:
        """Values at sigmas x ts, shape (len(ts), len(sigmas))."""
        ts = [float(t) for t in ts]
        if self.threads > 1 and len(ts) > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                rows = list(ex.map(lambda t: self._compute(sigmas, t), ts))
            for t, row in zip(ts, rows):
                for s, v in zip(np.atleast_1d(sigmas), row):
                    self.memo[(float(s), t)] = complex(v)
        return np.array([self.line(sigmas, t) for t in ts]).reshape(len(ts), -1)

    def _compute(self, sigmas, t):
        sig = [float(s) for s in np.atleast_1d(sigmas)]
        if all((s, t) in self.memo for s in sig):
            return np.array([self.memo[(s, t)] for s in sig])
        return np.asarray(self.f(np.array(sig), t), dtype=complex)

    def at(self, z: complex) -> complex:
        return complex(self.line([z.real], z.imag)[0])

    def t_step(self, t: float, scale: float) -> float:
        """Dyadic initial t-spacing, about scale / log(|t| sqrt|D| / 2 pi + 3)."""
        q = math.sqrt(abs(self.D)) if self.D else 1.0
        target = scale / math.log(abs(t) * q / (2 * math.pi) + 3.0)
        return 2.0 ** math.floor(math.log2(target))


def evaluator(ctx, threads: int = 1) -> LineEvaluator:
    return ctx if isinstance(ctx, LineEvaluator) else LineEvaluator(ctx, threads=threads)


def _grid(lo: float, hi: float, h: float) -> np.ndarray:
    k0 = math.floor(lo / h) + 1
    k1 = math.ceil(hi / h) - 1
    inner = np.arange(k0, k1 + 1) * h
    inner = inner[(inner > lo + 1e-3 * h) & (inner < hi - 1e-3 * h)]
    return np.concatenate([[lo], inner, [hi]])


def _bad_segments(vals: np.ndarray, pts: np.ndarray, cfg: WindingConfig) -> np.ndarray:
    """Indices i where the step vals[i] -> vals[i+1] is too large."""
    a, b = vals[:-1], vals[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.abs(np.log(b / a))
    bad = ~(d < cfg.max_step_change)
    if np.any(bad & (np.diff(pts) < cfg.min_step)):
        raise BoundaryZero("argument steps do not resolve at the minimal step")
    return np.flatnonzero(bad)


@dataclass
class Boundary:
    """Counterclockwise samples of E on the rectangle boundary."""

    rect: Rectangle
    z: np.ndarray
    values: np.ndarray

    @property
    def dlog(self) -> np.ndarray:
        return np.log(np.roll(self.values, -1) / self.values)

    @property
    def raw_winding(self) -> float:
        return float(np.sum(self.dlog.imag) / (2 * math.pi))

    def centroid_moment(self, k: int = 1) -> complex:
        """(1/2 pi i) sum z_mid^k dlog E, which approximates the sum of rho^k over enclosed zeros."""
        zm = 0.5 * (self.z + np.roll(self.z, -1))
        return complex(np.sum(zm**k * self.dlog) / (2j * math.pi))


def boundary(rect: Rectangle, ctx, cfg: WindingConfig = WindingConfig()) -> Boundary:
    ev = evaluator(ctx)
    sl, sh = rect.sigma_lo, rect.sigma_hi
    ht = ev.t_step(max(abs(rect.t_lo), abs(rect.t_hi)), cfg.step_scale)
    ts = _grid(rect.t_lo, rect.t_hi, min(ht, rect.height / 2))
    ss = _grid(sl, sh, min(cfg.sigma_step, ht, rect.width / 2))
    V = ev.lines([sl, sh], ts)
    B = ev.line(ss, rect.t_lo)
    T = ev.line(ss, rect.t_hi)
    for _ in range(cfg.max_rounds):
        bt = np.union1d(_bad_segments(V[:, 0], ts, cfg), _bad_segments(V[:, 1], ts, cfg))
        bs = np.union1d(_bad_segments(B, ss, cfg), _bad_segments(T, ss, cfg))
        if bt.size == 0 and bs.size == 0:
            break
        if bt.size:
            nt = 0.5 * (ts[bt] + ts[bt + 1])
            ts = np.concatenate([ts, nt])
            V = np.concatenate([V, ev.lines([sl, sh], nt)])
            o = np.argsort(ts, kind="stable")
            ts, V = ts[o], V[o]
        if bs.size:
            ns = 0.5 * (ss[bs] + ss[bs + 1])
            ss = np.concatenate([ss, ns])
            B = np.concatenate([B, ev.line(ns, rect.t_lo)])
            T = np.concatenate([T, ev.line(ns, rect.t_hi)])
            o = np.argsort(ss, kind="stable")
            ss, B, T = ss[o], B[o], T[o]
    else:
        raise BoundaryZero("boundary refinement did not settle")
    z = np.concatenate([
        ss[:-1] + 1j * rect.t_lo,
        sh + 1j * ts[:-1],
        ss[::-1][:-1] + 1j * rect.t_hi,
        sl + 1j * ts[::-1][:-1],
    ])
    vals = np.concatenate([B[:-1], V[:-1, 1], T[::-1][:-1], V[::-1, 0][:-1]])
    if np.min(np.abs(vals)) < cfg.min_abs:
        raise BoundaryZero(f"|E| = {np.min(np.abs(vals)):.3g} on the boundary of {rect.as_tuple()}")
    return Boundary(rect, z, vals)


def winding_count(rect: Rectangle, ctx, cfg: WindingConfig = WindingConfig()) -> int:
    """Number of zeros of E inside rect (argument principle)."""
    raw = boundary(rect, ctx, cfg).raw_winding
    n = round(raw)
    if abs(raw - n) >= cfg.integrality:
        raise NonIntegralWinding(f"winding {raw} is not integral")
    return int(n)


def jittered(fn, rect: Rectangle, *args, **kw):
    """Run fn(rect') over the deterministic t-jitter sequence until no boundary zero is hit."""
    last = None
    for dt in JITTER:
        try:
            return fn(rect.shifted(dt) if dt else rect, *args, **kw)
        except BoundaryZero as e:
            last = e
    raise last


def count_rect(rect: Rectangle, ctx, cfg: WindingConfig = WindingConfig()) -> int:
    return jittered(winding_count, rect, ctx, cfg)


def count_strip(sigma1: float, sigma2: float, T: float, ctx, cfg: WindingConfig = WindingConfig()) -> int:
    """N_E(sigma1, sigma2; T): zeros with sigma1 < beta <= sigma2 and T <= gamma <= 2T."""
    if not 0.5 < sigma1 < sigma2:
        raise DomainError("count_strip needs 1/2 < sigma1 < sigma2")
    return count_rect(Rectangle(sigma1, sigma2, T, 2 * T), ctx, cfg)


def count_window(sigma1: float, sigma2: float, t1: float, t2: float, ctx, cfg: WindingConfig = WindingConfig()) -> int:
    return count_rect(Rectangle(sigma1, sigma2, t1, t2), ctx, cfg)


# ---------------------------------------------------------------------------
# isolation


def muller(F, z0: complex, h: complex = 1e-3, tol: float = 1e-10, maxit: int = 60, polish: float = 1e-3):
    """Muller iteration from z0 - h, z0 + h, z0.  Returns (root, |F(root)|, converged).

    Iterates until |F| < polish * tol or the step stalls; converged means |F| < tol.
    """
    x0, x1, x2 = z0 - h, z0 + h, complex(z0)
    f0, f1, f2 = F(x0), F(x1), F(x2)
    best = (x2, abs(f2))
    for _ in range(maxit):
        if abs(f2) < polish * tol:
            return x2, abs(f2), True
        q = (x2 - x1) / (x1 - x0)
        A = q * f2 - q * (1 + q) * f1 + q * q * f0
        B = (2 * q + 1) * f2 - (1 + q) ** 2 * f1 + q * q * f0
        C = (1 + q) * f2
        r = cmath.sqrt(B * B - 4 * A * C)
        den = B + r if abs(B + r) >= abs(B - r) else B - r
        if den == 0:
            break
        x3 = x2 - (x2 - x1) * 2 * C / den
        f3 = F(x3)
        if abs(f3) < best[1]:
            best = (x3, abs(f3))
        small = abs(x3 - x2) < 1e-15 * (1 + abs(x3))
        x0, x1, x2 = x1, x2, x3
        f0, f1, f2 = f1, f2, f3
        if small:
            break
    return best[0], best[1], best[1] < tol


def _isolate(rect: Rectangle, bd: Boundary, ev: LineEvaluator, tol: float) -> ZeroRecord | None:
    guess = bd.centroid_moment(1)
    if not rect.contains(guess):
        guess = complex(0.5 * (rect.sigma_lo + rect.sigma_hi), 0.5 * (rect.t_lo + rect.t_hi))
    h = 1e-3 * max(min(rect.width, rect.height), 1e-3)
    z, res, ok = muller(ev.at, guess, h, tol)
    if ok and rect.contains(z):
        return ZeroRecord(z.real, z.imag, res, rect.as_tuple(), True)
    return None


def verify_zero(z: ZeroRecord, ctx, radius: float = 1e-4, cfg: WindingConfig = WindingConfig()) -> bool:
    sq = Rectangle(z.beta - radius, z.beta + radius, z.gamma - radius, z.gamma + radius)
    try:
        return winding_count(sq, ctx, cfg) == 1
    except (BoundaryZero, NonIntegralWinding):
        return False


def _split_at(rect: Rectangle, frac: float) -> tuple[Rectangle, Rectangle]:
    if rect.height >= rect.width:
        m = rect.t_lo + frac * rect.height
        return Rectangle(rect.sigma_lo, rect.sigma_hi, rect.t_lo, m), Rectangle(rect.sigma_lo, rect.sigma_hi, m, rect.t_hi)
    m = rect.sigma_lo + frac * rect.width
    return Rectangle(rect.sigma_lo, m, rect.t_lo, rect.t_hi), Rectangle(m, rect.sigma_hi, rect.t_lo, rect.t_hi)


_CUTS = (0.5, 0.5 + 1e-3, 0.5 - 1e-3, 0.5 + 1e-2, 0.5 - 1e-2)


def _subdivide(rect: Rectangle, ev: LineEvaluator, cfg: WindingConfig):
    last = None
    for frac in _CUTS:
        halves = _split_at(rect, frac)
        try:
            return [(h, boundary(h, ev, cfg)) for h in halves]
        except BoundaryZero as e:
            last = e
    raise ConvergenceFailure(f"no zero-free cut found in {rect.as_tuple()}") from last


def _winding_of(bd: Boundary, cfg: WindingConfig) -> int:
    raw = bd.raw_winding
    n = round(raw)
    if abs(raw - n) >= cfg.integrality:
        raise NonIntegralWinding(f"winding {raw} is not integral on {bd.rect.as_tuple()}")
    return int(n)


def list_zeros(rect: Rectangle, ctx, cfg: WindingConfig = WindingConfig(), tol: float = 1e-10,
               chunk: float = 4.0, max_depth: int = 40, verify: bool = True) -> list[ZeroRecord]:
    """Zeros inside rect, sorted by gamma.

    The t-range is cut into chunks, cells with winding >= 2 are bisected, and each cell
    with winding 1 is refined by Muller's method from its argument-principle centroid.
    Cells where the iteration fails are reported with converged=False.
    """
    ev = evaluator(ctx)
    nchunk = max(1, math.ceil(rect.height / chunk))
    edges = np.linspace(rect.t_lo, rect.t_hi, nchunk + 1)
    cells = []
    for a, b in zip(edges[:-1], edges[1:]):
        bd = jittered(boundary, Rectangle(rect.sigma_lo, rect.sigma_hi, a, b), ev, cfg)
        cells.append((bd.rect, bd))
    out: list[ZeroRecord] = []
    stack = [(c, bd, 0) for c, bd in cells][::-1]
    while stack:
        cell, bd, depth = stack.pop()
        n = _winding_of(bd, cfg)
        if n == 0:
            continue
        if n == 1:
            zr = _isolate(cell, bd, ev, tol)
            if zr is not None:
                if verify:
                    zr = ZeroRecord(zr.beta, zr.gamma, zr.residual, zr.cell, True, verify_zero(zr, ev, cfg=cfg))
                out.append(zr)
                continue
        if depth >= max_depth:
            c = complex(0.5 * (cell.sigma_lo + cell.sigma_hi), 0.5 * (cell.t_lo + cell.t_hi))
            out.extend(ZeroRecord(c.real, c.imag, abs(ev.at(c)), cell.as_tuple(), False) for _ in range(n))
            continue
        try:
            halves = _subdivide(cell, ev, cfg)
        except ConvergenceFailure:
            c = complex(0.5 * (cell.sigma_lo + cell.sigma_hi), 0.5 * (cell.t_lo + cell.t_hi))
            out.extend(ZeroRecord(c.real, c.imag, abs(ev.at(c)), cell.as_tuple(), False) for _ in range(n))
            continue
        for h, hb in halves[::-1]:
            stack.append((h, hb, depth + 1))
    out.sort(key=lambda r: (r.gamma, r.beta))
    return out


# ---------------------------------------------------------------------------
# Jensen and Littlewood integrals


@dataclass(frozen=True)
class VerticalIntegral:
    sigmas: tuple
    t1: float
    t2: float
    values: np.ndarray  # integrals of log|E| per sigma (not normalized)
    error: float
    unresolved: bool
    moments: np.ndarray | None = None  # integrals of |log|E||^(2k), k = 1..kmax, per sigma
    nodes: int = 0


def vertical_integrals(sigmas, t1: float, t2: float, ctx, kmax: int = 0, panel: float = 1.0,
                       epsrel: float = 1e-6, exclusion: float = 1e-8, limit: int | None = None) -> VerticalIntegral:
    """int_{t1}^{t2} log|E(sigma_k + i t)| dt (and optional even moments) for several sigma at once."""
    ev = evaluator(ctx)
    sig = np.atleast_1d(np.asarray(sigmas, float))
    K = sig.size
    count = [0]

    def f(t):
        count[0] += 1
        v = ev.f(sig, float(t))
        a = np.abs(v)
        if np.any(a < 1e-14):
            # node exclusion: step off a (near-)zero by the exclusion radius
            a = np.maximum(a, np.abs(ev.f(sig, float(t) + exclusion)))
        la = np.log(np.maximum(a, 1e-300))
        if kmax == 0:
            return la
        mom = [np.abs(la) ** (2 * k) for k in range(1, kmax + 1)]
        return np.concatenate([la, *mom])

    n = max(1, math.ceil((t2 - t1) / panel))
    pts = np.linspace(t1, t2, n + 1)[1:-1]
    lim = limit if limit is not None else 20 * (n + 1)
    val, err, info = quad_vec(f, t1, t2, epsabs=epsrel * (t2 - t1), epsrel=epsrel, points=pts if pts.size else None,
                              limit=lim, norm="max", full_output=True)
    val = np.asarray(val)
    return VerticalIntegral(
        tuple(sig.tolist()), float(t1), float(t2), val[:K], float(err), not info.success,
        val[K:].reshape(kmax, K) if kmax else None, count[0],
    )


@dataclass(frozen=True)
class JensenResult:
    value: float
    error: float
    unresolved: bool
    nodes: int


def jensen_integral(sigma: float, T: float, ctx, panel: float = 2.0, epsrel: float = 1e-8, t2: float | None = None) -> JensenResult:
    """(1/T) int_T^{2T} log|E(sigma + i t)| dt (window [T, t2] when t2 is given, normalized by its length)."""
    if sigma <= 0.5:
        raise DomainError("jensen_integral needs sigma > 1/2")
    hi = 2 * T if t2 is None else t2
    vi = vertical_integrals([sigma], T, hi, ctx, panel=panel, epsrel=epsrel)
    L = hi - T
    return JensenResult(float(vi.values[0] / L), vi.error / L, vi.unresolved, vi.nodes)


def horizontal_arg_integral(sigma: float, sigma0: float, t: float, ctx, cfg: WindingConfig = WindingConfig()) -> float:
    """int_sigma^sigma0 arg E(u + i t) du, arg continued leftward from its principal value at sigma0."""
    ev = evaluator(ctx)
    ss = _grid(sigma, sigma0, min(cfg.sigma_step / 4, (sigma0 - sigma) / 2))
    vals = ev.line(ss, t)
    for _ in range(cfg.max_rounds):
        bad = _bad_segments(vals, ss, cfg)
        if bad.size == 0:
            break
        ns = 0.5 * (ss[bad] + ss[bad + 1])
        ss = np.concatenate([ss, ns])
        vals = np.concatenate([vals, ev.line(ns, t)])
        o = np.argsort(ss, kind="stable")
        ss, vals = ss[o], vals[o]
    d = np.angle(vals[:-1] / vals[1:])  # leftward increments
    arg = np.empty(ss.size)
    arg[-1] = np.angle(vals[-1])
    arg[:-1] = arg[-1] + np.cumsum(d[::-1])[::-1]
    return float(np.sum(0.5 * (arg[1:] + arg[:-1]) * np.diff(ss)))


@dataclass(frozen=True)
class LittlewoodCheck:
    zeros_side: float  # 2 pi sum (beta - sigma)
    integral_side: float
    quad_error: float
    n_zeros: int
    unconverged: int

    @property
    def gap(self) -> float:
        return abs(self.zeros_side - self.integral_side)

    @property
    def gap_in_zeros(self) -> float:
        """Gap measured in units of zeros of the (sigma0 - sigma)-weighted count."""
        return self.gap / (2 * math.pi)

    def holds(self, slack_zeros: float = 0.5) -> bool:
        return self.gap <= self.quad_error + 2 * math.pi * slack_zeros


def littlewood_check(sigma: float, t1: float, t2: float, ctx, zeros: list[ZeroRecord] | None = None,
                     sigma0: float = SIGMA0, vertical: VerticalIntegral | None = None,
                     cfg: WindingConfig = WindingConfig()) -> LittlewoodCheck:
    """Both sides of Littlewood's identity on [sigma, sigma0] x [t1, t2].

    2 pi sum_rho (beta - sigma) = int log|E(sigma+it)| - int log|E(sigma0+it)|
                                  + int_sigma^sigma0 arg E(u+it2) du - int_sigma^sigma0 arg E(u+it1) du
    """
    ev = evaluator(ctx)
    if zeros is None:
        zeros = list_zeros(Rectangle(sigma, sigma0, t1, t2), ev, cfg)
    if vertical is None:
        vertical = vertical_integrals([sigma, sigma0], t1, t2, ev)
    lhs = 2 * math.pi * sum(z.beta - sigma for z in zeros)
    a2 = horizontal_arg_integral(sigma, sigma0, t2, ev, cfg)
    a1 = horizontal_arg_integral(sigma, sigma0, t1, ev, cfg)
    rhs = float(vertical.values[0] - vertical.values[1]) + a2 - a1
    return LittlewoodCheck(lhs, rhs, 2 * vertical.error, len(zeros), sum(not z.converged for z in zeros))


# ---------------------------------------------------------------------------
# density prediction


@dataclass(frozen=True)
class DensityPrediction:
    c: float
    std_error: float
    c_fd: float
    M_prime: tuple
    n: int
    tail_bound: float = 0.0

    def to_dict(self) -> dict:
        return {"c": self.c, "stderr": self.std_error, "c_fd": self.c_fd, "M_prime": list(self.M_prime),
                "n": self.n, "tail_bound": self.tail_bound}


def predicted_density(sigma1: float, sigma2: float, cfg: ModelConfig, sys: CharacterSystem, table: EulerTable,
                      h: float = 1e-3) -> DensityPrediction:
    """c = -(1/2 pi)(M'(sigma1) - M'(sigma2)), zeros per unit t with sigma1 < beta <= sigma2."""
    if not 0.5 < sigma1 < sigma2:
        raise DomainError("predicted_density needs 1/2 < sigma1 < sigma2")
    path, fd = m_prime_samples([sigma1, sigma2], cfg, sys, table, h)
    ok = np.all(np.isfinite(path), axis=1) & np.all(np.isfinite(fd), axis=1)
    d = -(path[ok, 0] - path[ok, 1]) / (2 * math.pi)
    dfd = -(fd[ok, 0] - fd[ok, 1]) / (2 * math.pi)
    n = int(ok.sum())
    c = float(np.mean(d))
    se = float(np.std(d, ddof=1) / math.sqrt(n))
    tb = (tail_bound(sigma1, cfg.P_max) + tail_bound(sigma2, cfg.P_max))
    if c < -3 * se - 1e-15:
        raise NegativeDensity(f"predicted density {c:.4g} is negative beyond 3 stderr ({se:.3g})")
    return DensityPrediction(c, se, float(np.mean(dfd)), (float(np.mean(path[ok, 0])), float(np.mean(path[ok, 1]))), n, tb)


def fit_linear_density(windows, counts) -> tuple[float, float]:
    """Least-squares c in N ~ c * (window length); returns (c, residual rms)."""
    L = np.array([b - a for a, b in windows], float)
    N = np.array(counts, float)
    if np.allclose(L, 0):
        raise ConfigError("empty windows")
    c = float(L @ N / (L @ L))
    rms = float(np.sqrt(np.mean((N - c * L) ** 2)))
    return c, rms

"""Dirichlet polynomials R_{j,Y}(s) = sum_{p^n <= Y} a_j(p^n) p^(-ns) and their ratio forms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchTrackingFailure, ConfigError, CutoffExceeded, DomainError
from .lfun import TrackingConfig, log_coeffs, track_log_l
from .qf import CharacterSystem, EulerTable

PLAIN = "plain"
RATIO = "ratio"


@dataclass(frozen=True, eq=False)
class DirichletPolynomial:
    pn: np.ndarray  # ascending prime powers
    coeffs: np.ndarray
    Y: float
    j: int
    kind: str = PLAIN
    constant: complex = 0j

    @property
    def terms(self) -> list[tuple[int, float]]:
        return list(zip(self.pn.tolist(), self.coeffs.tolist()))

    @property
    def log_pn(self) -> np.ndarray:
        return np.log(self.pn.astype(float))

    def __len__(self) -> int:
        return self.pn.size


def build_poly(table: EulerTable, j: int, Y: float, kind: str = PLAIN) -> DirichletPolynomial:
    if Y > table.Y_max:
        raise CutoffExceeded(f"Y={Y} exceeds the table cutoff {table.Y_max}")
    J = table.J
    if not 0 <= j < J:
        raise IndexError(f"character index {j} out of range (J={J})")
    if kind not in (PLAIN, RATIO):
        raise ConfigError(f"unknown polynomial kind {kind!r}")
    sel = table.pn <= Y
    pn = table.pn[sel]
    c = table.coeffs[j, sel]
    const = 0j
    if kind == RATIO:
        lc = log_coeffs(table.system.coeffs)
        if j < J - 1:
            c = c - table.coeffs[J - 1, sel]
            const = complex(lc[j] - lc[J - 1])
        else:
            const = complex(lc[J - 1])
    keep = c != 0
    pn = np.ascontiguousarray(pn[keep])
    c = np.ascontiguousarray(c[keep])
    pn.setflags(write=False)
    c.setflags(write=False)
    return DirichletPolynomial(pn, c, float(Y), int(j), kind, const)


def eval_poly(P: DirichletPolynomial, s) -> complex | np.ndarray:
    """Direct sum; s may be a scalar or an array of complex points."""
    arr = np.asarray(s, dtype=complex)
    if P.pn.size == 0:
        out = np.full(arr.shape, P.constant, dtype=complex)
    else:
        lp = P.log_pn
        flat = arr.reshape(-1)
        # p^(-n s) = exp(-sigma log p^n) * exp(-i t log p^n)
        E = np.exp(-np.outer(flat, lp))
        out = (E @ P.coeffs + P.constant).reshape(arr.shape)
    return complex(out) if arr.ndim == 0 else out


def tail_bound(table: EulerTable, j: int, Y: float, sigma: float) -> float:
    """Bound on |log L_j(sigma) - R_{j,Y}(sigma)| for sigma > 1 from the coefficient size |a(p^n)| <= 2/n."""
    if sigma <= 1:
        return math.inf
    # sum over p^n > Y of 2 p^(-n sigma) <= 2 sum_{m > Y} m^(-sigma) <= 2 (Y^(1-sigma)/(sigma-1) + Y^(-sigma))
    Yf = max(float(Y), 1.0)
    return 2.0 * (Yf ** (1 - sigma) / (sigma - 1) + Yf ** (-sigma))


@dataclass(frozen=True)
class SurveyResult:
    sigma: float
    T: float
    Y: float
    tol: float
    n: int
    fraction: float
    skipped: int
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "T": self.T,
            "Y": self.Y,
            "tol": self.tol,
            "n": self.n,
            "fraction": self.fraction,
            "skipped": self.skipped,
        }

    @property
    def implied_B2(self) -> float:
        """Exponent with Y = (log T)^B2."""
        return math.log(self.Y) / math.log(math.log(self.T))


def survey_points(T: float, n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=seed))
    return T + T * rng.random(n)


def survey_errors(sigma: float, ts, Y: float, sys: CharacterSystem, table: EulerTable, ctxs,
                  track: TrackingConfig = TrackingConfig()) -> np.ndarray:
    """max_j |log L_j - R_{j,Y}| at each t; NaN where branch tracking failed."""
    polys = [build_poly(table, j, Y) for j in range(sys.J)]
    ts = np.asarray(ts, float)
    R = np.stack([eval_poly(P, sigma + 1j * ts) for P in polys], axis=1)
    out = np.empty(ts.size)
    for i, t in enumerate(ts):
        try:
            logL = track_log_l(sigma, float(t), sys, ctxs, track)
        except BranchTrackingFailure:
            out[i] = math.nan
            continue
        out[i] = float(np.max(np.abs(logL - R[i])))
    return out


def approx_survey(sigma: float, T: float, n: int, Y: float, tol: float, sys: CharacterSystem, table: EulerTable,
                  ctxs, seed: int = 0, track: TrackingConfig = TrackingConfig()) -> SurveyResult:
    """Fraction of uniform t in [T, 2T] with max_j |log L_j(sigma+it) - R_{j,Y}(sigma+it)| > tol."""
    if not 0.5 < sigma < 1:
        raise DomainError("approx_survey needs 1/2 < sigma < 1")
    if math.isinf(tol) and tol > 0:
        return SurveyResult(float(sigma), float(T), float(Y), float(tol), int(n), 0.0, 0, seed)
    err = survey_errors(sigma, survey_points(T, n, seed), Y, sys, table, ctxs, track)
    ok = np.isfinite(err)
    used = int(ok.sum())
    frac = float(np.mean(err[ok] > tol)) if used else math.nan
    return SurveyResult(float(sigma), float(T), float(Y), float(tol), int(n), frac, int(n - used), seed)

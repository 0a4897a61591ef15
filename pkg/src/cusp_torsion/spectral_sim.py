"""Numerical checks of the model-operator and surface-degeneration formulas.

Two independent simulations live here.

* The 1-D model operators A_a = -d^2/du^2 + a^2 - (a^2 + a) sech^2 u on a
  Dirichlet box, discretized by central differences.  Relative heat traces
  and relative zeta determinants of the pair (a, -a) are compared with the
  closed forms in model_formulas.
* Surfaces of revolution ds^2 + f(s)^2 dtheta^2 whose middle is the collar
  f = eps cosh s, i.e. dx^2/(x^2 + eps^2) + (x^2 + eps^2) dtheta^2 with
  x = eps sinh s.  The function Laplacian splits into Fourier modes; each
  mode is a finite-volume problem in arclength, symmetrized by the mass
  matrix (the half-density form).
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy import integrate, interpolate, sparse, special
from scipy.sparse import linalg as sparse_linalg
from scipy.linalg import eigh, eigvalsh_tridiagonal

from . import model_formulas as mf
from . import numerics

T_SPLIT = 1.0         # Mellin split point
T_FIT = 0.05          # below this the relative trace is replaced by its fit
T_FIT_MAX = 0.5
N_FIT_TERMS = 5


class SimulationError(RuntimeError):
    pass


class GuardRailError(SimulationError):
    pass


def n_threads():
    try:
        return max(1, int(os.environ.get("CUSP_TORSION_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items, threads=None):
    threads = threads or n_threads()
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# 1-D model operators

@dataclass(frozen=True)
class Grid1D:
    L: float
    n: int

    def __post_init__(self):
        if self.n < 100:
            raise ValueError("grid needs at least 100 interior points, got %d" % self.n)
        if self.L <= 0:
            raise ValueError("half width must be positive")

    @property
    def h(self):
        return 2.0 * self.L / (self.n + 1)

    @property
    def points(self):
        return -self.L + self.h * np.arange(1, self.n + 1)


def grid_for(t, n=4000):
    """Smallest box satisfying the truncation rule L >= 8 sqrt(t) + 20."""
    return Grid1D(8.0 * math.sqrt(t) + 20.0, n)


def model_potential(a, u):
    return a * a - (a * a + a) / np.cosh(u) ** 2


@dataclass
class SchrodingerOp1D:
    a: float
    grid: Grid1D
    diag: np.ndarray = field(repr=False)
    off: np.ndarray = field(repr=False)

    def matrix(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def eigenvalues(self, upper=None):
        if upper is None:
            return eigvalsh_tridiagonal(self.diag, self.off)
        return eigvalsh_tridiagonal(self.diag, self.off, select="v", select_range=(-np.inf, upper))


def discretize(a, grid: Grid1D) -> SchrodingerOp1D:
    h = grid.h
    diag = 2.0 / h ** 2 + model_potential(a, grid.points)
    off = np.full(grid.n - 1, -1.0 / h ** 2)
    return SchrodingerOp1D(float(a), grid, diag, off)


def kernel_count(a):
    """dim of the L^2 kernel of A_a: one for a > 0, none otherwise."""
    return 1 if a > 0 else 0


def _pair_spectra(a, grid):
    la = discretize(a, grid).eigenvalues()
    lm = discretize(-a, grid).eigenvalues()
    return la, lm


def _trace(lams, t):
    return float(np.exp(-t * lams).sum())


def relative_heat_trace(a, t, grid: Grid1D = None):
    """tr exp(-t A_a) - tr exp(-t A_{-a}) on a common Dirichlet grid."""
    if not 0.05 <= t <= 20:
        raise GuardRailError("t = %g outside [0.05, 20]" % t)
    grid = grid or grid_for(t)
    if grid.L < 8.0 * math.sqrt(t) + 20.0 - 1e-12:
        raise GuardRailError("box half width %g too small for t = %g (need %g)"
                             % (grid.L, t, 8.0 * math.sqrt(t) + 20.0))
    if a == 0:
        return 0.0
    la, lm = _pair_spectra(a, grid)
    return _trace(la, t) - _trace(lm, t)


@dataclass
class HeatTraceSeries:
    t: np.ndarray
    values: np.ndarray
    provenance: str = "numeric"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise SimulationError("heat trace has non-finite values")
        if np.any(np.diff(self.t) <= 0):
            raise SimulationError("t-grid must be strictly increasing")


def relative_trace_series(a, ts, grid: Grid1D = None):
    ts = np.asarray(ts, dtype=float)
    grid = grid or grid_for(ts.max())
    la, lm = _pair_spectra(a, grid)
    return HeatTraceSeries(ts, [_trace(la, t) - _trace(lm, t) for t in ts])


def closed_trace_series(a, ts):
    return HeatTraceSeries(ts, [mf.strint_rhs(a, t) for t in ts], "closed-form")


# ---------------------------------------------------------------------------
# Mellin transform

@dataclass
class MellinSpec:
    t_fit: float = T_FIT
    t_fit_max: float = T_FIT_MAX
    n_terms: int = N_FIT_TERMS
    t_split: float = T_SPLIT
    tol: float = 1e-11


def mellin_logdet(g, c0, tail, spec: MellinSpec = None):
    """-zeta'(0) for zeta(s) = Gamma(s)^-1 int_0^inf t^(s-1) g(t) dt.

    g: callable, with g(t) -> c0 as t -> 0 and g - c0 ~ sum_j c_j t^(j/2).
    tail: int_{t_split}^inf g(t) dt / t, supplied by the caller.
    Below t_fit, g - c0 is replaced by its least-squares fit in powers of
    sqrt t on [t_fit, t_fit_max].
    """
    spec = spec or MellinSpec()
    ts = np.geomspace(spec.t_fit, spec.t_fit_max, 60)
    G = np.array([g(t) for t in ts]) - c0
    powers = 0.5 * np.arange(1, spec.n_terms + 1)
    X = ts[:, None] ** powers[None, :]
    coef = np.linalg.lstsq(X, G, rcond=None)[0]
    small = float(np.sum(coef * spec.t_fit ** powers / powers))
    try:
        mid = numerics.adaptive_quad(lambda t: (g(t) - c0) / t, spec.t_fit, spec.t_split, tol=spec.tol)
    except numerics.ConvergenceError as exc:
        raise SimulationError("Mellin quadrature did not converge") from exc
    zeta_prime = small + mid + c0 * math.log(spec.t_split) + tail + np.euler_gamma * c0
    return -zeta_prime


def relative_logdet(a, grid: Grid1D = None, mellin: MellinSpec = None):
    """log det A_a - log det A_{-a} with the L^2 kernel removed."""
    if a == 0:
        raise ValueError("relative determinant needs a != 0")
    spec = mellin or MellinSpec()
    grid = grid or Grid1D(40.0, 4000)
    la, lm = _pair_spectra(a, grid)
    # drop the discrete zero mode of whichever operator has the kernel
    if kernel_count(a):
        la = la[1:]
    if kernel_count(-a):
        lm = lm[1:]
    c0 = float(kernel_count(-a) - kernel_count(a))

    def g(t):
        return _trace(la, t) - _trace(lm, t)

    tail = float(special.exp1(spec.t_split * la).sum() - special.exp1(spec.t_split * lm).sum())
    return mellin_logdet(g, c0, tail, spec)


def relative_logdet_closed(a, mellin: MellinSpec = None):
    """Same pipeline fed with the exact relative trace erf(a sqrt t) - sign(a)."""
    spec = mellin or MellinSpec()
    c0 = float(kernel_count(-a) - kernel_count(a))

    def g(t):
        return mf.strint_rhs(a, t) + c0

    tail = numerics.adaptive_quad(lambda t: g(t) / t, spec.t_split, math.inf, tol=1e-13)
    return mellin_logdet(g, c0, tail, spec)


# ---------------------------------------------------------------------------
# renormalized volume

def _collar_integral(delta):
    """int_delta^1 d rho / (rho sqrt(1 - rho^2)), with rho = sin phi."""
    return numerics.adaptive_quad(lambda p: 1.0 / math.sin(p), math.asin(delta), math.pi / 2, tol=1e-13)


@dataclass
class RenormFit:
    value: float
    slope: float
    residual: float
    halving_change: float


def renorm_volume_fit(deltas=None):
    deltas = np.geomspace(1e-5, 1e-4, 8) if deltas is None else np.asarray(deltas, dtype=float)
    vals = np.array([2.0 * _collar_integral(d) for d in deltas])
    X = np.stack([np.ones_like(deltas), np.log(deltas)], 1)
    coef, *_ = np.linalg.lstsq(X, vals, rcond=None)
    resid = float(np.abs(X @ coef - vals).max())
    if resid > 1e-6:
        raise SimulationError("finite-part fit residual %g too large" % resid)
    half = np.stack([np.ones_like(deltas), np.log(deltas / 2)], 1)
    vals_half = np.array([2.0 * _collar_integral(d / 2) for d in deltas])
    coef_half, *_ = np.linalg.lstsq(half, vals_half, rcond=None)
    return RenormFit(float(coef[0]), float(coef[1]), resid, float(abs(coef_half[0] - coef[0])))


def renorm_volume_check():
    """Finite part of twice the collar volume integral; equals 2 log 2."""
    return renorm_volume_fit().value


# ---------------------------------------------------------------------------
# surfaces of revolution

def _bend_step(u):
    return u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi)


class _Bend:
    """Profile piece turning f' from +1 to -1 over length ell, back to its start height."""

    def __init__(self, n=4001):
        u = np.linspace(0.0, 1.0, n)
        G = integrate.cumulative_simpson(np.cos(np.pi * _bend_step(u)), x=u, initial=0.0)
        self.G = interpolate.CubicSpline(u, G)
        self.max = float(self.G(0.5))
        self.mean = float(self.G.integrate(0.0, 1.0))


_BEND = _Bend()


@dataclass(frozen=True)
class NeckSurface:
    """Surface of revolution with a hyperbolic collar in the middle.

    kind: "dumbbell" (two caps, separating neck), "handle" (the neck closes
    up on itself through one bend, a torus) or "sphere" (round sphere of
    radius R, no neck; a solver check).  cap1, cap2: bend lengths of the two
    caps.  Each cap is a bend followed by a flat disk closing at a smooth
    pole.
    """
    kind: str = "dumbbell"
    cap1: float = 2.0
    cap2: float = 2.0
    R: float = 1.0

    def __post_init__(self):
        if self.kind not in ("dumbbell", "handle", "sphere"):
            raise ValueError("unknown surface kind %r" % self.kind)
        if min(self.cap1, self.cap2, self.R) <= 0:
            raise ValueError("cap lengths and radius must be positive")

    @property
    def periodic(self):
        return self.kind == "handle"

    @property
    def components(self):
        return 1

    @property
    def euler_characteristic(self):
        return 0 if self.kind == "handle" else 2

    def neck_half_length(self, eps):
        return math.asinh(1.0 / eps)

    def length(self, eps):
        if self.kind == "sphere":
            return math.pi * self.R
        fj = math.sqrt(1.0 + eps * eps)
        neck = 2.0 * self.neck_half_length(eps)
        if self.kind == "handle":
            return neck + self.cap1
        return neck + self.cap1 + self.cap2 + 2.0 * fj

    def profile(self, s, eps):
        """f(s) on [0, length]."""
        s = np.asarray(s, dtype=float)
        if self.kind == "sphere":
            return self.R * np.sin(s / self.R)
        fj = math.sqrt(1.0 + eps * eps)
        S = self.neck_half_length(eps)
        if self.kind == "handle":
            # neck on [0, 2S], bend on [2S, 2S + cap1]
            out = eps * np.cosh(s - S)
            b = s > 2 * S
            out[b] = fj + self.cap1 * _BEND.G(np.clip((s[b] - 2 * S) / self.cap1, 0, 1))
            return out
        # disk1 | bend1 (reversed) | neck | bend2 | disk2
        x0 = fj
        x1 = x0 + self.cap1
        x2 = x1 + 2 * S
        x3 = x2 + self.cap2
        out = np.empty_like(s)
        r = s < x0
        out[r] = s[r]
        r = (s >= x0) & (s < x1)
        out[r] = fj + self.cap1 * _BEND.G(np.clip((x1 - s[r]) / self.cap1, 0, 1))
        r = (s >= x1) & (s < x2)
        out[r] = eps * np.cosh(s[r] - x1 - S)
        r = (s >= x2) & (s < x3)
        out[r] = fj + self.cap2 * _BEND.G(np.clip((s[r] - x2) / self.cap2, 0, 1))
        r = s >= x3
        out[r] = x3 + fj - s[r]
        return out

    def neck_interval(self, eps):
        S = self.neck_half_length(eps)
        if self.kind == "handle":
            return 0.0, 2 * S
        x1 = math.sqrt(1.0 + eps * eps) + self.cap1
        return x1, x1 + 2 * S

    def area(self, eps):
        L = self.length(eps)
        return 2.0 * math.pi * integrate.quad(lambda s: float(self.profile(np.array([s]), eps)[0]),
                                              0.0, L, limit=400, points=self._breaks(eps))[0]

    def _breaks(self, eps):
        if self.kind != "dumbbell":
            return None
        a, b = self.neck_interval(eps)
        fj = math.sqrt(1.0 + eps * eps)
        return [fj, a, b, b + self.cap2]

    def limit_areas(self):
        """Areas of the two halves as eps -> 0: cap plus half collar (area 2 pi)."""
        if self.kind != "dumbbell":
            raise ValueError("limit areas are defined for the separating dumbbell")

        def cap(ell):
            # disk: int_0^1 s ds; bend: int (1 + ell G(u)) ell du; half collar: 1
            return 0.5 + ell * (1.0 + ell * _BEND.mean) + 1.0

        return 2.0 * math.pi * cap(self.cap1), 2.0 * math.pi * cap(self.cap2)

    def link_length(self):
        return 2.0 * math.pi


def builtin_surface(name):
    table = {
        "symmetric": NeckSurface("dumbbell", 2.0, 2.0),
        "dumbbell-symmetric": NeckSurface("dumbbell", 2.0, 2.0),
        "asymmetric": NeckSurface("dumbbell", 1.0, 3.0),
        "dumbbell-asymmetric": NeckSurface("dumbbell", 1.0, 3.0),
        "handle": NeckSurface("handle", 3.0),
        "sphere": NeckSurface("sphere", R=1.0),
    }
    try:
        return table[name]
    except KeyError:
        raise ValueError("unknown surface %r; choose from %s" % (name, ", ".join(sorted(table)))) from None


# per-mode operators

@dataclass
class ModeGrid:
    s: np.ndarray          # cell centres
    f: np.ndarray          # profile at centres
    fface: np.ndarray      # profile at the faces between cells (n - 1, or n if periodic)
    h: float
    periodic: bool


def mode_grid(surface: NeckSurface, eps, h):
    L = surface.length(eps)
    n = int(math.ceil(L / h))
    h = L / n
    s = (np.arange(n) + 0.5) * h
    f = surface.profile(s, eps)
    if surface.periodic:
        fface = surface.profile((np.arange(n) + 1.0) * h % L, eps)
    else:
        fface = surface.profile((np.arange(n - 1) + 1.0) * h, eps)
    return ModeGrid(s, f, fface, h, surface.periodic)


def mode_operator(g: ModeGrid, k):
    """(diag, off, corner) of M^-1/2 S M^-1/2 for Fourier mode k.

    S is the finite-volume stiffness of -(f u')' + k^2 u / f, M = diag(f h).
    Faces at the poles carry f = 0, so no boundary condition is imposed there.
    """
    h, f = g.h, g.f
    n = f.size
    left = np.zeros(n)
    right = np.zeros(n)
    if g.periodic:
        right[:] = g.fface
        left[1:] = g.fface[:-1]
        left[0] = g.fface[-1]
    else:
        right[:-1] = g.fface
        left[1:] = g.fface
    diag = (left + right) / (h * h * f) + (k * k) / (f * f)
    fi = g.fface[: n - 1]
    off = -fi / (h * h * np.sqrt(f[:-1] * f[1:]))
    corner = -g.fface[-1] / (h * h * math.sqrt(f[0] * f[-1])) if g.periodic else 0.0
    return diag, off, corner


def mode_eigenvalues(g: ModeGrid, k, upper=None, count=None):
    diag, off, corner = mode_operator(g, k)
    if g.periodic:
        n = diag.size
        A = sparse.diags([off, diag, off], [-1, 0, 1], format="lil")
        A[0, n - 1] = A[n - 1, 0] = corner
        A = A.tocsc()
        if count is not None and count < n // 2:
            # shift-invert just below the spectrum, which is bounded below by 0
            w = sparse_linalg.eigsh(A, k=min(count, n - 2), sigma=-1.0, which="LM",
                                    return_eigenvectors=False)
            return np.sort(w)
        w = eigh(A.toarray(), eigvals_only=True)
        if count is not None:
            return w[:count]
        return w if upper is None else w[w <= upper]
    if count is not None:
        return eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, min(count, diag.size) - 1))
    if upper is not None:
        return eigvalsh_tridiagonal(diag, off, select="v", select_range=(-np.inf, upper))
    return eigvalsh_tridiagonal(diag, off)


def _richardson(coarse, fine):
    n = min(coarse.size, fine.size)
    return (4.0 * fine[:n] - coarse[:n]) / 3.0


def mode_spectrum(surface, eps, k, h, upper=None, count=None, richardson=True):
    """Sorted mode-k eigenvalues, Richardson-extrapolated in h by default."""
    fine = mode_eigenvalues(mode_grid(surface, eps, h / 2 if richardson else h), k, upper, count)
    if not richardson:
        return fine
    coarse = mode_eigenvalues(mode_grid(surface, eps, h), k, None if upper is None else 1.5 * upper,
                              None if count is None else count)
    if upper is not None:
        n = int(np.searchsorted(fine, upper, side="right"))
        fine = fine[:n]
        if coarse.size < n:
            raise SimulationError("coarse grid misses eigenvalues below %g" % upper)
    return _richardson(coarse, fine)


@dataclass
class NeckSpectrum:
    eps: float
    eigenvalues: np.ndarray
    modes: np.ndarray
    k_max: int


def neck_spectrum(surface: NeckSurface, eps, k_max=None, h=0.01, n_eig=20, richardson=True):
    """Lowest n_eig eigenvalues of the function Laplacian (with multiplicity)."""
    if not 1e-4 <= eps <= 1 and surface.kind != "sphere":
        raise GuardRailError("eps = %g outside [1e-4, 1]" % eps)

    def lowest(k):
        return mode_spectrum(surface, eps, k, h, count=n_eig, richardson=richardson)

    vals, labels = [], []

    def add(k, w):
        for x in w:
            vals.append(x)
            labels.append(k)
            if k:
                vals.append(x)
                labels.append(-k)

    auto = k_max is None
    k = 0
    while True:
        w = lowest(k)
        if auto and k > 0 and len(vals) >= n_eig and w[0] > np.sort(vals)[n_eig - 1]:
            break
        add(k, w)
        k += 1
        if not auto and k > k_max:
            break
        if k > 10000:
            raise SimulationError("mode cutoff did not converge")
    if not auto:
        # cross-cutoff check: one more mode must not move the low spectrum
        extra = lowest(k_max + 1)
        cur = np.sort(vals)[:n_eig]
        merged = np.sort(np.concatenate([vals, extra, extra]))[:n_eig]
        if np.abs(merged - cur).max() > 1e-8:
            raise SimulationError("mode cutoff k_max = %d is insufficient" % k_max)
    order = np.argsort(vals, kind="stable")[:n_eig]
    return NeckSpectrum(eps, np.asarray(vals)[order], np.asarray(labels)[order], k - 1)


def gap_threshold(spec: NeckSpectrum, n_small):
    """Geometric mean across the gap after the n_small lowest eigenvalues."""
    w = spec.eigenvalues
    lo = max(w[n_small - 1], 1e-300)
    return math.sqrt(lo * w[n_small])


def gap_scan(spec: NeckSpectrum, zero_tol=1e-9, min_ratio=100.0, window=6):
    """Threshold delta from the largest ratio gap among the lowest positive eigenvalues.

    Zero modes are small by definition.  A positive eigenvalue counts as
    small only when a gap of at least min_ratio follows it; otherwise delta
    sits below the first positive eigenvalue.
    """
    w = spec.eigenvalues
    pos = w[w > zero_tol][:window]
    if pos.size == 0:
        raise SimulationError("no positive eigenvalues computed")
    if pos.size > 1:
        ratios = pos[1:] / pos[:-1]
        i = int(np.argmax(ratios))
        if ratios[i] >= min_ratio:
            return math.sqrt(pos[i] * pos[i + 1])
    return math.sqrt(zero_tol * pos[0])


def count_small(spec: NeckSpectrum, delta, zero_tol=1e-9):
    w = spec.eigenvalues
    positive = w[(w > zero_tol) & (w < delta)]
    zero = w[np.abs(w) <= zero_tol]
    return int(zero.size), int(positive.size)


@dataclass
class SmallEigFit:
    slope: float              # least-squares c in lambda_1 = c eps
    extrapolated: float       # intercept of lambda_1/eps = c0 + c1 eps
    target: float
    ratios: List[float]
    eps: List[float]
    volumes: tuple
    drift: float

    @property
    def rel_error(self):
        return abs(self.extrapolated - self.target) / abs(self.target)


def small_eig_fit(surface: NeckSurface, eps_list, h=0.01, richardson=True):
    """Fit lambda_1(eps) ~ c eps for the separating neck.

    Areas are measured in units of the link length 2 pi, the normalization in
    which the constant reads (V1 + V2) / (pi V1 V2).
    """
    if surface.kind != "dumbbell":
        raise ValueError("small eigenvalue fit needs a separating neck")
    eps = np.sort(np.asarray(eps_list, dtype=float))
    lam = np.array(_map(lambda e: mode_spectrum(surface, e, 0, h, count=2, richardson=richardson)[1],
                        list(eps)))
    ratios = lam / eps
    use = slice(0, 3)
    slope = float(np.dot(eps[use], lam[use]) / np.dot(eps[use], eps[use]))
    X = np.stack([np.ones(3), eps[use]], 1)
    c0, _ = np.linalg.lstsq(X, ratios[use], rcond=None)[0]
    A1, A2 = surface.limit_areas()
    V1, V2 = A1 / surface.link_length(), A2 / surface.link_length()
    return SmallEigFit(slope, float(c0), mf.burger_coeff(V1, V2), list(ratios), list(eps), (V1, V2),
                       float(ratios.max() - ratios.min()))


# ---------------------------------------------------------------------------
# determinant of the surface Laplacian

@dataclass
class SurfaceLogDet:
    eps: float
    logdet: float
    t0: float
    n_eigs: int
    k_max: int
    wrap: float
    heat_mismatch: float


def _wrap_term(surface, eps, t, n_wrap=50):
    """Collar contribution of closed geodesics around the neck.

    Poisson-resummed mode sum: (1/t) int f sum_{n>=1} exp(-pi^2 n^2 f^2 / t) ds
    over the collar.
    """
    a, b = surface.neck_interval(eps)
    S = 0.5 * (b - a)

    def integrand(x):
        f = eps * math.cosh(x)
        q = math.pi ** 2 * f * f / t
        if q > 700:
            return 0.0
        n = np.arange(1, n_wrap + 1)
        return f * float(np.exp(-q * n * n).sum())

    # symmetric about the collar centre; the integrand is negligible once f^2 >> t
    xmax = min(S, math.acosh(max(1.0, 10.0 * math.sqrt(t) / eps)) + 1.0)
    return 2.0 * integrate.quad(integrand, 0.0, xmax, limit=200, epsabs=1e-14)[0] / t


def _wrap_mellin(surface, eps, t0):
    """int_0^t0 W(t) dt / t."""
    return integrate.quad(lambda t: _wrap_term(surface, eps, t) / t, 0.0, t0, limit=200,
                          epsabs=1e-12, epsrel=1e-10)[0]


def surface_logdet(surface: NeckSurface, eps, t0=0.01, h=0.01, cutoff=40.0):
    """Zeta-regularized log det' of the function Laplacian.

    t >= t0: heat trace from Richardson-extrapolated mode eigenvalues
    (through E_1 tails).  t < t0: area term, chi/6, the collar wrapping term
    and a linear term fitted on [t0, 4 t0].
    """
    upper = cutoff / t0
    # area from the same profile the eigenvalues see
    A = surface.area(eps)
    chi = surface.euler_characteristic

    def one(k):
        return k, mode_spectrum(surface, eps, k, h, upper=upper)

    spectra = []
    k = 0
    batch = max(1, n_threads())
    done = False
    while not done:
        for kk, w in _map(one, list(range(k, k + batch))):
            if w.size == 0:
                done = True
                continue
            spectra.append((kk, w))
        k += batch
    lams = []
    for kk, w in spectra:
        mult = 1 if kk == 0 else 2
        if kk == 0:
            w = w[1:]   # constants
        lams.extend([w] * mult)
    lams = np.concatenate(lams)
    if np.any(lams <= 0):
        raise SimulationError("non-positive eigenvalue after removing constants")

    def theta(t):
        return float(np.exp(-t * lams).sum())

    def model(t):
        return A / (4.0 * math.pi * t) + chi / 6.0 - 1.0 + _wrap_term(surface, eps, t)

    ts = np.linspace(t0, 4.0 * t0, 12)
    resid = np.array([theta(t) - model(t) for t in ts])
    a1 = float(np.dot(ts, resid) / np.dot(ts, ts))
    mismatch = float(np.abs(resid - a1 * ts).max())
    c = chi / 6.0 - 1.0
    wrap = _wrap_mellin(surface, eps, t0)
    R0 = -A / (4.0 * math.pi * t0) + c * math.log(t0) + wrap + a1 * t0 + float(special.exp1(t0 * lams).sum())
    zeta_prime = R0 + np.euler_gamma * c
    return SurfaceLogDet(float(eps), -zeta_prime, t0, int(lams.size), spectra[-1][0], wrap, mismatch)


@dataclass
class LogDetFit:
    c1: float
    coefficients: Dict[str, float]
    logdets: List[float]
    eps: List[float]
    monotone: bool
    condition: float
    target: float

    @property
    def rel_error(self):
        return abs(self.c1 - self.target) / abs(self.target)


def logdet_surface_fit(surface: NeckSurface, eps_list, max_condition=1e8, **kw):
    """Fit log det against {1/eps, log log(1/eps), log eps, 1}."""
    eps = np.sort(np.asarray(eps_list, dtype=float))
    if eps.size < 5:
        raise ValueError("need at least five eps values for a four-term fit")
    if eps[-1] / eps[0] < 10 - 1e-9:
        raise ValueError("eps values must span at least one decade")
    res = _map(lambda e: surface_logdet(surface, e, **kw), list(eps))
    ld = np.array([r.logdet for r in res])
    X = np.stack([1.0 / eps, np.log(np.log(1.0 / eps)), np.log(eps), np.ones_like(eps)], 1)
    # scale columns before judging conditioning
    scale = np.abs(X).max(axis=0)
    cond = float(np.linalg.cond(X / scale))
    if cond > max_condition:
        raise SimulationError("fit is ill-conditioned (condition number %.3g)" % cond)
    coef = np.linalg.lstsq(X, ld, rcond=None)[0]
    names = ["eps^-1", "log log(1/eps)", "log eps", "const"]
    # as eps decreases, log det decreases
    monotone = bool(np.all(np.diff(ld) > 0))
    return LogDetFit(float(coef[0]), dict(zip(names, map(float, coef))), list(ld), list(eps), monotone, cond,
                     mf.wolpert_c1())


def collar_c1():
    """eps^-1 coefficient produced by the collar wrapping term alone.

    int_0^inf W dt/t = (1/6) int ds / f and int ds / f -> pi / eps, so the
    contribution to log det is -pi / (6 eps).
    """
    return -math.pi / 6.0

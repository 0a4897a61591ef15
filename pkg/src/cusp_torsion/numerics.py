"""Dense linear algebra, quadrature and the handful of special functions the
rest of the package needs.

Eigendecompositions default to LAPACK through numpy/scipy.  A hand-written
Householder + implicit-shift QL solver (with a cyclic Jacobi fallback) is kept
as an independent route and is selected with ``method="ql"``.
"""
import heapq
import math
from collections import namedtuple

import numpy as np
from scipy import linalg as sla

SpectralDecomposition = namedtuple("SpectralDecomposition", ["eigenvalues", "eigenvectors"])

SYM_RTOL = 1e-12
RANK_TOL = 1e-10


class NumericsError(ValueError):
    pass


class ConvergenceError(NumericsError):
    pass


def check_symmetric(A, rtol=SYM_RTOL):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericsError("expected a square matrix, got shape %s" % (A.shape,))
    if not np.all(np.isfinite(A)):
        raise NumericsError("matrix has non-finite entries")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > rtol * scale:
        raise NumericsError("matrix is not symmetric")
    return A


# ---------------------------------------------------------------------------
# symmetric eigensolvers

def householder_tridiagonal(A):
    """Reduce symmetric A to tridiagonal form, A = Q T Q^T.

    Returns (d, e, Q) with d the diagonal and e the sub-diagonal of T.
    """
    T = np.array(A, dtype=float)
    n = T.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = T[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        # T <- H T H with H = I - 2 v v^T acting on rows/cols k+1..
        S = T[k + 1:, k:]
        S -= 2.0 * np.outer(v, v @ S)
        T[k + 1:, k:] = S
        S = T[k:, k + 1:]
        S -= 2.0 * np.outer(S @ v, v)
        T[k:, k + 1:] = S
        Qs = Q[:, k + 1:]
        Qs -= 2.0 * np.outer(Qs @ v, v)
        Q[:, k + 1:] = Qs
    d = np.diag(T).copy()
    e = np.diag(T, -1).copy()
    return d, e, Q


def tridiagonal_ql(d, e, Z=None, max_iter=50):
    """Implicit-shift QL iteration on a symmetric tridiagonal matrix.

    d: diagonal (length n), e: sub-diagonal (length n-1).  Rotations are
    accumulated into the columns of Z when given.  Eigenvalues are returned
    unsorted, in place of d.
    """
    d = np.array(d, dtype=float)
    n = d.size
    e = np.append(np.array(e, dtype=float), 0.0)
    if Z is not None:
        Z = np.array(Z, dtype=float)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ConvergenceError("QL iteration did not converge at index %d" % l)
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi = Z[:, i].copy()
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * zi + c * zi1
                    Z[:, i] = c * zi - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, Z


def jacobi_eig(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigenvalue iteration (slow, very robust)."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
            return np.diag(A).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    raise ConvergenceError("Jacobi sweeps exhausted")


def eig_sym(A, method="lapack"):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    method: "lapack" (numpy.linalg.eigh) or "ql" (Householder + implicit QL,
    falling back to cyclic Jacobi if QL stalls).
    """
    A = check_symmetric(A)
    n = A.shape[0]
    if n == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0)))
    if method == "lapack":
        w, V = np.linalg.eigh(0.5 * (A + A.T))
        return SpectralDecomposition(w, V)
    if method != "ql":
        raise NumericsError("unknown eigensolver %r" % method)
    try:
        d, e, Q = householder_tridiagonal(0.5 * (A + A.T))
        w, V = tridiagonal_ql(d, e, Q)
    except ConvergenceError:
        w, V = jacobi_eig(0.5 * (A + A.T))
    order = np.argsort(w)
    return SpectralDecomposition(w[order], V[:, order])


def eigvals_tridiagonal(d, e, select="a", select_range=None):
    """Eigenvalues of a symmetric tridiagonal matrix (LAPACK stemr/stebz)."""
    return sla.eigvalsh_tridiagonal(np.asarray(d, float), np.asarray(e, float),
                                    select=select, select_range=select_range)


# ---------------------------------------------------------------------------
# determinants and ranks

def singular_values(A):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def log_abs_det(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericsError("log_abs_det needs a square matrix")
    if A.shape[0] == 0:
        return 0.0
    sv = singular_values(A)
    if sv[-1] <= 1e-12 * sv[0]:
        raise NumericsError("matrix is numerically singular")
    sign, logdet = np.linalg.slogdet(A)
    return float(logdet)


def log_pseudo_det(A, rank_tol=RANK_TOL):
    """Sum of logs of the singular values above rank_tol * sigma_max.

    Returns (value, rank).  The zero map gives (0.0, 0).
    """
    if rank_tol <= 0:
        raise NumericsError("rank_tol must be positive")
    sv = singular_values(A)
    if sv.size == 0 or sv[0] == 0.0:
        return 0.0, 0
    keep = sv[sv > rank_tol * sv[0]]
    return float(np.sum(np.log(keep))), int(keep.size)


def numerical_rank(A, rank_tol=RANK_TOL):
    return log_pseudo_det(A, rank_tol)[1]


def null_space(A, rank_tol=RANK_TOL):
    """Orthonormal basis (columns) of ker A."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if A.shape[0] == 0 or n == 0:
        return np.eye(n)
    U, s, Vt = np.linalg.svd(A)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    r = int(np.sum(s > rank_tol * s[0]))
    return Vt[r:].T.copy()


def range_space(A, rank_tol=RANK_TOL):
    """Orthonormal basis (columns) of im A."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if A.shape[1] == 0 or m == 0:
        return np.zeros((m, 0))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((m, 0))
    r = int(np.sum(s > rank_tol * s[0]))
    return U[:, :r].copy()


def orthonormalize(V, rank_tol=RANK_TOL):
    """Orthonormal basis of the column span of V."""
    return range_space(V, rank_tol)


def orth_complement(V, n):
    """Orthonormal basis of the orthogonal complement of span(V) in R^n."""
    V = np.asarray(V, dtype=float).reshape(n, -1)
    if V.shape[1] == 0:
        return np.eye(n)
    return null_space(V.T)


# ---------------------------------------------------------------------------
# special functions

def lgamma(x):
    if x <= 0 and float(x).is_integer():
        raise NumericsError("Gamma has a pole at %r" % x)
    return math.lgamma(x)


def gamma(x):
    if x <= 0 and float(x).is_integer():
        raise NumericsError("Gamma has a pole at %r" % x)
    return math.gamma(x)


def beta(a, b):
    """Euler Beta function via log-Gamma (positive arguments)."""
    if a <= 0 or b <= 0:
        raise NumericsError("beta needs positive arguments")
    return math.exp(lgamma(a) + lgamma(b) - lgamma(a + b))


def erf(x):
    return math.erf(x)


def eta_alternating(s, n=40):
    """Dirichlet eta sum_{k>=1} (-1)^{k-1} k^{-s}, Cohen-Villegas-Zagier acceleration."""
    d = (3.0 + math.sqrt(8.0)) ** n
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    total = 0.0
    for k in range(n):
        c = b - c
        total += c / (k + 1.0) ** s
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0))
    return total / d


def zeta_functional(s):
    """Riemann zeta for s < 0 through the functional equation and eta(1 - s)."""
    if s >= 0:
        raise NumericsError("functional-equation route is for s < 0")
    s1 = 1.0 - s
    zeta_s1 = eta_alternating(s1) / (1.0 - 2.0 ** (1.0 - s1))
    return (2.0 ** s * math.pi ** (s - 1.0) * math.sin(0.5 * math.pi * s)
            * math.gamma(1.0 - s) * zeta_s1)


_BERNOULLI_2K = [1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730,
                 7.0 / 6, -3617.0 / 510, 43867.0 / 798, -174611.0 / 330]


def zeta_euler_maclaurin(s, N=20):
    """Riemann zeta for real s != 1 by Euler-Maclaurin summation."""
    if s == 1:
        raise NumericsError("zeta has a pole at 1")
    total = sum(n ** -s for n in range(1, N))
    total += N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** -s
    rising = s
    fact = 2.0
    power = N ** (-s - 1.0)
    for k, b2k in enumerate(_BERNOULLI_2K, start=1):
        total += b2k / fact * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
        power /= N * N
    return total


def riemann_zeta(s, route="functional"):
    if route == "functional":
        return zeta_functional(s)
    if route == "euler-maclaurin":
        return zeta_euler_maclaurin(s)
    raise NumericsError("unknown zeta route %r" % route)


def special(kind, x, y=None):
    """Dispatch for the special functions: lgamma, gamma, beta, erf, zeta."""
    if kind == "lgamma":
        return lgamma(x)
    if kind == "gamma":
        return gamma(x)
    if kind == "beta":
        return beta(x, 0.5 if y is None else y)
    if kind == "erf":
        return erf(x)
    if kind == "zeta":
        return riemann_zeta(x)
    raise NumericsError("unknown special function %r" % kind)


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature

_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5, 13, 11, 9]] = np.concatenate([_WG[:3], _WG[:3]])
_GWEIGHTS[7] = _WG[3]


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fx = np.array([f(c + h * x) for x in _NODES], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise NumericsError("integrand is not finite on [%g, %g]" % (a, b))
    k = h * np.dot(_KWEIGHTS, fx)
    g = h * np.dot(_GWEIGHTS, fx)
    return k, abs(k - g)


def adaptive_quad(f, lo, hi, tol=1e-10, max_intervals=2000):
    """Globally adaptive G7-K15 quadrature of f over [lo, hi].

    Infinite endpoints are mapped onto finite ones (x = lo + t/(1-t) style).
    Raises ConvergenceError when the interval budget runs out.
    """
    if tol <= 0:
        raise NumericsError("tol must be positive")
    if lo == hi:
        return 0.0
    if lo > hi:
        return -adaptive_quad(f, hi, lo, tol, max_intervals)
    if math.isinf(lo) and math.isinf(hi):
        return (adaptive_quad(f, -math.inf, 0.0, tol / 2, max_intervals)
                + adaptive_quad(f, 0.0, math.inf, tol / 2, max_intervals))
    if math.isinf(hi):
        g = lambda t: f(lo + t / (1.0 - t)) / (1.0 - t) ** 2
        return adaptive_quad(g, 0.0, 1.0, tol, max_intervals)
    if math.isinf(lo):
        g = lambda t: f(hi - t / (1.0 - t)) / (1.0 - t) ** 2
        return adaptive_quad(g, 0.0, 1.0, tol, max_intervals)

    val, err = _gk15(f, lo, hi)
    heap = [(-err, lo, hi, val)]
    total, total_err = val, err
    count = 1
    while total_err > tol:
        if count >= max_intervals:
            raise ConvergenceError("adaptive_quad: %d intervals, error %.3g > %.3g"
                                   % (count, total_err, tol))
        neg_err, a, b, v = heapq.heappop(heap)
        m = 0.5 * (a + b)
        v1, e1 = _gk15(f, a, m)
        v2, e2 = _gk15(f, m, b)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, a, m, v1))
        heapq.heappush(heap, (-e2, m, b, v2))
        count += 1
    # resum to limit drift from the running updates
    return float(sum(item[3] for item in heap))

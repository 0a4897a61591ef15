"""Torsion of finite based cochain complexes with inner products.

Conventions
-----------
* Cochain complexes: ``diff[q]`` maps degree q to degree q + 1.
* ``gram[q]`` is the inner product of C^q in the preferred basis.
* Torsion is reported as the log of its absolute value:

      log tau = -1/2 sum_q (-1)^q q log det' Delta_q  -  sum_q (-1)^q log |det W^q|

  where mu^q = omega^q W^q expresses the chosen cohomology basis mu in an
  orthonormal harmonic basis omega.  With this sign the acyclic complex
  0 -> R --(c)--> R -> 0 has log tau = +log|c|.
* Long exact sequences of a short exact sequence 0 -> A -> B -> C -> 0 are
  graded H^0(A), H^0(B), H^0(C), H^1(A), ... starting in degree
  ``LES_START_DEGREE``; with that choice Milnor's formula reads
  log tau(B) = log tau(A) + log tau(C) + log tau(H).
"""
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import numerics

LES_START_DEGREE = 0


class ComplexError(ValueError):
    pass


class ExactnessError(ComplexError):
    def __init__(self, message, degree=None):
        super().__init__(message)
        self.degree = degree


def _as_matrix(M, rows, cols):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((rows, cols))
    if M.shape != (rows, cols):
        raise ComplexError("expected a %dx%d matrix, got %s" % (rows, cols, M.shape))
    return M


class BasedComplex:
    """Finite cochain complex C^0 -> ... -> C^m with Gram matrices."""

    def __init__(self, dims, diffs, grams=None, check=True, tol=1e-12):
        self.dims = [int(n) for n in dims]
        if any(n < 0 for n in self.dims):
            raise ComplexError("negative dimension")
        m = len(self.dims) - 1
        if len(diffs) != max(m, 0):
            raise ComplexError("need %d differentials, got %d" % (max(m, 0), len(diffs)))
        self.diff = [_as_matrix(diffs[q], self.dims[q + 1], self.dims[q]) for q in range(m)]
        if grams is None:
            self.gram = [np.eye(n) for n in self.dims]
        else:
            if len(grams) != len(self.dims):
                raise ComplexError("need one gram matrix per degree")
            self.gram = [_as_matrix(g, n, n) for g, n in zip(grams, self.dims)]
        self._chol = None
        self._hodge = None
        if check:
            self.validate(tol)

    @property
    def top_degree(self):
        return len(self.dims) - 1

    def validate(self, tol=1e-12):
        for q in range(self.top_degree - 1):
            dd = self.diff[q + 1] @ self.diff[q]
            scale = max(1.0, np.abs(self.diff[q + 1]).max(initial=0) * np.abs(self.diff[q]).max(initial=0))
            if np.abs(dd).max(initial=0.0) > tol * scale * max(1, self.dims[q + 1]):
                raise ComplexError("d^2 != 0 in degree %d" % q)
        for q, g in enumerate(self.gram):
            if g.size == 0:
                continue
            numerics.check_symmetric(g)
            if np.linalg.eigvalsh(g)[0] <= 0:
                raise ComplexError("gram matrix in degree %d is not positive definite" % q)

    # orthonormal coordinates: y = L^T x with gram = L L^T
    def cholesky(self):
        if self._chol is None:
            self._chol = [np.linalg.cholesky(g) if g.size else np.zeros((0, 0)) for g in self.gram]
        return self._chol

    def orthonormal_diff(self, q):
        L = self.cholesky()
        d = self.diff[q]
        if d.size == 0:
            return np.zeros_like(d)
        return L[q + 1].T @ d @ np.linalg.inv(L[q].T)

    def to_orthonormal(self, q, x):
        return self.cholesky()[q].T @ x

    def from_orthonormal(self, q, y):
        L = self.cholesky()[q]
        if L.size == 0:
            return np.zeros((0,) + np.shape(y)[1:])
        return np.linalg.solve(L.T, y)

    def betti(self):
        return [h.harmonic.shape[1] for h in hodge_decompose(self)]

    def euler_characteristic(self):
        return sum((-1) ** q * n for q, n in enumerate(self.dims))

    def to_json(self):
        return json.dumps({
            "dims": self.dims,
            "diffs": [d.tolist() for d in self.diff],
            "grams": [g.tolist() for g in self.gram],
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        try:
            dims = data["dims"]
            diffs = [np.array(d, dtype=float).reshape(dims[q + 1], dims[q])
                     for q, d in enumerate(data["diffs"])]
            grams = data.get("grams")
            if grams is not None:
                grams = [np.array(g, dtype=float).reshape(n, n) for g, n in zip(grams, dims)]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ComplexError("malformed complex description: %s" % exc) from exc
        return cls(dims, diffs, grams)


@dataclass
class HodgeData:
    harmonic: np.ndarray          # columns: gram-orthonormal harmonic cochains
    spectrum: np.ndarray          # nonzero eigenvalues of the Laplacian, ascending
    logdet_prime: float


@dataclass
class TorsionReport:
    log_torsion: float
    per_degree_logdetprime: List[float]
    basis_factor: float           # -sum (-1)^q log|det W^q|
    analytic_part: float = 0.0    # -1/2 sum (-1)^q q log det' Delta_q
    betti: List[int] = field(default_factory=list)


def hodge_decompose(C: BasedComplex, rank_tol=numerics.RANK_TOL):
    """Harmonic cochains and nonzero Laplacian spectrum in each degree."""
    if C._hodge is not None:
        return C._hodge
    m = C.top_degree
    dt = [C.orthonormal_diff(q) for q in range(m)]
    # one scale for the whole complex so that maps which vanish up to
    # roundoff get rank 0
    svs = [numerics.singular_values(d) if d.size else np.zeros(0) for d in dt]
    scale = max([1.0] + [s[0] for s in svs if s.size])
    ranks = [int(np.sum(s > rank_tol * scale)) for s in svs]
    out = []
    for q in range(m + 1):
        n = C.dims[q]
        lap = np.zeros((n, n))
        if q > 0 and dt[q - 1].size:
            lap += dt[q - 1] @ dt[q - 1].T
        if q < m and dt[q].size:
            lap += dt[q].T @ dt[q]
        h = n - (ranks[q] if q < m else 0) - (ranks[q - 1] if q > 0 else 0)
        if n == 0:
            out.append(HodgeData(np.zeros((0, 0)), np.zeros(0), 0.0))
            continue
        w, V = numerics.eig_sym(0.5 * (lap + lap.T))
        harm = C.from_orthonormal(q, V[:, :h])
        spec = w[h:]
        if spec.size and spec[0] <= 0:
            raise ComplexError("Laplacian spectrum not separated from zero in degree %d" % q)
        out.append(HodgeData(harm, spec, float(np.sum(np.log(spec)))))
    C._hodge = out
    return out


def cohomology_coords(C: BasedComplex, q, x, basis=None, tol=1e-8):
    """Coordinates of the class of the cocycle(s) x in the given basis.

    basis defaults to the orthonormal harmonic basis of degree q.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    hd = hodge_decompose(C)[q]
    omega = hd.harmonic
    coords = omega.T @ C.gram[q] @ x
    if basis is None:
        return coords
    W = omega.T @ C.gram[q] @ np.asarray(basis, dtype=float)
    return np.linalg.solve(W, coords)


def is_cocycle(C: BasedComplex, q, x, tol=1e-9):
    if q >= C.top_degree or C.dims[q + 1] == 0:
        return True
    dx = C.diff[q] @ x
    scale = max(1.0, np.abs(x).max(initial=0.0))
    return np.abs(dx).max(initial=0.0) <= tol * scale * max(1.0, np.abs(C.diff[q]).max(initial=0))


def log_torsion(C: BasedComplex, mu: Optional[Sequence] = None) -> TorsionReport:
    """Torsion of C relative to the cohomology basis mu (list of matrices).

    mu[q] holds cocycles as columns; None means the orthonormal harmonic
    basis in every degree.
    """
    hodge = hodge_decompose(C)
    logdets = [h.logdet_prime for h in hodge]
    # zeta'(0) = -log det'
    analytic = -0.5 * sum((-1) ** q * q * L for q, L in enumerate(logdets))
    factor = 0.0
    if mu is not None:
        if len(mu) != len(hodge):
            raise ComplexError("cohomology basis needs one entry per degree")
        for q, (h, mq) in enumerate(zip(hodge, mu)):
            b = h.harmonic.shape[1]
            mq = np.asarray(mq, dtype=float).reshape(C.dims[q], -1) if b else np.zeros((C.dims[q], 0))
            if mq.shape[1] != b:
                raise ComplexError("degree %d: basis has %d vectors, cohomology has dimension %d"
                                   % (q, mq.shape[1], b))
            if b == 0:
                continue
            if not is_cocycle(C, q, mq):
                raise ComplexError("degree %d: basis vectors are not cocycles" % q)
            W = h.harmonic.T @ C.gram[q] @ mq
            try:
                factor -= (-1) ** q * numerics.log_abs_det(W)
            except numerics.NumericsError as exc:
                raise ComplexError("degree %d: mu is not a basis of cohomology" % q) from exc
    return TorsionReport(analytic + factor, logdets, factor, analytic,
                         [h.harmonic.shape[1] for h in hodge])


def dual_complex(C: BasedComplex) -> BasedComplex:
    """Transposed differentials, reversed grading, inverse Gram matrices."""
    m = C.top_degree
    dims = C.dims[::-1]
    diffs = [C.diff[m - 1 - p].T for p in range(m)]
    grams = [np.linalg.inv(g) if g.size else g for g in C.gram[::-1]]
    return BasedComplex(dims, diffs, grams)


def direct_sum(*complexes: BasedComplex) -> BasedComplex:
    m = max(c.top_degree for c in complexes)
    dims = [sum(c.dims[q] if q <= c.top_degree else 0 for c in complexes) for q in range(m + 1)]

    def block(mats):
        from scipy.linalg import block_diag
        mats = [np.asarray(M, float) for M in mats]
        if not mats:
            return np.zeros((0, 0))
        return block_diag(*mats)

    diffs = []
    for q in range(m):
        parts = []
        for c in complexes:
            if q < c.top_degree:
                parts.append(c.diff[q])
            else:
                rows = c.dims[q + 1] if q + 1 <= c.top_degree else 0
                cols = c.dims[q] if q <= c.top_degree else 0
                parts.append(np.zeros((rows, cols)))
        D = block(parts)
        diffs.append(D.reshape(dims[q + 1], dims[q]))
    grams = []
    for q in range(m + 1):
        parts = [c.gram[q] if q <= c.top_degree else np.zeros((0, 0)) for c in complexes]
        grams.append(block(parts).reshape(dims[q], dims[q]))
    return BasedComplex(dims, diffs, grams)


# ---------------------------------------------------------------------------
# long exact sequences

def les_as_complex(spaces, maps, start_degree=0, rank_tol=numerics.RANK_TOL):
    """Package an exact sequence V_0 -> V_1 -> ... as an acyclic BasedComplex.

    spaces: dimensions (ints) or Gram matrices; maps[k]: V_k -> V_{k+1}.
    Raises ExactnessError naming the first position where exactness fails.
    """
    grams = []
    for s in spaces:
        if np.isscalar(s):
            grams.append(np.eye(int(s)))
        else:
            grams.append(np.asarray(s, dtype=float))
    dims = [g.shape[0] for g in grams]
    if len(maps) != len(dims) - 1:
        raise ComplexError("need len(spaces) - 1 maps")
    maps = [_as_matrix(M, dims[k + 1], dims[k]) for k, M in enumerate(maps)]
    for k in range(len(maps) - 1):
        comp = maps[k + 1] @ maps[k]
        if np.abs(comp).max(initial=0.0) > 1e-8 * max(1.0, np.abs(maps[k]).max(initial=0) * np.abs(maps[k + 1]).max(initial=0)):
            raise ExactnessError("consecutive maps do not compose to zero at position %d" % (k + 1),
                                 k + 1 + start_degree)
    # a map that vanishes up to roundoff must count as rank 0, so ranks are
    # measured against one scale shared by the whole sequence
    scale = max([1.0] + [numerics.singular_values(M)[0] for M in maps if M.size])
    ranks = [int(np.sum(numerics.singular_values(M) > rank_tol * scale)) if M.size else 0
             for M in maps]
    for k, n in enumerate(dims):
        r_in = ranks[k - 1] if k > 0 else 0
        r_out = ranks[k] if k < len(maps) else 0
        if r_in + r_out != n:
            raise ExactnessError("sequence not exact at position %d (dim %d, rank in %d, rank out %d)"
                                 % (k, n, r_in, r_out), k + start_degree)
    pad = start_degree
    dims_full = [0] * pad + dims
    maps_full = [np.zeros((dims_full[k + 1], dims_full[k])) for k in range(pad)] + maps
    grams_full = [np.zeros((0, 0))] * pad + grams
    return BasedComplex(dims_full, maps_full, grams_full, tol=1e-8)


@dataclass
class ShortExactSequence:
    """0 -> sub --i--> total --p--> quot -> 0, degreewise matrices."""
    sub: BasedComplex
    total: BasedComplex
    quot: BasedComplex
    i_maps: List[np.ndarray]
    p_maps: List[np.ndarray]

    def check(self, tol=1e-9):
        m = self.total.top_degree
        for q in range(m + 1):
            i, p = self.i_maps[q], self.p_maps[q]
            if p.size and i.size and np.abs(p @ i).max() > tol:
                raise ComplexError("p o i != 0 in degree %d" % q)
            if q < m:
                lhs = self.total.diff[q] @ i if i.size else None
                if lhs is not None and np.abs(lhs - self.i_maps[q + 1] @ self.sub.diff[q]).max(initial=0) > tol:
                    raise ComplexError("i is not a chain map in degree %d" % q)
                if p.size and np.abs(self.quot.diff[q] @ p - self.p_maps[q + 1] @ self.total.diff[q]).max(initial=0) > tol:
                    raise ComplexError("p is not a chain map in degree %d" % q)

    def volume_defect(self):
        """sum_q |log|det [i(e'), s(e'')]|| in orthonormal coordinates.

        Zero when the preferred bases of sub, total and quot are compatible,
        which is what Milnor's multiplicativity formula needs.
        """
        total_defect = 0.0
        for q in range(self.total.top_degree + 1):
            n = self.total.dims[q]
            if n == 0:
                continue
            Lt = self.total.cholesky()[q]
            cols = []
            if self.sub.dims[q]:
                Ls = self.sub.cholesky()[q]
                cols.append(Lt.T @ self.i_maps[q] @ np.linalg.inv(Ls.T))
            if self.quot.dims[q]:
                Lq = self.quot.cholesky()[q]
                pt = Lq.T @ self.p_maps[q] @ np.linalg.inv(Lt.T)
                cols.append(np.linalg.pinv(pt))
            M = np.hstack(cols)
            total_defect += abs(numerics.log_abs_det(M))
        return total_defect


def _lift(p, y):
    sol, *_ = np.linalg.lstsq(p, y, rcond=None)
    return sol


def long_exact_sequence(ses: ShortExactSequence, bases=None):
    """Spaces and maps of the cohomology long exact sequence.

    bases: optional dict with keys "sub", "total", "quot", each a list of
    per-degree cocycle bases; orthonormal harmonic bases are used otherwise.
    Returns (spaces, maps, labels) where labels[k] = (name, degree).
    """
    bases = bases or {}
    A, B, Cq = ses.sub, ses.total, ses.quot
    m = B.top_degree
    hA, hB, hC = hodge_decompose(A), hodge_decompose(B), hodge_decompose(Cq)

    def basis(name, cx, hd, q):
        given = bases.get(name)
        if given is not None and given[q] is not None:
            arr = np.asarray(given[q], float)
            return arr.reshape(cx.dims[q], -1) if arr.size else np.zeros((cx.dims[q], 0))
        return hd[q].harmonic

    spaces, maps, labels = [], [], []
    for q in range(m + 1):
        bA, bB, bC = basis("sub", A, hA, q), basis("total", B, hB, q), basis("quot", Cq, hC, q)
        spaces += [bA.shape[1], bB.shape[1], bC.shape[1]]
        labels += [("sub", q), ("total", q), ("quot", q)]
        # i_*: H^q(A) -> H^q(B)
        if bA.shape[1] and bB.shape[1]:
            maps.append(cohomology_coords(B, q, ses.i_maps[q] @ bA, bB))
        else:
            maps.append(np.zeros((bB.shape[1], bA.shape[1])))
        # p_*: H^q(B) -> H^q(C)
        if bB.shape[1] and bC.shape[1]:
            maps.append(cohomology_coords(Cq, q, ses.p_maps[q] @ bB, bC))
        else:
            maps.append(np.zeros((bC.shape[1], bB.shape[1])))
        if q == m:
            break
        # connecting map H^q(C) -> H^{q+1}(A)
        bA1 = basis("sub", A, hA, q + 1)
        if bC.shape[1] and bA1.shape[1]:
            x = _lift(ses.p_maps[q], bC)
            dx = B.diff[q] @ x
            y = _lift(ses.i_maps[q + 1], dx)
            maps.append(cohomology_coords(A, q + 1, y, bA1))
        else:
            maps.append(np.zeros((bA1.shape[1], bC.shape[1])))
    return spaces, maps, labels


def les_complex(ses: ShortExactSequence, bases=None) -> BasedComplex:
    spaces, maps, _ = long_exact_sequence(ses, bases)
    return les_as_complex(spaces, maps, start_degree=LES_START_DEGREE)


def milnor_check(sub, total, quot, H, mu=None):
    """|log tau(total) - log tau(sub) - log tau(quot) - log tau(H)|.

    mu: optional dict of cohomology bases keyed "sub", "total", "quot"; these
    must be the bases used to build H.
    """
    m = max(sub.top_degree, total.top_degree, quot.top_degree)
    if not (sub.top_degree == total.top_degree == quot.top_degree):
        raise ComplexError("incompatible dimensions: complexes have different lengths")
    for q in range(m + 1):
        if sub.dims[q] + quot.dims[q] != total.dims[q]:
            raise ComplexError("incompatible dimensions in degree %d" % q)
    mu = mu or {}
    t_total = log_torsion(total, mu.get("total")).log_torsion
    t_sub = log_torsion(sub, mu.get("sub")).log_torsion
    t_quot = log_torsion(quot, mu.get("quot")).log_torsion
    t_h = log_torsion(H).log_torsion
    return abs(t_total - t_sub - t_quot - t_h)


# ---------------------------------------------------------------------------
# random test material

def random_complex(rng, dims_h, dims_e, cond=3.0):
    """Random complex with prescribed cohomology and 'exact pair' dimensions.

    dims_h[q]: dim H^q;  dims_e[q]: rank of d_q.  gram = I.
    """
    m = len(dims_h) - 1
    rank_in = [0] + list(dims_e)
    dims = [dims_h[q] + rank_in[q] + (dims_e[q] if q < m else 0) for q in range(m + 1)]
    Qs = [_random_orthogonal(rng, n) for n in dims]
    diffs = []
    for q in range(m):
        r = dims_e[q]
        D = np.zeros((dims[q + 1], dims[q]))
        if r:
            core = rng.uniform(1.0, cond, size=r)
            U = _random_orthogonal(rng, r)
            V = _random_orthogonal(rng, r)
            # columns [0:r] of C^q map onto columns [dims_h+rank_in] ... use a fixed layout:
            # C^q = [exact-source(r) | harmonic | image-of-previous]
            blk = U @ np.diag(core) @ V.T
            D[dims[q + 1] - rank_in[q + 1]:, :r] = blk
        diffs.append(D)
    # layout per degree: [source of d_q (dims_e[q]) | harmonic | image of d_{q-1} (rank_in[q])]
    diffs = [Qs[q + 1] @ diffs[q] @ Qs[q].T for q in range(m)]
    return BasedComplex(dims, diffs)


def _random_orthogonal(rng, n):
    if n == 0:
        return np.zeros((0, 0))
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    return Q * np.sign(np.diag(R))


def random_split_ses(rng, max_dim=3, length=3, twist=True, min_gap=1e-3):
    """Random short exact sequence A -> B -> C with B = A (+) C as vector spaces.

    The differential of B is [[d_A, f], [0, d_C]] with
    f_q = g_q + d_A h_q - h_{q+1} d_C, where g_q sends (im d_C)^perp to
    cocycles of A.  The g part makes the connecting map nonzero in general.
    Draws whose total complex has a Laplacian eigenvalue in (0, min_gap)
    are rejected, so that ranks are unambiguous.
    """
    for _ in range(1000):
        ses = _draw_split_ses(rng, max_dim, length, twist)
        low = [h.spectrum[0] for h in hodge_decompose(ses.total) if h.spectrum.size]
        if not low or min(low) >= min_gap:
            return ses
    raise ComplexError("could not draw a well-conditioned sequence")


def _draw_split_ses(rng, max_dim, length, twist):
    m = length - 1

    def rand_dims():
        h = [int(rng.integers(0, max_dim + 1)) for _ in range(m + 1)]
        e = [int(rng.integers(0, max_dim + 1)) for _ in range(m)]
        return h, e

    A = random_complex(rng, *rand_dims())
    Cq = random_complex(rng, *rand_dims())
    dims = [a + c for a, c in zip(A.dims, Cq.dims)]
    hs = [rng.normal(size=(A.dims[q], Cq.dims[q])) for q in range(m + 1)]
    diffs = []
    for q in range(m):
        a0, a1 = A.dims[q], A.dims[q + 1]
        f = np.zeros((a1, Cq.dims[q]))
        if twist and f.size:
            Z = numerics.null_space(A.diff[q + 1]) if q + 1 < m else np.eye(a1)
            K = numerics.null_space(Cq.diff[q - 1].T) if q > 0 else np.eye(Cq.dims[q])
            f = Z @ rng.normal(size=(Z.shape[1], K.shape[1])) @ K.T
            f = f + A.diff[q] @ hs[q] - hs[q + 1] @ Cq.diff[q]
        D = np.zeros((dims[q + 1], dims[q]))
        D[:a1, :a0] = A.diff[q]
        D[a1:, a0:] = Cq.diff[q]
        D[:a1, a0:] = f
        diffs.append(D)
    B = BasedComplex(dims, diffs, tol=1e-9)
    i_maps = [np.vstack([np.eye(a), np.zeros((c, a))]) for a, c in zip(A.dims, Cq.dims)]
    p_maps = [np.hstack([np.zeros((c, a)), np.eye(c)]) for a, c in zip(A.dims, Cq.dims)]
    return ShortExactSequence(A, B, Cq, i_maps, p_maps)


def random_cocycle_basis(rng, C: BasedComplex, q, cond=3.0):
    """Harmonic basis mixed by a random invertible matrix, shifted by coboundaries."""
    H = hodge_decompose(C)[q].harmonic
    b = H.shape[1]
    if b == 0:
        return np.zeros((C.dims[q], 0))
    W = _random_orthogonal(rng, b) @ np.diag(rng.uniform(1.0, cond, size=b)) @ _random_orthogonal(rng, b)
    X = H @ W
    if q > 0 and C.dims[q - 1]:
        X = X + C.diff[q - 1] @ rng.normal(size=(C.dims[q - 1], b))
    return X


def milnor_suite(seed, n=100, random_bases=True, max_dim=3, length=3):
    """Milnor residuals for n seeded random short exact sequences."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        ses = random_split_ses(rng, max_dim=max_dim, length=length)
        mu = None
        if random_bases:
            mu = {name: [random_cocycle_basis(rng, cx, q) for q in range(cx.top_degree + 1)]
                  for name, cx in (("sub", ses.sub), ("total", ses.total), ("quot", ses.quot))}
        H = les_complex(ses, mu)
        out.append(milnor_check(ses.sub, ses.total, ses.quot, H, mu))
    return out

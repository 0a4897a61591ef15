"""Twisted simplicial cochains, cuts, cones and intersection complexes.

Vertices are integers and every simplex is a strictly increasing tuple, so
the first vertex v0 of a simplex is its smallest.  A q-cochain with values
in a flat system assigns to each q-simplex a vector in the fiber over v0;
the coboundary transports the value on the face opposite v0 back along the
edge (v0, v1):

    (dx)(s) = h_{v0 v1}^{-1} x(d_0 s) + sum_{i >= 1} (-1)^i x(d_i s)

where h_{ab}: F_a -> F_b is the holonomy of the edge a < b.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from . import chain_torsion as ct
from . import model_formulas as mf
from . import numerics


class SimplicialError(ValueError):
    pass


class CollarError(SimplicialError):
    pass


class HolonomyError(SimplicialError):
    pass


class SimplicialComplex:
    """Finite simplicial complex on vertices 0..n-1, closed under faces."""

    def __init__(self, n_vertices, simplices, labels=None):
        self.n_vertices = int(n_vertices)
        closure = set((v,) for v in range(self.n_vertices))
        for s in simplices:
            s = tuple(int(v) for v in s)
            if list(s) != sorted(set(s)):
                raise SimplicialError("simplex %r is not strictly increasing" % (s,))
            if s and (s[0] < 0 or s[-1] >= self.n_vertices):
                raise SimplicialError("simplex %r uses an unknown vertex" % (s,))
            for r in range(1, len(s) + 1):
                closure.update(itertools.combinations(s, r))
        dim = max(len(s) for s in closure) - 1 if closure else -1
        self.simplices = [sorted(s for s in closure if len(s) == q + 1) for q in range(dim + 1)]
        self.index = [{s: i for i, s in enumerate(level)} for level in self.simplices]
        self.labels = list(labels) if labels is not None else list(range(self.n_vertices))

    @property
    def dim(self):
        return len(self.simplices) - 1

    def count(self, q):
        return len(self.simplices[q]) if 0 <= q <= self.dim else 0

    def euler_characteristic(self):
        return sum((-1) ** q * len(level) for q, level in enumerate(self.simplices))

    def edges(self):
        return self.simplices[1] if self.dim >= 1 else []

    def full_subcomplex(self, vertices):
        """Subcomplex of all simplices with vertices in the given set, relabelled 0..k-1."""
        vs = sorted(set(vertices))
        new = {v: i for i, v in enumerate(vs)}
        simp = [tuple(new[v] for v in s) for level in self.simplices for s in level
                if all(v in new for v in s)]
        return SimplicialComplex(len(vs), simp, [self.labels[v] for v in vs]), vs

    def components(self):
        parent = list(range(self.n_vertices))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges():
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        return len({find(v) for v in range(self.n_vertices)})

    def to_dict(self):
        return {"n_vertices": self.n_vertices,
                "simplices": [list(s) for s in self.maximal_simplices()]}

    def maximal_simplices(self):
        out = []
        for q in range(self.dim, -1, -1):
            for s in self.simplices[q]:
                if not any(set(s) < set(t) for t in out):
                    out.append(s)
        return out


class FlatSystem:
    """Flat R^k system given by edge holonomies h_ab: F_a -> F_b for a < b."""

    def __init__(self, rank, holonomy=None):
        self.rank = int(rank)
        self.holonomy = {}
        for (a, b), M in (holonomy or {}).items():
            M = np.atleast_2d(np.asarray(M, dtype=float))
            if M.shape != (self.rank, self.rank):
                raise HolonomyError("holonomy of edge %r has shape %s" % ((a, b), M.shape))
            if a < b:
                self.holonomy[(int(a), int(b))] = M
            elif a > b:
                self.holonomy[(int(b), int(a))] = np.linalg.inv(M)
            else:
                raise HolonomyError("loop edge %r" % ((a, b),))

    @classmethod
    def trivial(cls, rank=1):
        return cls(rank)

    def h(self, a, b):
        if a == b:
            return np.eye(self.rank)
        if a < b:
            return self.holonomy.get((a, b), np.eye(self.rank))
        return np.linalg.inv(self.h(b, a))

    def validate(self, K: SimplicialComplex, tol=1e-12):
        for (a, b), M in self.holonomy.items():
            if (a, b) not in K.index[1]:
                raise HolonomyError("holonomy given on %r, which is not an edge" % ((a, b),))
            if abs(abs(np.linalg.det(M)) - 1.0) > 1e-10:
                raise HolonomyError("holonomy on edge %r is not unimodular (|det| = %g)"
                                    % ((a, b), abs(np.linalg.det(M))))
        if K.dim >= 2:
            for a, b, c in K.simplices[2]:
                err = np.abs(self.h(b, c) @ self.h(a, b) - self.h(a, c)).max()
                if err > tol * max(1.0, np.abs(self.h(a, c)).max()):
                    raise HolonomyError("cocycle condition fails on triangle %r" % ((a, b, c),))

    def restrict(self, vertex_map):
        """Pull back along an order-preserving vertex map new -> old."""
        hol = {}
        vm = list(vertex_map)
        for i in range(len(vm)):
            for j in range(i + 1, len(vm)):
                a, b = vm[i], vm[j]
                if a == b:
                    continue
                key = (a, b) if a < b else (b, a)
                if key in self.holonomy:
                    hol[(i, j)] = self.h(a, b)
        return FlatSystem(self.rank, hol)

    def to_dict(self):
        return {"rank": self.rank,
                "holonomy": [[a, b, M.tolist()] for (a, b), M in sorted(self.holonomy.items())]}


# ---------------------------------------------------------------------------
# cochain complexes

def coboundary_matrices(K: SimplicialComplex, F: FlatSystem):
    k = F.rank
    diffs = []
    for q in range(K.dim):
        D = np.zeros((k * K.count(q + 1), k * K.count(q)))
        idx = K.index[q]
        for r, s in enumerate(K.simplices[q + 1]):
            for i in range(q + 2):
                face = s[:i] + s[i + 1:]
                c = idx[face]
                if i == 0:
                    block = np.linalg.inv(F.h(s[0], s[1]))
                else:
                    block = (-1) ** i * np.eye(k)
                D[r * k:(r + 1) * k, c * k:(c + 1) * k] += block
        diffs.append(D)
    return diffs


def twisted_complex(K: SimplicialComplex, F: FlatSystem, validate=True) -> ct.BasedComplex:
    if validate:
        F.validate(K)
    dims = [F.rank * K.count(q) for q in range(K.dim + 1)]
    return ct.BasedComplex(dims, coboundary_matrices(K, F))


def restriction_matrix(K, L, vertex_map, q, rank):
    """C^q(K) -> C^q(L) for a subcomplex L given by an order-preserving vertex map L -> K."""
    R = np.zeros((rank * L.count(q), rank * K.count(q)))
    for r, s in enumerate(L.simplices[q] if q <= L.dim else []):
        t = tuple(vertex_map[v] for v in s)
        c = K.index[q].get(t)
        if c is None:
            raise SimplicialError("simplex %r of the subcomplex is missing" % (t,))
        R[r * rank:(r + 1) * rank, c * rank:(c + 1) * rank] = np.eye(rank)
    return R


def cohomology_dims(K, F):
    return twisted_complex(K, F).betti()


# ---------------------------------------------------------------------------
# built-in complexes

def circle(n=3):
    return SimplicialComplex(n, [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)])


def interval(n=2):
    return SimplicialComplex(n, [(i, i + 1) for i in range(n - 1)])


def sphere(d=2):
    """Boundary of the (d+1)-simplex."""
    return SimplicialComplex(d + 2, list(itertools.combinations(range(d + 2), d + 1)))


def product(A: SimplicialComplex, B: SimplicialComplex):
    """Staircase triangulation of A x B; vertex (a, b) gets index a * nB + b."""
    nB = B.n_vertices
    simp = []
    for s in A.maximal_simplices():
        for t in B.maximal_simplices():
            p, r = len(s) - 1, len(t) - 1
            for ups in itertools.combinations(range(p + r), p):
                i = j = 0
                chain = [(s[0], t[0])]
                for step in range(p + r):
                    if step in ups:
                        i += 1
                    else:
                        j += 1
                    chain.append((s[i], t[j]))
                simp.append(tuple(a * nB + b for a, b in chain))
    labels = [(a, b) for a in range(A.n_vertices) for b in range(nB)]
    return SimplicialComplex(A.n_vertices * nB, simp, labels)


@dataclass
class CutCase:
    """A complex with a two-sided subcomplex Z and the vertex sets on its two sides."""
    name: str
    K: SimplicialComplex
    F: FlatSystem
    Z: List[int]
    plus: List[int]
    minus: List[int]


def _slice(nB, a):
    return [a * nB + b for b in range(nB)]


def s1xs2_case(holonomy=None):
    """S^1 x S^2 from a 3-cycle and the boundary of a tetrahedron, cut along {0} x S^2.

    holonomy: optional matrix placed on every edge from slice 0 to slice 2,
    i.e. the monodromy around the circle factor.
    """
    C, S = circle(3), sphere(2)
    K = product(C, S)
    nB = S.n_vertices
    hol = {}
    rank = 1
    if holonomy is not None:
        H = np.atleast_2d(np.asarray(holonomy, dtype=float))
        rank = H.shape[0]
        for a, b in K.edges():
            if a // nB == 0 and b // nB == 2:
                hol[(a, b)] = H
    F = FlatSystem(rank, hol)
    name = "s1xs2" if holonomy is None else "s1xs2-twisted"
    return CutCase(name, K, F, _slice(nB, 0), _slice(nB, 1), _slice(nB, 2))


def torus_case():
    """3x3 torus cut along a meridian circle."""
    C = circle(3)
    K = product(C, C)
    return CutCase("torus", K, FlatSystem(1), _slice(3, 0), _slice(3, 1), _slice(3, 2))


def dumbbell_case():
    """Two discs joined by a tube (a sphere), cut along the neck circle."""
    tube = product(circle(3), interval(3))
    # tube vertex (c, s) has index 3 c + s; relabel so the apexes come last
    simp = list(tube.maximal_simplices())
    apex0, apex1 = 9, 10
    for a, b in [(0, 1), (1, 2), (0, 2)]:
        simp.append((3 * a, 3 * b, apex0))
        simp.append((3 * a + 2, 3 * b + 2, apex1))
    K = SimplicialComplex(11, [tuple(sorted(s)) for s in simp])
    Z = [3 * c + 1 for c in range(3)]
    plus = [3 * c + 2 for c in range(3)] + [apex1]
    minus = [3 * c for c in range(3)] + [apex0]
    return CutCase("dumbbell", K, FlatSystem(1), Z, plus, minus)


def builtin_case(name):
    if name == "s1xs2":
        return s1xs2_case()
    if name in ("s1xs2-twisted", "s1xs2-minus"):
        return s1xs2_case(-1.0)
    if name == "s1xs2-hyperbolic":
        return s1xs2_case([[2.0, 1.0], [1.0, 1.0]])
    if name in ("torus", "handle"):
        return torus_case()
    if name.startswith("dumbbell"):
        return dumbbell_case()
    raise SimplicialError("unknown built-in case %r" % name)


def case_from_dict(d):
    try:
        K = SimplicialComplex(int(d["n_vertices"]), [tuple(s) for s in d["simplices"]])
        hol = {}
        rank = int(d.get("rank", 1))
        for a, b, M in d.get("holonomy", []):
            hol[(int(a), int(b))] = np.array(M, dtype=float).reshape(rank, rank)
        F = FlatSystem(rank, hol)
        collar = d.get("collar", {})
        return CutCase(d.get("name", "custom"), K, F, list(collar.get("Z", [])),
                       list(collar.get("plus", [])), list(collar.get("minus", [])))
    except (KeyError, TypeError, ValueError) as exc:
        raise SimplicialError("malformed complex description: %s" % exc) from exc


def case_to_dict(case: CutCase):
    d = case.K.to_dict()
    d.update(case.F.to_dict())
    d["name"] = case.name
    d["collar"] = {"Z": case.Z, "plus": case.plus, "minus": case.minus}
    return d


# ---------------------------------------------------------------------------
# cutting

@dataclass
class Cut:
    K: SimplicialComplex
    F: FlatSystem
    M0: SimplicialComplex
    F0: FlatSystem
    Z: SimplicialComplex
    FZ: FlatSystem
    z_vertices: List[int]          # Z vertex i -> K vertex
    plus_map: List[int]            # Z vertex i -> M0 vertex on the + side
    minus_map: List[int]           # Z vertex i -> M0 vertex on the - side
    projection: List[int]          # M0 vertex -> K vertex

    @property
    def rank(self):
        return self.F.rank

    def pullback(self, q):
        """pi^*: C^q(M) -> C^q(M0)."""
        k = self.rank
        P = np.zeros((k * self.M0.count(q), k * self.K.count(q)))
        for r, s in enumerate(self.M0.simplices[q] if q <= self.M0.dim else []):
            c = self.K.index[q][tuple(self.projection[v] for v in s)]
            P[r * k:(r + 1) * k, c * k:(c + 1) * k] = np.eye(k)
        return P

    def iota(self, q, side):
        vm = self.plus_map if side > 0 else self.minus_map
        return restriction_matrix(self.M0, self.Z, vm, q, self.rank)

    def restrict_to_z(self, q):
        return restriction_matrix(self.K, self.Z, self.z_vertices, q, self.rank)


def cut_along(K: SimplicialComplex, F: FlatSystem, Z, plus, minus) -> Cut:
    """Cut K open along the full subcomplex on Z, using the collar sides plus / minus.

    Every simplex meeting Z must lie in Z u plus or in Z u minus.  Simplices
    inside Z are doubled; the others keep one copy, attached to the side
    their non-Z vertices lie on.
    """
    Zs, Ps, Ns = set(Z), set(plus), set(minus)
    if not Zs:
        raise CollarError("empty cut locus")
    if Zs & Ps or Zs & Ns or Ps & Ns:
        raise CollarError("Z, plus and minus vertex sets must be disjoint")
    new_simp = []
    for level in K.simplices:
        for s in level:
            zpart = [v for v in s if v in Zs]
            rest = [v for v in s if v not in Zs]
            if not zpart:
                new_simp.append(tuple((v, 0) for v in s))
                continue
            if not rest:
                new_simp.append(tuple((v, 1) for v in s))
                new_simp.append(tuple((v, -1) for v in s))
            elif all(v in Ps for v in rest):
                new_simp.append(tuple((v, 1) if v in Zs else (v, 0) for v in s))
            elif all(v in Ns for v in rest):
                new_simp.append(tuple((v, -1) if v in Zs else (v, 0) for v in s))
            else:
                raise CollarError("simplex %r meets Z but is not in a one-sided collar" % (s,))
    keys = sorted({v for s in new_simp for v in s} |
                  {(v, 0) for v in range(K.n_vertices) if v not in Zs} |
                  {(z, t) for z in Zs for t in (1, -1)})
    relabel = {key: i for i, key in enumerate(keys)}
    M0 = SimplicialComplex(len(keys), [tuple(relabel[v] for v in s) for s in new_simp],
                           labels=keys)
    projection = [key[0] for key in keys]
    hol = {}
    for a, b in M0.edges():
        pa, pb = projection[a], projection[b]
        if pa != pb and (min(pa, pb), max(pa, pb)) in F.holonomy:
            hol[(a, b)] = F.h(pa, pb)
    F0 = FlatSystem(F.rank, hol)
    Zc, zv = K.full_subcomplex(Zs)
    FZ = F.restrict(zv)
    plus_map = [relabel[(z, 1)] for z in zv]
    minus_map = [relabel[(z, -1)] for z in zv]
    return Cut(K, F, M0, F0, Zc, FZ, zv, plus_map, minus_map, projection)


def cut_case(case: CutCase) -> Cut:
    return cut_along(case.K, case.F, case.Z, case.plus, case.minus)


# ---------------------------------------------------------------------------
# cones and intersection complexes

def cone_cutoff(m):
    """Lower middle perversity cutoff floor((m-1)/2)."""
    return (m - 1) // 2


@dataclass
class ConeComplex:
    """Truncated cone cochains: C^q(Z) below the cutoff, cocycles at it, 0 above."""
    complex: ct.BasedComplex
    embed: List[np.ndarray]        # columns: orthonormal basis of R^q inside C^q(Z)
    cutoff: int


def cone_complex(Zcx: ct.BasedComplex, m) -> ConeComplex:
    c = cone_cutoff(m)
    top = m
    embed = []
    for q in range(top + 1):
        n = Zcx.dims[q] if q <= Zcx.top_degree else 0
        if q < c:
            embed.append(np.eye(n))
        elif q == c:
            if q < Zcx.top_degree:
                embed.append(numerics.null_space(Zcx.diff[q]))
            else:
                embed.append(np.eye(n))
        else:
            embed.append(np.zeros((n, 0)))
    dims = [E.shape[1] for E in embed]
    diffs = []
    for q in range(top):
        if q < Zcx.top_degree and dims[q] and dims[q + 1]:
            diffs.append(embed[q + 1].T @ Zcx.diff[q] @ embed[q])
        else:
            diffs.append(np.zeros((dims[q + 1], dims[q])))
    return ConeComplex(ct.BasedComplex(dims, diffs, tol=1e-9), embed, c)


@dataclass
class IntersectionComplex:
    complex: ct.BasedComplex
    basis: List[np.ndarray]        # columns: orthonormal basis of K^q inside C^q(M0)
    cone: ConeComplex


def intersection_complex(cut: Cut, m=None) -> IntersectionComplex:
    """Cochains on M0 whose restrictions to both boundary copies lie in the cone complex."""
    M0cx = twisted_complex(cut.M0, cut.F0)
    Zcx = twisted_complex(cut.Z, cut.FZ)
    m = cut.K.dim if m is None else m
    cone = cone_complex(Zcx, m)
    bases = []
    for q in range(m + 1):
        n = M0cx.dims[q] if q <= M0cx.top_degree else 0
        E = cone.embed[q]
        nz = E.shape[0]
        if nz == 0:
            bases.append(np.eye(n))
            continue
        Pc = np.eye(nz) - E @ E.T
        cons = np.vstack([Pc @ cut.iota(q, 1), Pc @ cut.iota(q, -1)])
        bases.append(numerics.null_space(cons, rank_tol=1e-9))
    diffs = []
    for q in range(m):
        B0, B1 = bases[q], bases[q + 1]
        if q < M0cx.top_degree and B0.size and B1.size:
            diffs.append(B1.T @ M0cx.diff[q] @ B0)
        else:
            diffs.append(np.zeros((B1.shape[1], B0.shape[1])))
    dims = [B.shape[1] for B in bases]
    return IntersectionComplex(ct.BasedComplex(dims, diffs, tol=1e-9), bases, cone)


def _relative_bases(cut: Cut, M0cx):
    bases = []
    for q in range(M0cx.top_degree + 1):
        cons = np.vstack([cut.iota(q, 1), cut.iota(q, -1)])
        bases.append(numerics.null_space(cons) if cons.shape[0] else np.eye(M0cx.dims[q]))
    return bases


def relative_complex(cut: Cut) -> ct.BasedComplex:
    """Cochains on M0 vanishing on both boundary copies."""
    M0cx = twisted_complex(cut.M0, cut.F0)
    bases = _relative_bases(cut, M0cx)
    diffs = [bases[q + 1].T @ M0cx.diff[q] @ bases[q] for q in range(M0cx.top_degree)]
    return ct.BasedComplex([B.shape[1] for B in bases], diffs, tol=1e-9)


def hhm_dims(cut: Cut, m=None):
    """Expected IH dimensions for isolated cone points.

    Absolute cohomology of M0 below m/2, relative cohomology above, and for
    even m the image of relative in absolute cohomology in degree m/2.
    """
    m = cut.K.dim if m is None else m
    M0cx = twisted_complex(cut.M0, cut.F0)
    rel = relative_complex(cut)
    absolute, relative = M0cx.betti(), rel.betti()
    out = []
    for q in range(m + 1):
        if 2 * q < m:
            out.append(absolute[q])
        elif 2 * q > m:
            out.append(relative[q])
        else:
            H = ct.hodge_decompose(rel)[q].harmonic
            if H.shape[1] == 0 or absolute[q] == 0:
                out.append(0)
                continue
            X = _relative_bases(cut, M0cx)[q] @ H
            # columns of X have unit norm, so an absolute threshold is meaningful
            sv = numerics.singular_values(ct.cohomology_coords(M0cx, q, X))
            out.append(int(np.sum(sv > 1e-9)))
    return out


# ---------------------------------------------------------------------------
# the two short exact sequences

def mayer_vietoris_ses(cut: Cut):
    """0 -> C(M) -> C(M0) -> C(Z) -> 0 with maps pi^* and iota_+^* - iota_-^*."""
    Mcx = twisted_complex(cut.K, cut.F)
    M0cx = twisted_complex(cut.M0, cut.F0)
    Zfull = _pad_complex(twisted_complex(cut.Z, cut.FZ), Mcx.top_degree)
    top = Mcx.top_degree
    i_maps = [cut.pullback(q) for q in range(top + 1)]
    p_maps = [cut.iota(q, 1) - cut.iota(q, -1) for q in range(top + 1)]
    return ct.ShortExactSequence(Mcx, M0cx, Zfull, i_maps, p_maps)


def _pad_complex(C: ct.BasedComplex, top):
    if C.top_degree >= top:
        return C
    dims = C.dims + [0] * (top - C.top_degree)
    diffs = list(C.diff) + [np.zeros((dims[q + 1], dims[q])) for q in range(C.top_degree, top)]
    return ct.BasedComplex(dims, diffs)


def intersection_ses(cut: Cut, ic: IntersectionComplex = None, m=None):
    """0 -> IC(M^) -> C(M0) + R(CZ) + R(CZ) -> C(Z) + C(Z) -> 0."""
    m = cut.K.dim if m is None else m
    ic = ic or intersection_complex(cut, m)
    M0cx = twisted_complex(cut.M0, cut.F0)
    Zcx = _pad_complex(twisted_complex(cut.Z, cut.FZ), m)
    R = ic.cone.complex
    total = ct.direct_sum(M0cx, R, R)
    quot = ct.direct_sum(Zcx, Zcx)
    i_maps, p_maps = [], []
    for q in range(m + 1):
        B, E = ic.basis[q], ic.cone.embed[q]
        ip, im = cut.iota(q, 1), cut.iota(q, -1)
        i_maps.append(np.vstack([B, E.T @ ip @ B, E.T @ im @ B]))
        nz, r = E.shape
        p_maps.append(np.block([[ip, -E, np.zeros((nz, r))],
                                [im, np.zeros((nz, r)), -E]]))
    return ct.ShortExactSequence(ic.complex, total, quot, i_maps, p_maps)


# ---------------------------------------------------------------------------
# Mayer-Vietoris maps in harmonic bases

def _harm(C):
    return [h.harmonic for h in ct.hodge_decompose(C)]


def mv_maps(cut: Cut):
    """Maps of H^q(M) -> H^q(M0) -> H^q(Z) -> H^{q+1}(M) in orthonormal harmonic bases."""
    ses = mayer_vietoris_ses(cut)
    spaces, maps, labels = ct.long_exact_sequence(ses)
    report = {"exact": True, "failing_position": None}
    try:
        ct.les_as_complex(spaces, maps)
    except ct.ExactnessError as exc:
        report = {"exact": False, "failing_position": exc.degree, "message": str(exc)}
    top = ses.total.top_degree
    i_q = [maps[3 * q] for q in range(top + 1)]
    j_q = [maps[3 * q + 1] for q in range(top + 1)]
    d_q = [maps[3 * q + 2] for q in range(top)]
    return {"i": i_q, "j": j_q, "partial": d_q, "spaces": spaces, "report": report}


def jq_perp_logdet(J, rank_tol=1e-9):
    """log |det (j)_perp|: sum of logs of the nonzero singular values, 0 for the zero map."""
    J = np.asarray(J, dtype=float)
    if J.size == 0:
        return 0.0
    sv = numerics.singular_values(J)
    return float(np.sum(np.log(sv[sv > rank_tol])))


# ---------------------------------------------------------------------------
# the torsion identities

def _coords(C, q, X):
    """Coordinates of the classes of the columns of X in the orthonormal harmonic basis."""
    if X.shape[1] == 0 or C.dims[q] == 0:
        return np.zeros((ct.hodge_decompose(C)[q].harmonic.shape[1], X.shape[1]))
    return ct.cohomology_coords(C, q, X)


def _split(A, rank_tol=1e-9):
    """SVD of A: (right basis of (ker A)^perp, right basis of ker A, left range, left complement, rank)."""
    nr, nc = A.shape
    if A.size == 0:
        return np.zeros((nc, 0)), np.eye(nc), np.zeros((nr, 0)), np.eye(nr), 0
    U, s, Vt = np.linalg.svd(A)
    r = int(np.sum(s > rank_tol))
    return Vt[:r].T, Vt[r:].T, U[:, :r], U[:, r:], r


def _lift_classes(C, q, target_coords, preimage_map_coords, preimage_basis):
    """Cocycles whose classes map to target_coords under a map given in harmonic coordinates."""
    sol, *_ = np.linalg.lstsq(preimage_map_coords, target_coords, rcond=None)
    return preimage_basis @ sol


@dataclass
class RT10Result:
    lhs: float
    rhs: float
    residual: float
    parts: Dict[str, float]
    profile: mf.BettiProfile
    log_jdet: List[float]
    bases: Dict[str, list] = field(repr=False, default=None)


def rt10_bases(cut: Cut, ic: IntersectionComplex = None):
    """Cohomology bases prescribed by the cut-and-cone torsion comparison.

    Returns a dict of per-degree cocycle bases for M, M0 (absolute
    cohomology), IC, Z and the cone, plus the data of the comparison.
    """
    m = cut.K.dim
    v = m - 1
    if m % 2 == 0:
        raise SimplicialError("the comparison needs odd dimension, got %d" % m)
    ic = ic or intersection_complex(cut, m)
    Mcx = twisted_complex(cut.K, cut.F)
    M0cx = twisted_complex(cut.M0, cut.F0)
    Zcx = _pad_complex(twisted_complex(cut.Z, cut.FZ), m)
    IC = ic.complex
    bZ = Zcx.betti()
    if v % 2 == 0 and bZ[v // 2]:
        raise mf.WittError("Witt condition fails: H^%d(Z) has dimension %d" % (v // 2, bZ[v // 2]),
                           v // 2)
    hM, hM0, hZ, hIC = _harm(Mcx), _harm(M0cx), _harm(Zcx), _harm(IC)
    mv = mayer_vietoris_ses(cut)

    mu_IC, mu_Z, mu_M, mu_M0 = [None] * (m + 1), [None] * (m + 1), [None] * (m + 1), [None] * (m + 1)
    log_jdet = [0.0] * (m + 1)
    bplus, bH = [0] * (m + 1), [0] * (m + 1)
    nu_lifts = [None] * (m + 1)

    # degrees up to the middle: IH = H(M0), split by j = iota_+ - iota_-
    for q in range(m + 1):
        if 2 * q > v:
            continue
        X = ic.basis[q] @ hIC[q]                      # IH harmonic basis as cochains on M0
        jmat = hZ[q].T @ (cut.iota(q, 1) - cut.iota(q, -1)) @ X
        Vp, Vk, Up, Uc, r = _split(jmat)
        mu_IC[q] = hIC[q] @ np.hstack([Vk, Vp])
        mu_Z[q] = hZ[q] @ np.hstack([Uc, Up])
        mu_M0[q] = ic.basis[q] @ mu_IC[q]
        log_jdet[q] = jq_perp_logdet(jmat)
        bplus[q], bH[q] = r, bZ[q] - r

    # degrees above the middle
    for q in range(m + 1):
        if 2 * q <= v:
            continue
        # H_H(Z): restrictions of classes on M
        rz = hZ[q].T @ cut.restrict_to_z(q) @ hM[q] if hZ[q].shape[1] else np.zeros((0, hM[q].shape[1]))
        _, _, Ur, Uc, r = _split(rz)
        mu_Z[q] = hZ[q] @ np.hstack([Ur, Uc])
        bH[q], bplus[q] = r, bZ[q] - r
        # L2 H_+(M0) = ker of the extension-by-zero map IH^q -> H^q(M)
        X = ic.basis[q] @ hIC[q]
        ihat = hM[q].T @ cut.pullback(q).T @ X
        Vp, Vk, _, _, _ = _split(ihat)
        mu_IC[q] = hIC[q] @ np.hstack([Vp, Vk])
        # classes on M restricting to the H_H(Z) basis
        if r:
            coeff, *_ = np.linalg.lstsq(rz, Ur, rcond=None)
            nu_lifts[q] = hM[q] @ coeff
        else:
            nu_lifts[q] = np.zeros((Mcx.dims[q], 0))
        # absolute cohomology of M0: i_q(nu) completed orthonormally
        inu = cut.pullback(q) @ nu_lifts[q]
        A = _coords(M0cx, q, inu)
        Q = numerics.orth_complement(A, A.shape[0]) if A.shape[0] else np.zeros((0, 0))
        mu_M0[q] = np.hstack([inu, hM0[q] @ Q]) if hM0[q].shape[1] else np.zeros((M0cx.dims[q], 0))
        # jhat_q = connecting map of the second sequence on the diagonal
        if q < m and hZ[q].shape[1]:
            Xd = np.vstack([cut.iota(q, 1), cut.iota(q, -1)])
            ext, *_ = np.linalg.lstsq(Xd, np.vstack([mu_Z[q], mu_Z[q]]), rcond=None)
            dext = M0cx.diff[q] @ ext
            B1 = ic.basis[q + 1]
            jhat = _coords(IC, q + 1, B1.T @ dext)
            log_jdet[q] = jq_perp_logdet(jhat)

    # basis of H(M)
    for q in range(m + 1):
        if 2 * q <= v:
            # connecting image of H_H^{q-1}(Z) and lifts of ker j_q
            parts = []
            if q >= 1 and bH[q - 1]:
                zH = mu_Z[q - 1][:, :bH[q - 1]]
                x = np.linalg.lstsq(mv.p_maps[q - 1], zH, rcond=None)[0]
                dx = mv.total.diff[q - 1] @ x
                parts.append(np.linalg.lstsq(mv.i_maps[q], dx, rcond=None)[0])
            nH = mu_IC[q].shape[1] - bplus[q]
            kerj = mu_M0[q][:, :nH]
            if nH:
                target = _coords(M0cx, q, kerj)
                imap = _coords(M0cx, q, cut.pullback(q) @ hM[q])
                parts.append(_lift_classes(Mcx, q, target, imap, hM[q]))
            mu_M[q] = np.hstack(parts) if parts else np.zeros((Mcx.dims[q], 0))
        else:
            nHM0 = mu_IC[q].shape[1] - _kernel_dim(cut, ic, hM, hIC, q)
            X = ic.basis[q] @ mu_IC[q][:, :nHM0]
            ext = cut.pullback(q).T @ X
            mu_M[q] = np.hstack([ext, nu_lifts[q]])
    mu_CZ = [None] * (m + 1)
    for q in range(m + 1):
        E = ic.cone.embed[q]
        mu_CZ[q] = E.T @ mu_Z[q] if E.shape[1] else np.zeros((0, 0))
    return {
        "M": mu_M, "M0": mu_M0, "IC": mu_IC, "Z": mu_Z, "CZ": mu_CZ,
        "log_jdet": log_jdet, "bplus": bplus, "bH": bH, "b": bZ,
        "complexes": {"M": Mcx, "M0": M0cx, "Z": Zcx, "IC": IC, "CZ": ic.cone.complex},
    }


def _kernel_dim(cut, ic, hM, hIC, q):
    X = ic.basis[q] @ hIC[q]
    ihat = hM[q].T @ cut.pullback(q).T @ X
    return ihat.shape[1] - _split(ihat)[4]


def rt10_sqrt2_term(m, b):
    """sum_{q>(m-1)/2} (-1)^(q+1) b_q/2 log 2."""
    return sum((-1) ** (q + 1) * b[q] * 0.5 * mf.LOG2 for q in range(min(m + 1, len(b))) if 2 * (q + 1) > m)


def rt10_correction(m, b, log_jdet, sqrt2=True):
    """sum_q (-1)^q log|det j_q| plus, when sqrt2, the half-log-2 Betti term.

    sqrt2=False gives the variant in which the difference map
    (a, b) -> a - b on H(Z) + H(Z) is counted with its sqrt 2 scaling on the
    antidiagonal; the two half-log-2 contributions then cancel.
    """
    v = m - 1
    out = sum((-1) ** q * log_jdet[q] for q in range(m + 1) if 2 * q != v)
    if sqrt2:
        out += rt10_sqrt2_term(m, b)
    return out


def rt10a_correction(m, b, log_jdet):
    """Euclidean simplification: 2 sum_{q<v/2} (-1)^q log|det j_q| - chi(Z)/4 log 2."""
    v = m - 1
    chi = sum((-1) ** q * b[q] for q in range(len(b)))
    return 2.0 * sum((-1) ** q * log_jdet[q] for q in range(m + 1) if 2 * q < v) - chi / 4.0 * mf.LOG2


def rt10_verify(cut: Cut) -> RT10Result:
    """Compare log tau(M) with the cut-and-cone formula in the prescribed bases."""
    m = cut.K.dim
    data = rt10_bases(cut)
    cx = data["complexes"]
    lhs = ct.log_torsion(cx["M"], data["M"]).log_torsion
    t_ic = ct.log_torsion(cx["IC"], data["IC"]).log_torsion
    t_z = ct.log_torsion(cx["Z"], data["Z"]).log_torsion
    t_cz = ct.log_torsion(cx["CZ"], data["CZ"]).log_torsion
    corr = rt10_correction(m, data["b"], data["log_jdet"])
    base = t_ic + t_z - 2.0 * t_cz
    rhs = base + corr
    rhs_scaled = base + rt10_correction(m, data["b"], data["log_jdet"], sqrt2=False)
    profile = mf.BettiProfile(m, data["b"], data["bplus"], data["bH"],
                              [math.exp(x) for x in data["log_jdet"]])
    parts = {"log_tau_ic": t_ic, "log_tau_z": t_z, "log_tau_cone": t_cz, "correction": corr,
             "sqrt2_term": rt10_sqrt2_term(m, data["b"]),
             "rhs_scaled": rhs_scaled, "residual_scaled": abs(lhs - rhs_scaled),
             "correction_euclidean": rt10a_correction(m, data["b"], data["log_jdet"])}
    return RT10Result(lhs, rhs, abs(lhs - rhs), parts, profile, data["log_jdet"], data)


def rt3_verify(cut: Cut, bases=None):
    """Check log tau(M) = log Itau(M^) + log tau(Z) - 2 log Itau(CZ) + log tau(H2) - log tau(H1).

    bases: dict as returned by rt10_bases, or None for orthonormal harmonic
    bases everywhere (with the cone basis induced from Z).
    """
    m = cut.K.dim
    ic = intersection_complex(cut, m)
    ses1 = mayer_vietoris_ses(cut)
    ses2 = intersection_ses(cut, ic, m)
    if bases is None:
        Mcx, M0cx, Zcx = ses1.sub, ses1.total, ses1.quot
        bases = {"M": _harm(Mcx), "M0": _harm(M0cx), "Z": _harm(Zcx), "IC": _harm(ic.complex)}
        bases["CZ"] = [ic.cone.embed[q].T @ bases["Z"][q] if ic.cone.embed[q].shape[1]
                       else np.zeros((0, 0)) for q in range(m + 1)]
    R = ic.cone.complex
    total_b = [_blockdiag([bases["M0"][q], _fix(bases["CZ"][q], R.dims[q]), _fix(bases["CZ"][q], R.dims[q])])
               for q in range(m + 1)]
    quot_b = [_blockdiag([bases["Z"][q], bases["Z"][q]]) for q in range(m + 1)]
    H1 = ct.les_as_complex(*ct.long_exact_sequence(
        ses1, {"sub": bases["M"], "total": bases["M0"], "quot": bases["Z"]})[:2])
    H2 = ct.les_as_complex(*ct.long_exact_sequence(
        ses2, {"sub": bases["IC"], "total": total_b, "quot": quot_b})[:2])
    t_m = ct.log_torsion(ses1.sub, bases["M"]).log_torsion
    t_ic = ct.log_torsion(ic.complex, bases["IC"]).log_torsion
    t_z = ct.log_torsion(ses1.quot, bases["Z"]).log_torsion
    t_cz = ct.log_torsion(R, [_fix(b, R.dims[q]) for q, b in enumerate(bases["CZ"])]).log_torsion
    t_h1 = ct.log_torsion(H1).log_torsion
    t_h2 = ct.log_torsion(H2).log_torsion
    rhs = t_ic + t_z - 2.0 * t_cz + t_h2 - t_h1
    return {"lhs": t_m, "rhs": rhs, "residual": abs(t_m - rhs),
            "log_tau_h1": t_h1, "log_tau_h2": t_h2,
            "volume_defect_1": ses1.volume_defect(), "volume_defect_2": ses2.volume_defect()}


def _fix(B, n):
    B = np.asarray(B, dtype=float)
    return B.reshape(n, -1) if B.size else np.zeros((n, 0))


def _blockdiag(mats):
    from scipy.linalg import block_diag
    mats = [np.asarray(M, float) for M in mats]
    rows = sum(M.shape[0] for M in mats)
    cols = sum(M.shape[1] for M in mats)
    return block_diag(*mats).reshape(rows, cols)


# ---------------------------------------------------------------------------
# barycentric subdivision

@dataclass
class Subdivision:
    K: SimplicialComplex
    F: FlatSystem
    Kp: SimplicialComplex
    Fp: FlatSystem
    vertex_of: List[Tuple[int, ...]]     # K' vertex -> simplex of K

    def cochain_map(self, q):
        """S^*: C^q(K') -> C^q(K), dual to the subdivision chain map."""
        k = self.F.rank
        S = np.zeros((k * self.K.count(q), k * self.Kp.count(q)))
        bary = {s: i for i, s in enumerate(self.vertex_of)}
        for r, s in enumerate(self.K.simplices[q]):
            for flag, coeff in _subdivide_chain(s).items():
                t = tuple(sorted(bary[f] for f in flag))
                c = self.Kp.index[q][t]
                v_low = flag[0][0]
                T = np.linalg.inv(self.F.h(s[0], v_low)) if v_low != s[0] else np.eye(k)
                S[r * k:(r + 1) * k, c * k:(c + 1) * k] += coeff * T
        return S


_SD_CACHE = {}


def _subdivide_chain(s):
    """Subdivision of the oriented simplex s as {flag (lowest face first): coefficient}."""
    if s in _SD_CACHE:
        return _SD_CACHE[s]
    p = len(s) - 1
    if p == 0:
        out = {(s,): 1}
    else:
        out = {}
        for i in range(p + 1):
            face = s[:i] + s[i + 1:]
            for flag, c in _subdivide_chain(face).items():
                key = flag + (s,)
                out[key] = out.get(key, 0) + (-1) ** p * (-1) ** i * c
    _SD_CACHE[s] = out
    return out


def barycentric_subdivide(K: SimplicialComplex, F: FlatSystem) -> Subdivision:
    vertex_of = [s for level in K.simplices for s in level]
    bary = {s: i for i, s in enumerate(vertex_of)}
    simp = []
    top = [s for s in K.maximal_simplices()]
    for s in top:
        for perm in itertools.permutations(s):
            chain = [tuple(sorted(perm[:i + 1])) for i in range(len(s))]
            simp.append(tuple(bary[c] for c in chain))
    Kp = SimplicialComplex(len(vertex_of), [tuple(sorted(x)) for x in simp], labels=vertex_of)
    hol = {}
    for a, b in Kp.edges():
        sa, sb = vertex_of[a], vertex_of[b]
        va, vb = sa[0], sb[0]
        if va != vb:
            hol[(a, b)] = F.h(va, vb)
    return Subdivision(K, F, Kp, FlatSystem(F.rank, hol), vertex_of)


def transported_bases(sd: Subdivision, mu):
    """Cohomology bases on K' whose images under S^* are cohomologous to mu on K."""
    C = twisted_complex(sd.K, sd.F)
    Cp = twisted_complex(sd.Kp, sd.Fp)
    out = []
    for q in range(C.top_degree + 1):
        hp = ct.hodge_decompose(Cp)[q].harmonic
        if hp.shape[1] == 0:
            out.append(np.zeros((Cp.dims[q], 0)))
            continue
        A = _coords(C, q, sd.cochain_map(q) @ hp)
        target = _coords(C, q, np.asarray(mu[q], float))
        out.append(hp @ np.linalg.solve(A, target))
    return out


def subdivision_torsion_pair(K, F, mu=None):
    """(log tau(K, mu), log tau(K', transported mu)); mu defaults to orthonormal harmonic."""
    C = twisted_complex(K, F)
    mu = mu if mu is not None else _harm(C)
    sd = barycentric_subdivide(K, F)
    Cp = twisted_complex(sd.Kp, sd.Fp)
    return ct.log_torsion(C, mu).log_torsion, ct.log_torsion(Cp, transported_bases(sd, mu)).log_torsion

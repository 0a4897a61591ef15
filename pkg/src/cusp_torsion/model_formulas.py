"""Closed-form analytic quantities for cusp degeneration.

Everything here works on dimension data only.  A BettiProfile carries
b[q] = dim H^q(Z;F), its split b = bplus + bH, and jdet[q] = |det (j_q)_perp|
for 0 <= q <= m, where m = dim M and v = m - 1 = dim Z.  Entries past v are
zero (or one for jdet) since Z has no cohomology there.

Index ranges follow the formulas literally: the model-operator term sums
over 0 <= q <= v, the small-eigenvalue and harmonic-basis terms over
0 <= q <= m, always skipping q = v/2.
"""
import json
import math
from dataclasses import dataclass, field
from typing import List

from . import numerics

LOG2 = math.log(2.0)


class WittError(ValueError):
    """Middle-degree link cohomology does not vanish."""

    def __init__(self, message, degree):
        super().__init__(message)
        self.degree = degree


class ProfileError(ValueError):
    pass


def _sign(x):
    x = float(x)
    return (x > 0) - (x < 0)


# ---------------------------------------------------------------------------
# model operator

def c_const(q):
    """c_q = || <X>^{-q} ||^2 = B(q, 1/2)."""
    if q <= 0:
        raise ValueError("c_q needs q > 0, got %r" % q)
    return numerics.beta(q, 0.5)


def log_c(q):
    return numerics.lgamma(q) + 0.5 * math.log(math.pi) - numerics.lgamma(q + 0.5)


def logdet_model(a):
    """log det(-P(-a) P(a)); the a = 0 branch is 0 although the a != 0 branches blow up there."""
    if a == 0:
        return 0.0
    return log_c(abs(a)) - _sign(a) * math.log(2.0 * abs(a))


def relative_logdet_target(a):
    """logdet_model(a) - logdet_model(-a) = -2 sign(a) log(2|a|)."""
    if a == 0:
        return 0.0
    return -2.0 * _sign(a) * math.log(2.0 * abs(a))


def strint_rhs(a, t, method="closed"):
    """2 int_0^a sqrt(t/pi) exp(-t b^2) db, which equals erf(a sqrt t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if method == "closed":
        return numerics.erf(a * math.sqrt(t))
    if method == "quad":
        s = math.sqrt(t / math.pi)
        return 2.0 * numerics.adaptive_quad(lambda b: s * math.exp(-t * b * b), 0.0, a, tol=1e-13)
    raise ValueError("unknown method %r" % method)


def rtr_closed(kind, t):
    """Renormalized heat traces of -P(0)^2 ('P0') and -P(1)P(-1) ('P1m1')."""
    if t <= 0:
        raise ValueError("t must be positive")
    base = LOG2 / math.sqrt(math.pi * t)
    if kind == "P0":
        return base
    if kind == "P1m1":
        return math.exp(-t) * base
    raise ValueError("unknown kind %r (use 'P0' or 'P1m1')" % kind)


# ---------------------------------------------------------------------------
# profiles

@dataclass
class BettiProfile:
    m: int
    b: List[float]
    bplus: List[float] = None
    bH: List[float] = None
    jdet: List[float] = field(default=None)

    def __post_init__(self):
        n = self.m + 1
        if self.m < 1:
            raise ProfileError("m must be at least 1")

        def pad(seq, fill, name):
            seq = list(seq) if seq is not None else []
            if len(seq) > n:
                if any(x != fill for x in seq[n:]):
                    raise ProfileError("%s has entries beyond degree m" % name)
                seq = seq[:n]
            return seq + [fill] * (n - len(seq))

        self.b = pad(self.b, 0, "b")
        if self.bplus is None and self.bH is None:
            self.bplus = [0] * n
            self.bH = list(self.b)
        elif self.bplus is None:
            self.bH = pad(self.bH, 0, "bH")
            self.bplus = [x - y for x, y in zip(self.b, self.bH)]
        elif self.bH is None:
            self.bplus = pad(self.bplus, 0, "bplus")
            self.bH = [x - y for x, y in zip(self.b, self.bplus)]
        else:
            self.bplus = pad(self.bplus, 0, "bplus")
            self.bH = pad(self.bH, 0, "bH")
        self.jdet = pad(self.jdet, 1.0, "jdet")
        for q in range(n):
            if min(self.b[q], self.bplus[q], self.bH[q]) < 0:
                raise ProfileError("negative dimension in degree %d" % q)
            if self.b[q] != self.bplus[q] + self.bH[q]:
                raise ProfileError("b != bplus + bH in degree %d" % q)
            if self.jdet[q] <= 0:
                raise ProfileError("jdet must be positive (degree %d)" % q)
        if self.b[self.m] != 0:
            raise ProfileError("the link has no cohomology in degree m")

    @property
    def v(self):
        return self.m - 1

    def check_witt(self):
        _check_witt(self.v, self.b)

    def to_json(self):
        return json.dumps({"m": self.m, "b": self.b, "bplus": self.bplus,
                           "bH": self.bH, "jdet": self.jdet})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text) if isinstance(text, str) else dict(text)
        try:
            return cls(int(d["m"]), d["b"], d.get("bplus"), d.get("bH"), d.get("jdet"))
        except KeyError as exc:
            raise ProfileError("profile is missing %s" % exc) from exc


def _check_witt(v, dims):
    if v % 2 == 0 and v // 2 < len(dims) and dims[v // 2] != 0:
        raise WittError("Witt condition fails: middle degree %d has dimension %s"
                        % (v // 2, dims[v // 2]), v // 2)


def _degrees(v, top):
    return [q for q in range(top + 1) if 2 * q != v]


def _get(seq, q, fill=0):
    return seq[q] if q < len(seq) else fill


# ---------------------------------------------------------------------------
# torsion contributions

def at_db(v, b):
    """Model-operator contribution, summed over 0 <= q <= v, q != v/2."""
    _check_witt(v, b)
    total = 0.0
    for q in _degrees(v, v):
        bq = _get(b, q)
        if bq:
            k = abs(v - 2 * q)
            total += (-1) ** q * bq * (log_c(k / 2.0) + (2 * q + 1) * _sign(2 * q - v) * math.log(k))
    return 0.5 * total


def orth_at_db(v, b):
    """Model-operator contribution under orthogonal holonomy, summed over q < v/2."""
    _check_witt(v, b)
    total = 0.0
    for q in range(v + 1):
        if 2 * q >= v:
            break
        bq = _get(b, q)
        k = v - 2 * q
        if v % 2 == 0:
            total += (-1) ** q * bq * (log_c(k / 2.0) + k * math.log(k))
        else:
            total += (-1) ** q * bq * (-(v + 1) * math.log(k))
    return total


def at_small(m, bplus, jdet):
    """Small-eigenvalue contribution, summed over 0 <= q <= m, q != v/2."""
    v = m - 1
    _check_witt(v, bplus)
    total = 0.0
    for q in _degrees(v, m):
        bp = _get(bplus, q)
        term = 2.0 * math.log(_get(jdet, q, 1.0))
        if bp:
            term -= bp * log_c(abs(v - 2 * q) / 2.0)
        total += (-1) ** q * term
    return 0.5 * total


def orth_at_small(m, bplus, jdet):
    v = m - 1
    _check_witt(v, bplus)
    if v % 2 == 1:
        return 0.0
    total = 0.0
    for q in range(v // 2):
        bp = _get(bplus, q)
        term = 2.0 * math.log(_get(jdet, q, 1.0))
        if bp:
            term -= bp * log_c(v / 2.0 - q)
        total += (-1) ** q * term
    return total


def harmonic_correction(m, bH):
    """Harmonic-basis contribution, summed over 0 <= q <= m, q != v/2."""
    v = m - 1
    _check_witt(v, bH)
    total = 0.0
    for q in _degrees(v, m):
        bh = _get(bH, q)
        if bh:
            total += (-1) ** q * bh * log_c(abs(v - 2 * q) / 2.0)
    return -0.5 * total


def orth_harmonic_correction(m, bH):
    v = m - 1
    if m % 2 == 0:
        raise ValueError("the harmonic-basis correction is stated for odd m")
    _check_witt(v, bH)
    return -sum((-1) ** q * _get(bH, q) * log_c(v / 2.0 - q) for q in range(v // 2) if _get(bH, q))


def _require_odd(m):
    if m % 2 == 0:
        raise ValueError("m must be odd, got %d" % m)


def at_assembly(m, profile: BettiProfile):
    """Full correction term: FP log T(M) - log T([M;Z]) for odd m."""
    _require_odd(m)
    v = m - 1
    profile.check_witt()
    total = 0.0
    for q in _degrees(v, v):
        term = 2.0 * math.log(profile.jdet[q])
        bq = profile.b[q]
        if bq:
            term += bq * (2 * q + 1) * _sign(2 * q - v) * math.log(abs(v - 2 * q))
        total += (-1) ** q * term
    return 0.5 * total


def orth_at_assembly(m, profile: BettiProfile):
    _require_odd(m)
    v = m - 1
    profile.check_witt()
    total = 0.0
    for q in range(v // 2):
        k = v - 2 * q
        total += (-1) ** q * (2.0 * math.log(profile.jdet[q]) + profile.b[q] * k * math.log(k))
    return total


def at_parts(m, profile: BettiProfile):
    """The three contributions whose sum is at_assembly."""
    return {
        "at_db": at_db(m - 1, profile.b),
        "at_small": at_small(m, profile.bplus, profile.jdet),
        "harmonic_correction": harmonic_correction(m, profile.bH),
    }


def cm_defect(m, b):
    """Correction terms of the cusp Cheeger-Mueller formula for one cusp end.

    Returns (defect_general, defect_euclidean).  The general form is
    -sum_{q>v/2} (-1)^q b_q/4 log 2 - sum_{q != v/2} (-1)^q b_q/4 |v-2q| log|v-2q|;
    the Euclidean form -chi/8 log 2 - 1/2 sum_{q<v/2} (-1)^q b_q (v-2q) log(v-2q)
    agrees with it whenever b_q = b_{v-q}.
    """
    _require_odd(m)
    v = m - 1
    _check_witt(v, b)
    general = 0.0
    for q in range(v + 1):
        bq = _get(b, q)
        if not bq or 2 * q == v:
            continue
        k = abs(v - 2 * q)
        if 2 * q > v:
            general -= (-1) ** q * bq / 4.0 * LOG2
        general -= (-1) ** q * bq / 4.0 * k * math.log(k)
    chi = sum((-1) ** q * _get(b, q) for q in range(v + 1))
    euclid = -chi / 8.0 * LOG2
    for q in range(v // 2 + (v % 2)):
        if 2 * q < v:
            k = v - 2 * q
            euclid -= 0.5 * (-1) ** q * _get(b, q) * k * math.log(k)
    return general, euclid


def cm_defect_double(m, b):
    """Same correction for a closed manifold cut along Z; twice cm_defect's general value."""
    return 2.0 * cm_defect(m, b)[0]


def even_cusp_at(m, b):
    """Analytic torsion of an even-dimensional manifold with one cusp, Euclidean Witt bundle."""
    if m % 2 == 1:
        raise ValueError("m must be even, got %d" % m)
    _check_witt(m - 1, b)
    total = 0.0
    for q in range(m):
        if 2 * q >= m - 1:
            break
        total += (-1) ** q * _get(b, q) * math.log(m - 1 - 2 * q)
    return 0.5 * m * total


# ---------------------------------------------------------------------------
# small eigenvalues and surface constants

def small_eig_rate(m, q, jnorm_sq):
    """(coefficient, exponent) with lambda ~ coefficient * eps^exponent."""
    if 2 * q >= m - 1:
        raise ValueError("small eigenvalue rate needs q < (m-1)/2")
    if jnorm_sq < 0:
        raise ValueError("jnorm_sq must be nonnegative")
    return jnorm_sq / c_const((m - 1) / 2.0 - q), m - 1 - 2 * q


def small_product_asymptotics(m, q, bplus, jdet):
    """Product of the positive small eigenvalues in degree q.

    Returns (log_coefficient, power) so that the product is asymptotic to
    exp(log_coefficient) * eps^power.  Degrees above (m-1)/2 use the dual
    convention, so callers pass bplus and jdet already mirrored.
    """
    v = m - 1
    _check_witt(v, bplus)
    logc, power = 0.0, 0.0
    for k in (q - 1, q):
        if k < 0 or 2 * k == v or k > m:
            continue
        bp = _get(bplus, k)
        logc += 2.0 * math.log(_get(jdet, k, 1.0))
        if bp:
            logc -= bp * log_c(abs(v - 2 * k) / 2.0)
            power += bp * abs(v - 2 * k)
    return logc, power


def wolpert_c1(route="functional"):
    """-(1/16 pi) Gamma(-1/2) zeta(-1/2)."""
    return -numerics.gamma(-0.5) * numerics.riemann_zeta(-0.5, route) / (16.0 * math.pi)


def burger_coeff(V1, V2):
    """Leading coefficient c in lambda_1 ~ c eps for a separating neck."""
    if V1 <= 0 or V2 <= 0:
        raise ValueError("volumes must be positive")
    return (V1 + V2) / (math.pi * V1 * V2)


def constants():
    return {
        "c_half": c_const(0.5),
        "c1": c_const(1.0),
        "c3_2": c_const(1.5),
        "c2": c_const(2.0),
        "wolpert_c1": wolpert_c1(),
        "zeta_minus_half": numerics.riemann_zeta(-0.5),
        "renorm_volume": 2.0 * LOG2,
    }

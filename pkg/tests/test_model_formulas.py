import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cusp_torsion import model_formulas as mf
from cusp_torsion import numerics as nm

LOG2 = math.log(2.0)


def random_witt_profile(rng, m=None):
    m = m or int(rng.choice([3, 5, 7]))
    v = m - 1
    b = [int(x) for x in rng.integers(0, 4, m + 1)]
    b[m] = 0
    if v % 2 == 0:
        b[v // 2] = 0
    bplus = [int(rng.integers(0, x + 1)) for x in b]
    jdet = [float(x) for x in rng.uniform(0.2, 5.0, m + 1)]
    jdet[m] = 1.0
    return mf.BettiProfile(m, b, bplus=bplus, jdet=jdet)


def mirrored_profile(rng, m):
    v = m - 1
    b, bp, jd = [0] * (m + 1), [0] * (m + 1), [1.0] * (m + 1)
    for q in range(v + 1):
        if 2 * q < v:
            b[q] = b[v - q] = int(rng.integers(0, 4))
            bp[q] = bp[v - q] = int(rng.integers(0, b[q] + 1))
            jd[q] = jd[v - q] = float(rng.uniform(0.2, 5.0))
    return mf.BettiProfile(m, b, bplus=bp, jdet=jd)


def test_c_const():
    assert abs(mf.c_const(1.0) - 2.0) < 1e-14
    assert abs(mf.c_const(0.5) - math.pi) < 1e-13
    assert abs(mf.c_const(2.0) - 4.0 / 3.0) < 1e-14
    with pytest.raises(ValueError):
        mf.c_const(0.0)
    for q in (0.5, 1.0, 2.5):
        assert abs(mf.log_c(q) - math.log(mf.c_const(q))) < 1e-13


def test_logdet_model_reference_values():
    assert mf.logdet_model(0.0) == 0.0
    assert abs(mf.logdet_model(-1.0) - 2.0 * LOG2) < 1e-14
    assert abs(mf.logdet_model(1.0)) < 1e-14


@pytest.mark.parametrize("a", np.arange(0.25, 3.01, 0.25))
def test_logdet_model_sum_and_difference(a):
    assert abs(mf.logdet_model(a) + mf.logdet_model(-a) - 2.0 * mf.log_c(a)) < 1e-12
    assert abs(mf.logdet_model(a) - mf.logdet_model(-a) + 2.0 * math.log(2.0 * a)) < 1e-12
    assert abs(mf.relative_logdet_target(a) - (mf.logdet_model(a) - mf.logdet_model(-a))) < 1e-12


def test_at_db_examples():
    # 1/2[(log c1 - log 2) + (log c1 + 5 log 2)] with c1 = 2
    assert abs(mf.at_db(2, [1, 0, 1]) - 3.0 * LOG2) < 1e-14
    assert mf.at_db(3, [0, 0, 0, 0]) == 0.0


def test_at_small_examples():
    assert mf.at_small(3, [0, 0, 0, 0], [1, 1, 1, 1]) == 0.0
    c = 3.7
    assert abs(mf.at_small(3, [1, 0, 0, 0], [c]) - 0.5 * (-math.log(2.0) + 2.0 * math.log(c))) < 1e-14


def test_harmonic_correction_examples():
    assert mf.harmonic_correction(3, [0, 0, 0]) == 0.0
    assert abs(mf.harmonic_correction(3, [1, 0, 0]) + 0.5 * LOG2) < 1e-14


def test_at_assembly_examples():
    assert mf.at_assembly(3, mf.BettiProfile(3, [0, 0, 0])) == 0.0
    p = mf.BettiProfile(3, [1, 0, 1], bH=[1, 0, 1])
    assert abs(mf.at_assembly(3, p) - 2.0 * LOG2) < 1e-14
    with pytest.raises(ValueError):
        mf.at_assembly(4, mf.BettiProfile(4, [1, 0, 0, 1]))


@given(st.integers(0, 2 ** 32 - 1))
def test_assembly_cancellation(seed):
    p = random_witt_profile(np.random.default_rng(seed))
    parts = mf.at_parts(p.m, p)
    assert abs(sum(parts.values()) - mf.at_assembly(p.m, p)) <= 1e-12


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([3, 5, 7]))
def test_orthogonal_reductions(seed, m):
    rng = np.random.default_rng(seed)
    p = mirrored_profile(rng, m)
    v = m - 1
    assert abs(mf.at_db(v, p.b) - mf.orth_at_db(v, p.b)) <= 1e-12
    assert abs(mf.at_small(m, p.bplus, p.jdet) - mf.orth_at_small(m, p.bplus, p.jdet)) <= 1e-12
    assert abs(mf.harmonic_correction(m, p.bH) - mf.orth_harmonic_correction(m, p.bH)) <= 1e-12
    assert abs(mf.at_assembly(m, p) - mf.orth_at_assembly(m, p)) <= 1e-12


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 4, 6]))
def test_orthogonal_reductions_even_link_dimension_odd(seed, m):
    # v odd: the db term reduces to the -(v+1) log(v-2q) branch and at_small to 0
    rng = np.random.default_rng(seed)
    p = mirrored_profile(rng, m)
    v = m - 1
    assert abs(mf.at_db(v, p.b) - mf.orth_at_db(v, p.b)) <= 1e-12
    assert abs(mf.at_small(m, p.bplus, p.jdet)) <= 1e-12
    assert mf.orth_at_small(m, p.bplus, p.jdet) == 0.0


def test_witt_and_profile_errors():
    with pytest.raises(mf.WittError) as err:
        mf.at_db(2, [1, 1, 1])
    assert err.value.degree == 1
    with pytest.raises(mf.ProfileError):
        mf.BettiProfile(3, [1, 0, 1], bplus=[2, 0, 0])
    with pytest.raises(mf.ProfileError):
        mf.BettiProfile(3, [1, 0, 1, 1])
    with pytest.raises(mf.ProfileError):
        mf.BettiProfile(3, [1, 0, 1], jdet=[0.0])
    with pytest.raises(mf.ProfileError):
        mf.BettiProfile(0, [])


def test_cm_defect():
    g, e = mf.cm_defect(3, [1, 0, 1])
    # q = 2 gives -1/4 log 2; q in {0, 2} give |v - 2q| = 2, so -1/4 * 2 log 2 each with signs +,+
    assert abs(g + 1.25 * LOG2) < 1e-14
    assert abs(e + 1.25 * LOG2) < 1e-14
    assert mf.cm_defect(3, [0, 0, 0]) == (0.0, 0.0)
    # chi(Z) = 2: the chi / 8 term alone, doubled, is -1/4 log 2
    assert abs(2.0 * (-2.0 / 8.0 * LOG2) + 0.5 * LOG2) < 1e-15
    assert abs(mf.cm_defect_double(3, [1, 0, 1]) - 2.0 * g) < 1e-15


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([3, 5, 7]))
def test_cm_defect_paths_agree_when_mirrored(seed, m):
    p = mirrored_profile(np.random.default_rng(seed), m)
    g, e = mf.cm_defect(m, p.b)
    assert abs(g - e) <= 1e-12


def test_even_cusp_at():
    assert mf.even_cusp_at(2, [1, 1]) == 0.0
    assert abs(mf.even_cusp_at(4, [1, 0, 0, 1]) - 2.0 * math.log(3.0)) < 1e-14
    assert mf.even_cusp_at(4, [0, 0, 0, 0]) == 0.0
    with pytest.raises(ValueError):
        mf.even_cusp_at(3, [1, 0, 1])


def test_strint_rhs():
    assert mf.strint_rhs(0.0, 1.0) == 0.0
    assert abs(mf.strint_rhs(1.0, 400.0) - 1.0) < 1e-12
    assert abs(mf.strint_rhs(1.0, 1.0) - mf.strint_rhs(1.0, 1.0, "quad")) < 1e-12
    assert abs(mf.strint_rhs(1.0, 1.0) - 0.8427007929497149) < 1e-15
    with pytest.raises(ValueError):
        mf.strint_rhs(1.0, 0.0)


@given(st.floats(-5, 5), st.floats(0.01, 50))
def test_strint_odd(a, t):
    assert abs(mf.strint_rhs(a, t) + mf.strint_rhs(-a, t)) < 1e-15


def test_rtr_closed():
    assert abs(mf.rtr_closed("P0", 1.0) - LOG2 / math.sqrt(math.pi)) < 1e-15
    assert abs(mf.rtr_closed("P1m1", 1.0) - math.exp(-1.0) * LOG2 / math.sqrt(math.pi)) < 1e-15
    for t in (0.3, 2.0, 7.0):
        assert abs(mf.rtr_closed("P1m1", t) / mf.rtr_closed("P0", t) - math.exp(-t)) < 1e-14


def test_wolpert_c1():
    a = mf.wolpert_c1("functional")
    b = mf.wolpert_c1("euler-maclaurin")
    assert a < 0 and abs(a - b) < 1e-12
    assert abs(a + 0.01466) < 1e-5
    assert abs(nm.gamma(-0.5) + 2.0 * math.sqrt(math.pi)) < 1e-13


def test_burger_coeff():
    V = 3.3
    assert abs(mf.burger_coeff(V, V) - 2.0 / (math.pi * V)) < 1e-15
    assert abs(mf.burger_coeff(4 * math.pi, 4 * math.pi) - 1.0 / (2 * math.pi ** 2)) < 1e-15
    assert abs(mf.burger_coeff(2.0, 1e12) - 1.0 / (math.pi * 2.0)) < 1e-10
    with pytest.raises(ValueError):
        mf.burger_coeff(0.0, 1.0)


def test_small_eig_rate():
    c, k = mf.small_eig_rate(2, 0, 0.7)
    assert k == 1 and abs(c - 0.7 / math.pi) < 1e-15
    assert mf.small_eig_rate(2, 0, 0.0)[0] == 0.0
    c, k = mf.small_eig_rate(3, 0, 0.7)
    assert k == 2 and abs(c - 0.35) < 1e-15
    with pytest.raises(ValueError):
        mf.small_eig_rate(3, 1, 1.0)


def test_small_product_asymptotics():
    logc, power = mf.small_product_asymptotics(3, 0, [1, 0, 0], [2.0, 1.0, 1.0])
    assert power == 2 and abs(logc - (2.0 * LOG2 - LOG2)) < 1e-14


def test_constants():
    c = mf.constants()
    assert abs(c["c1"] - 2.0) < 1e-14 and c["wolpert_c1"] < 0
    assert abs(c["renorm_volume"] - 2.0 * LOG2) < 1e-15

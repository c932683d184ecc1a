import numpy as np
import pytest
from scipy.special import kv

from bisimplex.errors import BranchAmbiguityError, ValidationError, ZeroAreaError
from bisimplex.geometry import Simplex4
from bisimplex.pathint import (
    ContourPoint,
    MCEstimate,
    MSource,
    bessel_k0,
    bessel_k1,
    bessel_ki1,
    deformed_rotor,
    degenerate_triangle_vectors,
    fit_exponential_rate,
    haar_factorization_check,
    linearized_delta_prefactor,
    model_integral,
    model_integral_oscillatory,
    mollified_closure_constant,
    mollified_delta_density,
    mollified_delta_mass,
    n0_deformed_quadrature,
    n0_so3_closed,
    n0_su2_closed,
    n_degenerate_mc,
    source_rate,
    suppression_slope,
)

# frozen references from a 30-digit evaluation of the standard series
K0_AT_1 = 0.4210244382407083
K1_AT_1 = 0.6019072301972346
KI1_AT_1 = 0.3282864781711184
KI1_AT_2 = 0.0971205924780679


def equifacial_triangles():
    """Closure-satisfying quadruple with all four areas equal to one."""
    s8 = np.sqrt(8.0) / 3.0
    s2 = np.sqrt(2.0) / 3.0
    s23 = np.sqrt(2.0 / 3.0)
    v1 = np.array([s8, 0.0, -1.0 / 3.0])
    v2 = np.array([-s2, s23, -1.0 / 3.0])
    v3 = np.array([-s2, -s23, -1.0 / 3.0])
    return np.array([v1, v2, v3, v1 + v2 + v3])


# ---------------------------------------------------------------------------
# Bessel kernels from the sine representation


def test_bessel_frozen_values():
    assert abs(bessel_k0(1.0) - K0_AT_1) < 1e-11
    assert abs(bessel_k1(1.0) - K1_AT_1) < 1e-11
    assert abs(bessel_ki1(1.0) - KI1_AT_1) < 1e-11
    assert abs(bessel_ki1(2.0) - KI1_AT_2) < 1e-11


def test_bessel_k0_k1_against_library_sweep():
    for l in np.geomspace(0.3, 25.0, 9):
        assert np.isclose(bessel_k0(l), kv(0, l), rtol=1e-9)
        assert np.isclose(bessel_k1(l), kv(1, l), rtol=1e-9)


def test_bessel_complex_arguments():
    for l in (1.0 + 0.5j, 2.0 - 1.0j, 0.7 + 2.0j):
        assert np.isclose(bessel_k1(l), kv(1, l), rtol=1e-9)
        assert np.isclose(bessel_k0(l), kv(0, l), rtol=1e-9)


def test_bessel_k1_asymptotic_regime():
    ratio = bessel_k1(20.0) / (np.sqrt(np.pi / 40.0) * np.exp(-20.0))
    assert abs(ratio - 1.0185) < 2e-3


def test_ki1_derivative_is_minus_k0():
    h = 1e-5
    fd = (bessel_ki1(1.3 + h) - bessel_ki1(1.3 - h)) / (2.0 * h)
    assert np.isclose(fd, -bessel_k0(1.3), rtol=1e-5)


def test_bessel_rejects_nonpositive_real_part():
    with pytest.raises(ValidationError):
        bessel_k0(0.0)
    with pytest.raises(ValidationError):
        bessel_k1(-2.0)
    with pytest.raises(ValidationError):
        bessel_ki1(-0.5 + 1.0j)


# ---------------------------------------------------------------------------
# model boost integral, deformed against oscillatory


def test_model_integral_matches_k0():
    for a in (0.5, 1.0, 5.0, 10.0):
        assert np.isclose(model_integral(a), 2.0 * bessel_k0(a), rtol=1e-10)


def test_model_integral_oscillatory_route():
    for a in (1.0, 2.0):
        direct = model_integral_oscillatory(a)
        target = 2.0 * bessel_k0(a)
        assert abs(direct - target) / target < 0.01


def test_model_integral_rejects_bad_scale():
    with pytest.raises(ValidationError):
        model_integral(0.0)
    with pytest.raises(ValidationError):
        model_integral_oscillatory(-1.0)


# ---------------------------------------------------------------------------
# exponential rates of the sources


def test_source_rate_reference_value():
    # at gamma = 1 the squared coefficient is -2i per unit of v2
    rate = source_rate(-4.0, 1.0, 1, scale=0.5)
    assert np.isclose(rate, 1.0 + 1.0j, rtol=1e-12)
    rate = source_rate(-4.0, 1.0, -1, scale=0.5)
    assert np.isclose(rate, 1.0 - 1.0j, rtol=1e-12)


def test_source_rate_chirality_conjugation():
    for v2 in (-2.3, -0.4):
        plus = source_rate(v2, 1.7, 1)
        minus = source_rate(v2, 1.7, -1)
        assert np.isclose(plus, np.conj(minus), rtol=1e-12)


def test_source_rate_infinite_gamma_spacelike():
    assert np.isclose(source_rate(-4.0, np.inf, 1), 1.0, rtol=1e-12)
    assert np.isclose(source_rate(-9.0, np.inf, -1), 1.5, rtol=1e-12)


def test_source_rate_infinite_gamma_timelike_ambiguous():
    with pytest.raises(BranchAmbiguityError):
        source_rate(4.0, np.inf, 1)


def test_source_rate_zero_square_rejected():
    with pytest.raises(ValidationError):
        source_rate(0.0, 1.0, 1)


def test_source_rate_scalar_source_shift():
    rate = source_rate(-4.0, 1.0, 1, m0=0.3)
    assert rate.real > 0.0
    assert np.isclose(rate * rate, 0.09 + 2.0j, rtol=1e-12)
    assert np.isclose(rate * rate - 0.09,
                      source_rate(-4.0, 1.0, 1) ** 2, rtol=1e-12)


def test_source_rate_bad_parameters():
    with pytest.raises(ValidationError):
        source_rate(-1.0, 0.0, 1)
    with pytest.raises(ValidationError):
        source_rate(-1.0, 1.0, 2)


# ---------------------------------------------------------------------------
# one-triangle amplitudes, closed forms


def test_su2_closed_single_chirality_value():
    # infinite gamma, unit spacelike area: rate is exactly 1/2
    val = n0_su2_closed(-1.0, np.inf, chirality=1)
    assert np.isclose(val, kv(1, 0.5) / (0.5 * np.pi), rtol=1e-10)


def test_su2_closed_product_is_positive():
    val = n0_su2_closed(-4.0, 2.0)
    assert abs(val.imag) < 1e-12 * abs(val)
    assert val.real > 0.0
    plus = n0_su2_closed(-4.0, 2.0, chirality=1)
    minus = n0_su2_closed(-4.0, 2.0, chirality=-1)
    assert np.isclose(val, plus * minus, rtol=1e-12)


def test_so3_closed_single_chirality_value():
    # scale 1/4 turns |v2| = 16 into argument exactly 1
    val = n0_so3_closed(-16.0, np.inf, chirality=1)
    assert np.isclose(val, KI1_AT_1 / (2.0 * np.pi), rtol=1e-10)


def test_so3_closed_product_is_positive():
    val = n0_so3_closed(-4.0, 2.0)
    assert abs(val.imag) < 1e-12 * abs(val)
    assert val.real > 0.0


def test_face_argument_forms_agree():
    vp = np.array([0.3, 0.4 + 0.2j, 1.2])
    v2 = complex(vp @ vp)
    pair_form = n0_su2_closed(np.array([v2, np.conj(v2)]), 1.5)
    vec_form = n0_su2_closed(np.stack([vp, np.conj(vp)]), 1.5)
    scalar_form = n0_su2_closed(v2, 1.5)
    assert np.isclose(pair_form, scalar_form, rtol=1e-12)
    assert np.isclose(vec_form, scalar_form, rtol=1e-12)


def test_face_argument_bad_shape():
    with pytest.raises(ValidationError):
        n0_su2_closed(np.zeros(3), 1.0)


# ---------------------------------------------------------------------------
# deformed quadrature against the closed forms


def test_quadrature_matches_closed_form_grid():
    for v2 in (-1.0, -6.25):
        for gamma in (1.0, 3.0):
            quad_val = n0_deformed_quadrature(v2, gamma)
            closed = n0_su2_closed(v2, gamma)
            assert np.isclose(quad_val, closed, rtol=1e-8)


def test_quadrature_pure_scalar_source():
    # vanishing face vector with unit scalar source: K1(1)/pi per chirality
    val = n0_deformed_quadrature(0.0, 1.5, m0=1.0)
    assert np.isclose(val, (K1_AT_1 / np.pi) ** 2, rtol=1e-8)


def test_quadrature_with_scalar_source_matches_shifted_rate():
    v2, gamma, m0 = -1.0, 2.0, 0.4
    rp = source_rate(v2, gamma, 1, m0=m0)
    rm = source_rate(v2, gamma, -1, m0=m0)
    closed = (bessel_k1(rp) / (np.pi * rp)) * (bessel_k1(rm) / (np.pi * rm))
    val = n0_deformed_quadrature(v2, gamma, m0=m0)
    assert np.isclose(val, closed, rtol=1e-8)


def test_quadrature_rejects_adjoint_kernel():
    with pytest.raises(ValidationError):
        n0_deformed_quadrature(-1.0, 1.0, rep="so3")


# ---------------------------------------------------------------------------
# suppression slopes


def test_fit_exponential_rate_recovers_synthetic_slope():
    x = np.linspace(2.0, 8.0, 10)
    y = 5.0 * x ** -2.0 * np.exp(-1.3 * x)
    assert np.isclose(fit_exponential_rate(x, y, power=2.0), -1.3, rtol=1e-10)


def test_fit_exponential_rate_input_checks():
    with pytest.raises(ValidationError):
        fit_exponential_rate([1.0, 2.0], [1.0])
    with pytest.raises(ValidationError):
        fit_exponential_rate([1.0, 2.0], [1.0, 0.0])


def test_adjoint_slopes_match_asymptotic_rates():
    spacelike = suppression_slope("spacelike", 2.0, rep="so3")
    assert abs(spacelike + 0.5) < 0.05
    timelike = suppression_slope("timelike", 2.0, rep="so3")
    assert abs(timelike + 0.25) < 0.025


def test_su2_slopes_match_asymptotic_rates():
    spacelike = suppression_slope("spacelike", 2.0, rep="su2")
    assert abs(spacelike + 0.5) < 0.05
    timelike = suppression_slope("timelike", 2.0, rep="su2")
    assert abs(timelike + 0.25) < 0.025


def test_suppression_slope_bad_labels():
    with pytest.raises(ValidationError):
        suppression_slope("lightlike", 1.0)
    with pytest.raises(ValidationError):
        suppression_slope("spacelike", 1.0, rep="sl2c")


# ---------------------------------------------------------------------------
# linearized closure delta


def test_prefactor_reference_points():
    assert np.isclose(linearized_delta_prefactor(1.0), 512.0 * np.pi ** 2,
                      rtol=1e-12)
    assert np.isclose(linearized_delta_prefactor(np.inf), (64.0 * np.pi) ** 2,
                      rtol=1e-12)
    with pytest.raises(ValidationError):
        linearized_delta_prefactor(0.0)


def test_prefactor_monotone_in_gamma():
    gammas = (0.5, 1.0, 2.0, 5.0)
    vals = [linearized_delta_prefactor(g) for g in gammas]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_mollified_density_is_gaussian():
    eps = 0.2
    peak = mollified_delta_density(0.0, eps)
    assert np.isclose(peak, (4.0 * np.pi * eps) ** -1.5, rtol=1e-8)
    for k in (0.3, 0.8):
        ratio = mollified_delta_density(k, eps) / peak
        assert np.isclose(ratio, np.exp(-k * k / (4.0 * eps)), rtol=1e-7)


def test_mollified_density_input_checks():
    with pytest.raises(ValidationError):
        mollified_delta_density(1.0, 0.0)
    with pytest.raises(ValidationError):
        mollified_delta_density(-1.0, 0.1)


def test_mollified_mass_is_unit():
    for eps in (0.02, 0.1):
        assert abs(mollified_delta_mass(eps) - 1.0) < 1e-6


def test_closure_constant_is_quarter_prefactor():
    ratio = (4.0 * mollified_closure_constant(2.0)
             / linearized_delta_prefactor(2.0))
    assert np.isclose(ratio, 1.0, rtol=1e-6)


# ---------------------------------------------------------------------------
# sources and contour rotors


def test_msource_from_face():
    v = np.array([1.0, 2.0, 3.0])
    src = MSource.from_face(v, 2.0, 1, m0=0.7)
    assert src.m0 == 0.7
    assert np.allclose(src.mvec, -0.5j * (1.0 + 0.5j) * v)
    expected = 0.49 + complex((-0.5j * (1.0 + 0.5j)) ** 2 * (v @ v))
    assert np.isclose(src.square, expected, rtol=1e-12)


def test_msource_bad_parameters():
    with pytest.raises(ValidationError):
        MSource.from_face([1.0, 0.0, 0.0], 0.0, 1)
    with pytest.raises(ValidationError):
        MSource.from_face([1.0, 0.0, 0.0], 1.0, 0)


def test_contour_point_validation():
    with pytest.raises(ValidationError):
        ContourPoint(0.1, -0.2, 0.0)
    with pytest.raises(ValidationError):
        ContourPoint(0.1, 0.2, 7.0)


def test_deformed_rotor_rest_point():
    ax = np.array([0.0, 0.0, 1.0])
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    rot = deformed_rotor(ContourPoint(0.0, 0.0, 0.0), ax, e1, e2)
    assert rot.w == 0.0
    assert np.allclose(rot.u, ax)


def test_deformed_rotor_stays_unit_on_complex_triple():
    b = 0.4
    ax = np.array([1.0, 0.0, 0.0])
    e1 = np.array([0.0, np.cosh(b), 1j * np.sinh(b)])
    e2 = np.array([0.0, -1j * np.sinh(b), np.cosh(b)])
    rot = deformed_rotor(ContourPoint(0.7, 1.1, 2.3), ax, e1, e2)
    defect = rot.w ** 2 + rot.u @ rot.u - 1.0
    assert abs(defect) < 1e-12


def test_deformed_rotor_rejects_bad_triples():
    ax = np.array([0.0, 0.0, 1.0])
    e1 = np.array([1.0, 0.0, 0.0])
    with pytest.raises(ValidationError):
        deformed_rotor(ContourPoint(0.0, 0.0, 0.0), 2.0 * ax, e1,
                       np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ValidationError):
        deformed_rotor(ContourPoint(0.0, 0.0, 0.0), ax, e1, e1)


# ---------------------------------------------------------------------------
# near-degenerate simplex reduction


def near_degenerate_simplex(eps_time=(0.02, 0.0, -0.01),
                            d4=(0.05, 0.01, 0.0, 0.0),
                            legs=((1.0, 0.0, 0.0),
                                  (0.0, 1.0, 0.0),
                                  (0.0, 0.0, 1.0))):
    d4 = np.asarray(d4)
    edges = np.zeros((4, 4))
    for k in range(3):
        edges[k] = d4 + np.concatenate([[eps_time[k]], legs[k]])
    edges[3] = d4
    return Simplex4(edges=edges)


def test_degenerate_vectors_unit_cube_corner():
    v1, v2, v3, v4 = degenerate_triangle_vectors(near_degenerate_simplex())
    assert np.allclose(v1, [0.5, 0.0, 0.0])
    assert np.allclose(v2, [0.0, 0.5, 0.0])
    assert np.allclose(v3, [0.0, 0.0, 0.5])
    assert np.allclose(v4, v1 + v2 + v3)


def test_degenerate_vectors_input_checks():
    with pytest.raises(ValidationError):
        degenerate_triangle_vectors(np.eye(4))
    with pytest.raises(ValidationError):
        degenerate_triangle_vectors(
            near_degenerate_simplex(d4=(0.6, 0.1, 0.0, 0.0))
        )
    with pytest.raises(ValidationError):
        degenerate_triangle_vectors(
            near_degenerate_simplex(eps_time=(0.5, 0.0, 0.0))
        )


def test_degenerate_vectors_zero_area():
    s = near_degenerate_simplex(d4=(0.05, 0.01, 0.0, 0.03),
                                legs=((1.0, 0.0, 0.0),
                                      (2.0, 0.0, 0.0),
                                      (0.0, 1.0, 0.0)))
    with pytest.raises(ZeroAreaError):
        degenerate_triangle_vectors(s)


# ---------------------------------------------------------------------------
# Monte-Carlo amplitude


def test_mc_estimate_is_deterministic():
    vecs = equifacial_triangles()
    a = n_degenerate_mc(vecs, n_samples=2000, seed=5)
    b = n_degenerate_mc(vecs, n_samples=2000, seed=5)
    assert a.mean == b.mean
    assert a.stderr == b.stderr
    assert a.n_samples == 2000 and a.seed == 5
    assert isinstance(a, MCEstimate)


def test_mc_seeds_agree_within_errors():
    vecs = equifacial_triangles()
    a = n_degenerate_mc(vecs, n_samples=4000, seed=1)
    b = n_degenerate_mc(vecs, n_samples=4000, seed=2)
    gap = abs(a.mean - b.mean)
    assert gap < 4.0 * np.hypot(a.stderr, b.stderr)


def test_mc_accepts_simplex_input():
    est = n_degenerate_mc(near_degenerate_simplex(), n_samples=500, seed=3)
    assert np.isfinite(est.mean) and np.isfinite(est.stderr)
    assert est.stderr > 0.0


def test_mc_convergence_warning():
    vecs = equifacial_triangles()
    with pytest.warns(UserWarning):
        n_degenerate_mc(vecs, n_samples=200, seed=0, warn_rtol=1e-3)


def test_mc_input_checks():
    vecs = equifacial_triangles()
    with pytest.raises(ValidationError):
        n_degenerate_mc(vecs[:3])
    with pytest.raises(ValidationError):
        n_degenerate_mc(vecs, n_samples=0)
    bad = vecs.copy()
    bad[0] = 0.0
    with pytest.raises(ZeroAreaError):
        n_degenerate_mc(bad)


# ---------------------------------------------------------------------------
# measure factorization


def test_haar_factorization_routes_agree():
    res = haar_factorization_check(n_samples=2000, seed=1)
    assert res["z"] < 4.0
    assert np.isclose(res["independent"], res["relative"],
                      atol=4.0 * res["sigma"])

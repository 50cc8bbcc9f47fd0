import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_profile, semicircle_density, semicircle_mass, semicircle_stieltjes
from speclaw import qve
from speclaw.errors import InvalidProfile, NonConvergence, OutOfRange

CONST8 = qve.VarianceProfile.constant(8)


# ---------------------------------------------------------------------------
# solve_qve


def test_constant_profile_matches_semicircle_at_2i():
    sol = qve.solve_qve(CONST8, qve.SpectralPoint(0.0, 2.0))
    expected = 1j * (np.sqrt(2.0) - 1.0)
    assert np.allclose(sol.g, expected, atol=1e-9)
    assert abs(sol.m - expected) < 1e-9


def test_dominant_z_asymptotics():
    z = 1e6j
    sol = qve.solve_qve(CONST8, qve.SpectralPoint(0.0, 1e6))
    assert abs(sol.m - (-1.0 / z)) < 1e-16
    assert np.all(np.abs(sol.g - (-1.0 / z)) < 1e-16)


def test_symmetric_block_profile_collapses_to_constant():
    block = qve.BlockProfile(d=2, weights=np.array([0.5, 0.5]), coeffs=np.ones((2, 2)))
    sol = qve.solve_qve(block, qve.SpectralPoint(0.0, 2.0))
    expected = 1j * (np.sqrt(2.0) - 1.0)
    assert abs(sol.g[0] - expected) < 1e-9
    assert abs(sol.g[1] - sol.g[0]) < 1e-12


def test_residual_is_true_defect_by_substitution():
    profile = random_profile(8, seed=1, low=0.5, high=1.0)
    point = qve.SpectralPoint(0.3, 0.05)
    sol = qve.solve_qve(profile, point)
    sg = profile.entries @ sol.g / profile.n
    defect = np.abs(1.0 / sol.g + point.z + sg).max()
    assert defect <= 1e-10
    assert defect == pytest.approx(sol.residual, abs=1e-14)


def test_solution_invariants_on_closed_form_grid():
    for x in np.linspace(-3, 3, 10):
        for eta in np.geomspace(1e-4, 1.0, 5):
            sol = qve.solve_qve(CONST8, qve.SpectralPoint(float(x), float(eta)))
            assert abs(sol.m - semicircle_stieltjes(complex(x, eta))) < 1e-8
            assert np.all(sol.g.imag > 0)
            assert np.all(np.abs(sol.g) <= 1.0 / eta)


def test_nonconvergence_reports_offending_point():
    with pytest.raises(NonConvergence) as err:
        qve.solve_qve(CONST8, qve.SpectralPoint(2.0, 1e-9), qve.SolverOptions(max_iter=5))
    assert err.value.eta == 1e-9


@st.composite
def profiles(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    seed = draw(st.integers(min_value=0, max_value=10_000))
    low = draw(st.floats(min_value=0.05, max_value=0.5))
    return random_profile(n, seed=seed, low=low, high=1.0)


@st.composite
def points(draw):
    x = draw(st.floats(min_value=-4.0, max_value=4.0))
    eta = draw(st.floats(min_value=1e-3, max_value=10.0))
    return qve.SpectralPoint(x, eta)


@given(profile=profiles(), point=points())
def test_qve_invariants_hold_for_random_profiles(profile, point):
    sol = qve.solve_qve(profile, point)
    assert np.all(sol.g.imag > 0)
    assert np.all(np.abs(sol.g) <= 1.0 / point.im + 1e-12)
    assert sol.residual <= 1e-10
    assert sol.m == pytest.approx(complex(sol.g.mean()))


@given(
    d=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=1000),
    x=st.floats(min_value=-3.0, max_value=3.0),
    eta=st.floats(min_value=0.05, max_value=2.0),
)
@settings(max_examples=20)
def test_block_and_full_solutions_agree(d, seed, x, eta):
    gen = np.random.default_rng(seed)
    sizes = gen.integers(1, 5, size=d)
    n = 8 * int(sizes.sum())
    coeffs = gen.uniform(0.2, 1.0, size=(d, d))
    coeffs = (coeffs + coeffs.T) / 2.0
    block = qve.BlockProfile(d=d, weights=8 * sizes / n, coeffs=coeffs)
    full = qve.expand_block_profile(block, n)
    point = qve.SpectralPoint(x, eta)
    opts = qve.SolverOptions(tol=1e-12)
    m_block = qve.solve_qve(block, point, opts).m
    m_full = qve.solve_qve(full, point, opts).m
    assert abs(m_block - m_full) < 1e-9


# ---------------------------------------------------------------------------
# continuation


def test_continuation_reaches_the_real_axis_limit():
    sol = qve.solve_qve_continuation(CONST8, 0.0, 1.0, 1e-6, 40)
    assert abs(sol.m - 1j) < 1e-5


def test_single_step_continuation_equals_direct_solve():
    point = qve.SpectralPoint(0.7, 0.3)
    direct = qve.solve_qve(CONST8, point)
    cont = qve.solve_qve_continuation(CONST8, 0.7, 0.3, 0.3, 5)
    assert np.allclose(direct.g, cont.g, atol=1e-12)


def test_outside_support_imaginary_part_vanishes():
    sol = qve.solve_qve_continuation(CONST8, 3.0, 1.0, 1e-6, 40)
    assert sol.m.imag <= 1e-4
    assert abs(sol.m - semicircle_stieltjes(complex(3.0, 1e-6))) < 1e-8


def test_continuation_path_is_eta_continuous():
    path = qve.continuation_path(CONST8, 2.0, 1.0, 1e-6, 40)
    ratio = (1e-6) ** (1.0 / 40.0)
    for prev, cur in zip(path, path[1:]):
        assert abs(cur.m - prev.m) <= 2.0 * ratio * abs(prev.m)


def test_continuation_validates_eta_ordering():
    with pytest.raises(ValueError):
        qve.solve_qve_continuation(CONST8, 0.0, 1e-6, 1.0, 10)


# ---------------------------------------------------------------------------
# density extraction


def test_density_at_center_matches_semicircle(constant_curve):
    mid = constant_curve.values[np.argmin(np.abs(constant_curve.grid))]
    assert abs(mid - 1.0 / np.pi) < 1e-4


def test_density_vanishes_outside_support(constant_curve):
    outside = constant_curve.values[np.abs(constant_curve.grid) > 2.05]
    assert outside.max() <= 1e-4


def test_density_is_even_for_constant_profile():
    grid = np.linspace(-2.5, 2.5, 101)
    curve = qve.extract_density(qve.VarianceProfile.constant(4), grid)
    assert np.allclose(curve.values, curve.values[::-1], atol=1e-8)


def test_density_mass_and_support_for_random_profiles():
    for seed in (1, 2):
        curve = qve.extract_density(random_profile(12, seed=seed), qve.default_grid())
        assert curve.mass() == pytest.approx(1.0, abs=1e-3)
        assert curve.values[np.abs(curve.grid) > 2.05].max() <= 1e-3


def test_density_matches_closed_form_pointwise(constant_curve):
    sel = np.abs(constant_curve.grid) <= 1.8
    exact = np.array([semicircle_density(x) for x in constant_curve.grid[sel]])
    assert np.abs(constant_curve.values[sel] - exact).max() < 1e-4


def test_extract_density_rejects_bad_grid():
    with pytest.raises(ValueError):
        qve.extract_density(CONST8, np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        qve.extract_density(CONST8, np.array([0.0, 1.0]), eta=-1.0)


# ---------------------------------------------------------------------------
# integration


def test_total_mass_is_one(constant_curve):
    assert qve.integrate_density(constant_curve, -3.0, 3.0) == pytest.approx(1.0, abs=1e-3)


def test_integral_matches_closed_form(constant_curve):
    got = qve.integrate_density(constant_curve, -1.0, 1.0)
    assert got == pytest.approx(np.sqrt(3.0) / (2.0 * np.pi) + 1.0 / 3.0, abs=1e-4)


def test_degenerate_interval_is_zero(constant_curve):
    assert qve.integrate_density(constant_curve, 0.5, 0.5) == 0.0


def test_integral_additivity(constant_curve):
    whole = qve.integrate_density(constant_curve, -1.5, 1.5)
    parts = qve.integrate_density(constant_curve, -1.5, 0.25) + qve.integrate_density(
        constant_curve, 0.25, 1.5
    )
    assert whole == pytest.approx(parts, abs=5e-6)


def test_out_of_range_rejected(constant_curve):
    with pytest.raises(OutOfRange):
        qve.integrate_density(constant_curve, -5.0, 0.0)
    with pytest.raises(OutOfRange):
        qve.integrate_density(constant_curve, 1.0, 0.0)


def test_integral_against_quadrature_oracle(constant_curve):
    # trapezoid of the closed form on a fine mesh, windows inside the bulk
    for lo, hi in [(-0.4, 0.9), (1.0, 1.9), (-1.99, -1.0)]:
        got = qve.integrate_density(constant_curve, lo, hi)
        assert got == pytest.approx(semicircle_mass(lo, hi), abs=2e-4)


# ---------------------------------------------------------------------------
# bulk detection


def test_bulk_at_tenth_matches_closed_form(constant_curve):
    (bulk,) = qve.detect_bulk(constant_curve, 0.1)
    # closed form: rho(x) = 0.1 at |x| = sqrt(4 - (0.2 pi)^2)
    edge = np.sqrt(4.0 - (0.2 * np.pi) ** 2)
    step = constant_curve.grid[1] - constant_curve.grid[0]
    assert abs(bulk.lo + edge) <= step
    assert abs(bulk.hi - edge) <= step
    assert bulk.min_density == 0.1


def test_bulk_empty_when_eps_exceeds_peak(constant_curve):
    assert qve.detect_bulk(constant_curve, 1.0) == []


def test_tiny_eps_recovers_full_support(constant_curve):
    (bulk,) = qve.detect_bulk(constant_curve, 1e-9)
    step = constant_curve.grid[1] - constant_curve.grid[0]
    assert abs(bulk.lo + 2.0) <= step
    assert abs(bulk.hi - 2.0) <= step


def test_bulk_values_respect_threshold(constant_curve):
    for eps in (0.05, 0.2, 0.3):
        for bulk in qve.detect_bulk(constant_curve, eps):
            inside = (constant_curve.grid >= bulk.lo) & (constant_curve.grid <= bulk.hi)
            assert constant_curve.values[inside].min() >= eps


# ---------------------------------------------------------------------------
# profiles, validation, serialization


def test_profile_validation():
    with pytest.raises(InvalidProfile):
        qve.VarianceProfile(n=2, entries=np.array([[1.0, 0.0], [0.0, 1.0]]))  # zero entry
    with pytest.raises(InvalidProfile):
        qve.VarianceProfile(n=2, entries=np.array([[1.0, 0.5], [0.4, 1.0]]))  # asymmetric
    with pytest.raises(InvalidProfile):
        qve.VarianceProfile(n=2, entries=np.array([[1.0, 1.2], [1.2, 1.0]]))  # above 1
    with pytest.raises(InvalidProfile):
        qve.BlockProfile(d=2, weights=np.array([0.7, 0.7]), coeffs=np.ones((2, 2)))


def test_spectral_point_requires_upper_half_plane():
    with pytest.raises(ValueError):
        qve.SpectralPoint(0.0, 0.0)
    with pytest.raises(ValueError):
        qve.SpectralPoint(0.0, -1.0)


def test_profile_json_round_trip(tmp_path):
    prof = random_profile(6, seed=3)
    path = tmp_path / "p.json"
    qve.save_profile(prof, path)
    back = qve.load_profile(path)
    assert isinstance(back, qve.VarianceProfile)
    assert np.array_equal(back.entries, prof.entries)

    block = qve.BlockProfile(d=2, weights=np.array([0.25, 0.75]), coeffs=np.array([[1.0, 0.5], [0.5, 0.9]]))
    qve.save_profile(block, path)
    back = qve.load_profile(path)
    assert isinstance(back, qve.BlockProfile)
    assert np.array_equal(back.coeffs, block.coeffs)
    payload = json.loads(path.read_text())
    assert set(payload) == {"d", "weights", "coeffs"}


def test_density_csv_export(tmp_path, constant_curve):
    path = tmp_path / "rho.csv"
    qve.density_to_csv(constant_curve, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,rho"
    assert len(lines) == constant_curve.grid.size + 1
    x0, rho0 = lines[1].split(",")
    assert float(x0) == constant_curve.grid[0]
    assert float(rho0) == constant_curve.values[0]


def test_reduce_profile_recovers_blocks():
    block = qve.BlockProfile(d=3, weights=np.array([0.5, 0.25, 0.25]), coeffs=np.array(
        [[1.0, 0.4, 0.3], [0.4, 0.8, 0.2], [0.3, 0.2, 0.6]]
    ))
    full = qve.expand_block_profile(block, 16)
    red = qve.reduce_profile(full)
    assert isinstance(red, qve.BlockProfile)
    assert red.d == 3
    point = qve.SpectralPoint(0.4, 0.2)
    assert abs(qve.solve_qve(red, point).m - qve.solve_qve(block, point).m) < 1e-10


def test_reduce_profile_leaves_generic_profiles_alone():
    prof = random_profile(6, seed=9)
    assert qve.reduce_profile(prof) is prof


def test_profile_fingerprint_distinguishes_profiles():
    a = qve.VarianceProfile.constant(4)
    b = qve.VarianceProfile.constant(5)
    assert qve.profile_fingerprint(a) != qve.profile_fingerprint(b)
    assert qve.profile_fingerprint(a) == qve.profile_fingerprint(qve.VarianceProfile.constant(4))

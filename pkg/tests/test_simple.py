import pytest

from entropy_engine.errors import DomainError, InputFormatError, IntegrationError
from entropy_engine.simple import (
    CROSSING,
    EQUAL_SECTORS,
    X_INSIDE_Y,
    Y_INSIDE_X,
    SimpleSystemModel,
    Box,
    check_caratheodory,
    check_convexity,
    check_lipschitz,
    check_nesting,
    forward_sector_contains,
    integrate_adiabat,
    model_from_spec,
    monatomic_ideal_gas,
    point,
    pressure_at,
    pressure_consistency,
    sqrt_singularity_model,
    tabulated_model,
    van_der_waals_gas,
)

GAS = monatomic_ideal_gas()
VDW = van_der_waals_gas()


def gas_adiabat_energy(x, v):
    """Closed form: U V^(2/3) is constant along ideal-gas adiabats."""
    return x.U * (x.V[0] / v) ** (2.0 / 3.0)


# ------------------------------------------------------------ integration


def test_zero_length_path_returns_base_point():
    x = point(1.5, 1.0)
    surface = integrate_adiabat(GAS, x, [(1.0,)])
    assert surface.samples == [x]


def test_ideal_gas_invariant_is_conserved():
    x = point(1.5, 1.0)
    surface = integrate_adiabat(GAS, x, [(2.0,)], step=1e-3, tol=None)
    inv = x.U * x.V[0] ** (2.0 / 3.0)
    drift = max(
        abs(s.U * s.V[0] ** (2.0 / 3.0) - inv) / inv for s in surface.samples
    )
    assert drift <= 1e-6


def test_forward_backward_path_returns_to_start():
    x = point(1.5, 1.0)
    surface = integrate_adiabat(GAS, x, [(2.0,), (1.0,)], step=1e-3, tol=None)
    assert abs(surface.samples[-1].U - x.U) <= 1e-7


def test_path_leaving_domain_raises():
    x = point(9.5, 4.5)
    with pytest.raises(IntegrationError):
        integrate_adiabat(GAS, x, [(0.6,)], tol=None)


def test_unreachable_tolerance_raises_step_underflow():
    x = point(1.5, 1.0)
    with pytest.raises(IntegrationError):
        integrate_adiabat(GAS, x, [(2.0,)], step=0.5, tol=1e-18, min_step=1e-3)


def test_surface_samples_are_connected():
    x = point(1.5, 1.0)
    surface = integrate_adiabat(GAS, x, [(2.0,)], step=1e-2)
    assert surface.is_connected()


# --------------------------------------------------------- forward sector


def test_state_is_in_its_own_sector():
    x = point(1.5, 1.0)
    assert forward_sector_contains(GAS, x, x)


def test_higher_energy_same_volume_is_ahead():
    x = point(1.5, 1.0)
    assert forward_sector_contains(GAS, x, point(2.0, 1.0))
    assert not forward_sector_contains(GAS, x, point(1.0, 1.0))


def test_free_expansion_is_one_way():
    # same energy, larger volume: reachable, but never back
    x = point(1.5, 1.0)
    y = point(1.5, 2.0)
    assert forward_sector_contains(GAS, x, y)
    assert not forward_sector_contains(GAS, y, x)


def test_sector_query_without_oracle_integrates():
    model = SimpleSystemModel(
        name="gas_no_oracle", n=1, domain=GAS.domain, pressure=GAS.pressure
    )
    x = point(1.5, 1.0)
    assert forward_sector_contains(model, x, point(1.5, 2.0))
    assert not forward_sector_contains(model, x, point(0.8, 1.0))


def test_sector_query_raises_when_adiabat_cannot_reach_target():
    model = SimpleSystemModel(
        name="gas_no_oracle", n=1, domain=GAS.domain, pressure=GAS.pressure
    )
    # the adiabat through a hot state exits the energy ceiling on the way
    # to small volumes
    with pytest.raises(IntegrationError):
        forward_sector_contains(model, point(9.5, 4.5), point(5.0, 0.6))


# ----------------------------------------------------------------- nesting


def test_nesting_equal_when_second_point_on_adiabat():
    x = point(1.5, 1.0)
    y = point(gas_adiabat_energy(x, 1.7), 1.7)
    result = check_nesting(GAS, x, y)
    assert result.case == EQUAL_SECTORS
    assert not result.violation


def test_nesting_strict_orders_follow_entropy():
    x = point(1.5, 1.0)
    hot = point(3.0, 1.0)
    result = check_nesting(GAS, x, hot)
    assert result.case == Y_INSIDE_X  # x strictly precedes the hotter state
    assert check_nesting(GAS, hot, x).case == X_INSIDE_Y


def test_adversarial_model_reports_crossing():
    adv = sqrt_singularity_model()
    merged = point(1.0, 0.5)
    branch = point(1.0001, 0.3)
    result = check_nesting(adv, merged, branch)
    assert result.case == CROSSING
    assert result.violation


def test_lipschitz_models_never_report_crossing():
    import random

    rng = random.Random(11)
    for model in (GAS, VDW):
        lo, hi = model.domain.lo, model.domain.hi
        for _ in range(40):
            a = point(
                lo[0] + (0.1 + 0.8 * rng.random()) * (hi[0] - lo[0]),
                lo[1] + (0.1 + 0.8 * rng.random()) * (hi[1] - lo[1]),
            )
            b = point(
                lo[0] + (0.1 + 0.8 * rng.random()) * (hi[0] - lo[0]),
                lo[1] + (0.1 + 0.8 * rng.random()) * (hi[1] - lo[1]),
            )
            assert not check_nesting(model, a, b).violation


def test_nesting_needs_probes():
    with pytest.raises(DomainError):
        check_nesting(GAS, point(1.5, 1.0), point(2.0, 1.0), probes=[])


# ------------------------------------------------------------- reciprocity


def test_adiabat_reciprocity():
    x = point(1.5, 1.0)
    tol = 1e-10
    surface = integrate_adiabat(GAS, x, [(2.2,)], tol=tol)
    y = surface.samples[-1]
    back = integrate_adiabat(GAS, y, [(1.0,)], tol=tol)
    assert abs(back.samples[-1].U - x.U) <= 10 * tol * max(1.0, abs(x.U))


def test_orientation_energy_up_stays_in_sector():
    x = point(1.5, 1.0)
    for du in (0.1, 0.5, 1.0):
        assert forward_sector_contains(GAS, x, point(x.U + du, x.V[0]))


def test_sector_convexity_on_sampled_members():
    x = point(1.5, 1.0)
    members = [point(2.0, 1.2), point(1.8, 2.4)]
    for a in members:
        assert forward_sector_contains(GAS, x, a)
    mid = point(
        0.5 * (members[0].U + members[1].U),
        0.5 * (members[0].V[0] + members[1].V[0]),
    )
    assert forward_sector_contains(GAS, x, mid)


# -------------------------------------------------------------- convexity


def test_convexity_endpoints_pass():
    report = check_convexity(GAS, point(1.5, 1.0), point(2.5, 2.0), t_grid=(0.0, 1.0))
    assert report.holds


def test_convexity_midpoint_strict_for_gas():
    x, y = point(1.5, 1.0), point(2.5, 2.0)
    report = check_convexity(GAS, x, y, t_grid=(0.5,))
    assert report.holds
    mix = point(2.0, 1.5)
    combined = 0.5 * GAS.entropy(x.U, x.V) + 0.5 * GAS.entropy(y.U, y.V)
    assert GAS.entropy(mix.U, mix.V) > combined


def test_convexity_flags_non_concave_oracle():
    bad = SimpleSystemModel(
        name="convex_oracle", n=1, domain=GAS.domain,
        pressure=GAS.pressure, entropy=lambda u, v: u * u,
    )
    report = check_convexity(bad, point(1.0, 1.0), point(3.0, 1.0), t_grid=(0.5,))
    assert not report.holds


# ------------------------------------------------------------- neighborhood


def test_caratheodory_finds_unreachable_and_irreversible():
    report = check_caratheodory(GAS, point(2.0, 2.0), radius=0.3, seed=5)
    assert report.holds
    assert report.details["unreachable"] is not None
    assert report.details["strictly_above"] is not None


def test_caratheodory_radius_must_fit_in_domain():
    with pytest.raises(DomainError):
        check_caratheodory(GAS, point(1.0, 1.0), radius=50.0)


def test_energy_bump_is_strictly_irreversible():
    x = point(1.5, 1.0)
    y = point(1.6, 1.0)
    assert forward_sector_contains(GAS, x, y)
    assert not forward_sector_contains(GAS, y, x)


# ---------------------------------------------------------------- pressure


def test_monatomic_pressure_value():
    assert pressure_at(GAS, point(1.5, 1.0)) == (1.0,)


def test_pressure_matches_tangent_plane_slope():
    for model in (GAS, VDW):
        x = point(2.0, 1.5)
        assert pressure_consistency(model, x) <= 1e-6


def test_pressure_on_boundary_raises():
    with pytest.raises(DomainError):
        pressure_at(GAS, point(GAS.domain.lo[0], 1.0))


# ---------------------------------------------------------------- models


def test_lipschitz_check_passes_for_builtin_models():
    for model in (GAS, VDW):
        assert check_lipschitz(model, samples=200, seed=3).holds


def test_lipschitz_check_fails_for_sqrt_singularity():
    adv = sqrt_singularity_model()
    report = check_lipschitz(adv, samples=400, seed=3)
    assert not report.holds
    assert report.details["worst_quotient"] > adv.lipschitz_bound


def test_tabulated_model_interpolates_pressure():
    us = [0.5 + 0.25 * k for k in range(40)]
    vs = [0.5 + 0.25 * k for k in range(20)]
    p = [[2.0 * u / (3.0 * v) for v in vs] for u in us]
    model = tabulated_model(us, vs, p)
    x = point(1.7, 1.3)
    exact = 2.0 * x.U / (3.0 * x.V[0])
    assert abs(model.pressure(x.U, x.V)[0] - exact) <= 5e-3


def test_model_from_spec_builds_each_kind():
    gas = model_from_spec({"type": "ideal_gas", "moles": "2"})
    assert gas.moles == 2
    vdw = model_from_spec({"type": "van_der_waals", "a": 0.1, "b": 0.01})
    assert "van_der_waals" in vdw.name
    adv = model_from_spec({"type": "sqrt_singularity"})
    assert adv.entropy is None
    tab = model_from_spec({
        "type": "tabulated",
        "u_grid": [1.0, 2.0], "v_grid": [1.0, 2.0],
        "pressure_grid": [[1.0, 0.5], [2.0, 1.0]],
    })
    assert tab.n == 1


def test_model_from_spec_rejects_unknown_type():
    with pytest.raises(InputFormatError):
        model_from_spec({"type": "plasma"})


def test_domain_is_open():
    box = Box((0.0, 0.0), (1.0, 1.0))
    assert not box.contains((0.0, 0.5))
    assert box.contains((0.5, 0.5))

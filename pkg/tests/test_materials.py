import pytest

from afsdml.materials import (
    ALLOY_NAMES,
    MaterialError,
    builtin_alloy,
    with_overrides,
)
from conftest import AA2024_OVERLAY

TABULATED = {
    # name: (elastic_modulus GPa, density g/cm^3, specific_heat J/(kg K))
    "AA2024": (73.1, 2.78, 875.0),
    "AA5083": (72.0, 2.66, 880.0),
    "AA5086": (70.0, 2.66, 880.0),
    "AA7075": (71.7, 2.81, 960.0),
    "AA6061": (68.9, 2.70, 896.0),
}


@pytest.mark.parametrize("name", ALLOY_NAMES)
def test_builtin_matches_tabulated_constants(name):
    props = builtin_alloy(name)
    e, rho, cp = TABULATED[name]
    assert props.elastic_modulus == e
    assert props.density == rho
    assert props.specific_heat == cp


def test_builtin_leaves_untabulated_fields_unset():
    props = builtin_alloy("AA2024")
    assert set(props.missing_fields()) == {
        "thermal_conductivity", "cte", "poisson_ratio",
        "yield_stress_ref", "solidus_temp",
    }


def test_unknown_alloy_rejected_with_valid_names():
    with pytest.raises(MaterialError) as err:
        builtin_alloy("AA9999")
    msg = str(err.value)
    assert "unknown alloy" in msg
    for name in ALLOY_NAMES:
        assert name in msg


def test_builtin_is_pure_lookup():
    assert builtin_alloy("AA6061") == builtin_alloy("AA6061")


def test_overlay_completes_record():
    props = with_overrides(builtin_alloy("AA2024"), AA2024_OVERLAY)
    assert props.missing_fields() == []
    assert props.thermal_conductivity == 121.0
    assert props.yield_stress_ref == 324.0
    # tabulated values untouched
    assert props.elastic_modulus == 73.1


def test_overlay_is_idempotent():
    base = builtin_alloy("AA2024")
    once = with_overrides(base, AA2024_OVERLAY)
    twice = with_overrides(once, AA2024_OVERLAY)
    assert once == twice


def test_incomplete_result_lists_missing_fields():
    with pytest.raises(MaterialError) as err:
        with_overrides(builtin_alloy("AA2024"), {"thermal_conductivity": 121.0})
    msg = str(err.value)
    assert "missing" in msg
    assert "cte" in msg and "poisson_ratio" in msg and "solidus_temp" in msg


def test_poisson_ratio_out_of_range_rejected():
    overlay = dict(AA2024_OVERLAY, poisson_ratio=0.6)
    with pytest.raises(MaterialError, match="poisson_ratio"):
        with_overrides(builtin_alloy("AA2024"), overlay)


def test_negative_property_rejected():
    overlay = dict(AA2024_OVERLAY, thermal_conductivity=-1.0)
    with pytest.raises(MaterialError, match="thermal_conductivity"):
        with_overrides(builtin_alloy("AA2024"), overlay)


def test_solidus_must_exceed_reference():
    overlay = dict(AA2024_OVERLAY, solidus_temp=20.0)
    with pytest.raises(MaterialError, match="solidus_temp"):
        with_overrides(builtin_alloy("AA2024"), overlay)


def test_unknown_overlay_key_rejected():
    with pytest.raises(MaterialError, match="unknown property field"):
        with_overrides(builtin_alloy("AA2024"), {"not_a_field": 1.0})


def test_temperature_coefficient_defaults_to_constant(aa2024):
    assert aa2024.value_at("thermal_conductivity", 600.0) == 121.0


def test_temperature_coefficient_applies_linearly():
    overlay = dict(AA2024_OVERLAY, temp_coeffs={"thermal_conductivity": -1e-4})
    props = with_overrides(builtin_alloy("AA2024"), overlay)
    ref_k = props.reference_temp + 273.15
    assert props.value_at("thermal_conductivity", ref_k) == pytest.approx(121.0)
    assert props.value_at("thermal_conductivity", ref_k + 100.0) == pytest.approx(
        121.0 * (1.0 - 1e-4 * 100.0)
    )


def test_temperature_coefficient_unknown_field_rejected():
    overlay = dict(AA2024_OVERLAY, temp_coeffs={"density": 1e-4})
    with pytest.raises(MaterialError, match="temperature coefficient"):
        with_overrides(builtin_alloy("AA2024"), overlay)

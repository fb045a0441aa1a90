import pytest

from cgllab.verification import (
    check_complex_oracle,
    check_exponents,
    check_gronwall,
    check_lipschitz_fuzz,
    check_moreau_yosida,
    check_operator_identities,
    check_resolvent_identity,
    check_spectral_inequalities,
    check_subdifferential,
    run_suite,
)


@pytest.mark.parametrize("check", [check_operator_identities, check_moreau_yosida, check_subdifferential,
                                   check_resolvent_identity, check_spectral_inequalities])
def test_field_checks_pass(check):
    res = check(50, 3)
    assert res.passed, res.detail


def test_other_checks_pass():
    assert check_gronwall().passed
    assert check_exponents().passed
    assert check_complex_oracle(3, seed=2).passed
    assert all(r.passed for r in check_lipschitz_fuzz(20_000, seed=4))


def test_operator_identities_detect_loose_tolerance_failure():
    # a negative tolerance can never be met, so the check must report failure
    assert not check_operator_identities(5, 0, tol=-1.0).passed


def test_suite_progress_callback():
    seen = []
    results = run_suite(fast=True, seed=1, progress=seen.append)
    assert seen == results and all(r.passed for r in results)
    names = {r.name for r in results}
    assert {"operator identities", "Gronwall envelope", "complex oracle"} <= names
    assert sum(n.startswith("pointwise Lipschitz") for n in names) == 5

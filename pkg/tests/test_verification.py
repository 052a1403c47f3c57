import numpy as np
import pytest

from jmreeb.errors import ConfigError
from jmreeb.models import get_system
from jmreeb.verification import Polynomial, ResidualReport, Sweep, random_section, verify_system


def test_report_pass_rule():
    r = ResidualReport.from_residuals("x", [1e-6, 2e-6], 1e-5, 7)
    assert r.passed and r.points == 2 and r.max_residual == 2e-6 and r.seed == 7
    assert r.mean_residual == pytest.approx(1.5e-6)
    assert not ResidualReport.from_residuals("x", [1e-5], 1e-5, 0).passed
    assert not ResidualReport.from_residuals("x", [np.nan], 1.0, 0).passed


def test_polynomial_gradient_matches_differences(rng):
    from jmreeb.calculus import fd_gradient
    p = Polynomial.random(4, 3, rng)
    x = rng.uniform(-1, 1, 4)
    assert np.allclose(p.grad(x), fd_gradient(p, x), atol=1e-8)


def test_polynomial_without_variables():
    p = Polynomial([2.5], np.zeros((1, 0)))
    assert p(np.zeros(0)) == 2.5 and p.grad(np.zeros(0)).size == 0


def test_random_section_shapes(rng):
    X = random_section(2, 3, rng)
    q = rng.normal(size=2)
    assert X(q).shape == (3,) and X.derivative(q).shape == (3, 2)
    X0 = random_section(0, 3, rng)
    assert X0(np.zeros(0)).shape == (3,) and X0.derivative(np.zeros(0)).shape == (3, 0)


@pytest.mark.parametrize("name", ["oscillator", "rigid-body", "heavy-top", "hyperbolic", "pendula",
                                  "cotangent-custom"])
def test_bundled_systems_pass(name):
    report = verify_system(get_system(name), samples=20, seed=3)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert report["all_passed"], failed


def test_expected_checks_present():
    names = {c["name"] for c in verify_system(get_system("heavy-top"), samples=5)["checks"]}
    assert {"jacobi_schouten", "jacobi_lie_derivative", "hat_antihomomorphism", "anchor_law",
            "linearity_law", "liouville_kappa", "liouville_commutator",
            "restricted_bracket_identity", "poissonization", "scaling_law"} <= names


def test_anchor_checks_skipped_without_base():
    names = {c["name"] for c in verify_system(get_system("rigid-body"), samples=5)["checks"]}
    assert "anchor_law" not in names and "base_functions_commute" not in names


def test_hyperbolic_reports_curvature_formula():
    report = verify_system(get_system("hyperbolic"), samples=5)
    info = report["info"]["closed_form_curvature"]
    assert info["max_abs_difference"] > 0.1
    assert {"curvature_g", "curvature_g_e"} <= {c["name"] for c in report["checks"]}


def test_commutator_sign_is_reported():
    info = verify_system(get_system("rigid-body"), samples=5)["info"]
    assert info["liouville_commutator_opposite_sign"]["max_abs"] > 0.1


def test_corrupted_structure_fails():
    report = verify_system(get_system("rigid-body", {"perturb": (0, 1, 0, 0.1)}), samples=20)
    by_name = {c["name"]: c for c in report["checks"]}
    assert not report["all_passed"]
    assert by_name["jacobi_schouten"]["max_residual"] > 1e-2
    assert not by_name["poisson_jacobi_identity"]["passed"]


def test_same_seed_same_report():
    a = verify_system(get_system("pendula"), samples=10, seed=5)
    b = verify_system(get_system("pendula"), samples=10, seed=5)
    assert a == b


def test_samples_must_be_positive():
    with pytest.raises(ConfigError):
        Sweep(get_system("rigid-body"), samples=0)


def test_tolerance_override_tightens_fd_checks():
    report = verify_system(get_system("hyperbolic"), samples=10, tolerance=1e-14)
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["jacobi_schouten"]["tolerance"] == 1e-14
    assert not report["all_passed"]

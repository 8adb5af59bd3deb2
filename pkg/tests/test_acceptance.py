"""Acceptance suite: every criterion at its pinned tolerance.

Each test drives one named check from the verification registry (the same
code path as `msparticle verify`), prints one PASS/FAIL line with the
measured values, and asserts.  Tolerances live inside the checks and are
frozen there; nothing is calibrated at test time.

Criteria and their pinned tolerances:
 1  integer-picture oracle equivalence     rel. error < 1e-7, < 1 s/case
 2  constraint preservation                drift < 1e-8 per unit s
 3  mass-shell / dispersion residual       < 1e-8 m^2
 4  line-element back-substitution         residual < 1e-12, linear limit
 5  standard-limit Lorentz force           closed forms to 1e-8
 6  nonrelativistic limit                  < 1e-3 rel., ratio 4 +- 25%
 7  Maxwell EMT convergence                order 2.0 +- 0.3, < 30 s
 8  total conservation                     monotone under (h, sigma)
 9  cyclic identity                        sqrt form < 1e-10; full form logged
10  Poincare invariance (unit weights)     boost/integrate gap < 1e-9
11  composite-coordinate exactness         affine; 1e-12 inversion/invariance
12  trajectory convergence order           ratio 16 +- 30% per halving
"""

import json

import pytest

from msparticle.verify import CHECKS

CRITERIA = [
    (1, "integer_picture_oracle"),
    (2, "constraint_preservation"),
    (3, "mass_shell_dispersion"),
    (4, "line_element_backsubstitution"),
    (5, "lorentz_force_standard_limit"),
    (6, "nonrelativistic_limit"),
    (7, "maxwell_emt_convergence"),
    (8, "total_conservation"),
    (9, "cyclic_identity"),
    (10, "poincare_invariance"),
    (11, "qtheory_exactness"),
    (12, "trajectory_convergence_order"),
]


@pytest.mark.parametrize("number,name", CRITERIA, ids=[name for _, name in CRITERIA])
def test_acceptance_criterion(number, name):
    result = CHECKS[name]()
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} criterion {number:2d} {name}: {json.dumps(result.details, sort_keys=True)}")
    assert result.passed, f"criterion {number} ({name}) failed: {result.details}"

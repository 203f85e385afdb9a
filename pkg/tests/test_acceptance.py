"""End-to-end acceptance checks at their stated tolerances.

The monodromy sweep covers n = 3..6 with the canonical z (z_i = i) and five
seeded random z per n, i.e. the same draws as
``fiberscope fibration --n 3..6 --random 5 --seed 42`` plus the canonical
points. Run with ``pytest tests/test_acceptance.py -v`` to see one PASS/FAIL
line per criterion in the terminal summary.
"""

import time

import numpy as np
import pytest

from fiberscope.arrangement import canonical_z, random_z
from fiberscope.monodromy import (
    TrackerConfig,
    compose,
    cycle_type,
    expected_flip,
    fibration_report,
    identity,
)
from fiberscope.fiber import CUBE_ROOT_DIFF, CUBE_ROOT_Z1, INFINITY, ZERO
from fiberscope.suites import (
    Tolerances,
    boundary_suite,
    determinant_suite,
    jacobian_suite,
    maps_suite,
)

NS = [3, 4, 5, 6]
SEED = 42
RANDOM_PER_N = 5
GENUS = {3: 4, 4: 13, 5: 37, 6: 97}
PUNCTURES = {3: 6, 4: 12, 5: 24, 6: 48}


def sweep_points():
    out = []
    for n in NS:
        out.append((n, canonical_z(n)))
        rng = np.random.default_rng([SEED, n, 0])
        out += [(n, random_z(rng, n)) for _ in range(RANDOM_PER_N)]
    return out


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    reports = [fibration_report(z, TrackerConfig(), check_halving=True) for _, z in sweep_points()]
    return reports, time.perf_counter() - t0


@pytest.fixture(scope="module")
def zs_by_n():
    grouped = {n: [] for n in NS}
    for n, z in sweep_points():
        grouped[n].append(z)
    return grouped


def describe(rep):
    return f"n={rep.n} z={np.round(rep.z, 4).tolist()}"


@pytest.mark.criterion(1, "genus equals (3n-6)2^(n-3)+1 for n=3..6 (sweep < 60 s)")
def test_genus(sweep):
    reports, seconds = sweep
    assert len(reports) == len(NS) * (1 + RANDOM_PER_N)
    for rep in reports:
        assert rep.genus_numeric == rep.genus_formula == GENUS[rep.n], describe(rep)
    print(f"sweep of {len(reports)} fibers took {seconds:.1f} s")
    assert seconds < 60


@pytest.mark.criterion(2, "puncture count equals 3*2^(n-2)")
def test_punctures(sweep):
    for rep in sweep[0]:
        assert rep.punctures_numeric == rep.punctures_formula == PUNCTURES[rep.n], describe(rep)


@pytest.mark.criterion(3, "one orbit: every fiber is connected")
def test_connectivity(sweep):
    for rep in sweep[0]:
        assert rep.orbit_count == 1, describe(rep)


@pytest.mark.criterion(4, "ramification profiles: finite and zero are 2^(n-2) transpositions, infinity trivial")
def test_ramification_profiles(sweep):
    for rep in sweep[0]:
        half = 2 ** (rep.n - 2)
        kinds = [p.branch.kind for p in rep.profiles]
        assert sum(k in (CUBE_ROOT_Z1, CUBE_ROOT_DIFF) for k in kinds) == 3 * (rep.n - 1)
        for prof in rep.profiles:
            if prof.branch.kind == INFINITY:
                assert prof.cycle_type == (1,) * 2 * half, describe(rep)
            else:
                assert prof.cycle_type == (2,) * half, (describe(rep), prof.branch.label)


@pytest.mark.criterion(5, "sign flips: cube roots of z1 flip e_n, of z1-z_i flip e_i, zero flips all")
def test_sign_flips(sweep):
    for rep in sweep[0]:
        for b, perm in rep.generators:
            assert perm == expected_flip(rep.n, b), (describe(rep), b.label)
            if b.kind == ZERO:
                assert cycle_type(perm) == (2,) * 2 ** (rep.n - 2)


@pytest.mark.criterion(6, "Jacobian ranks and boundary kernel dimensions, gap >= 1e6")
def test_jacobians(zs_by_n):
    suite = jacobian_suite(NS, zs_by_n, seed=SEED, samples=1000, tol=Tolerances())
    failed = [c for c in suite.cases if not c["pass"]]
    assert not failed, failed
    m1 = [c for c in suite.cases if c["name"].startswith("M1")]
    assert all(c["samples"] >= 1000 for c in m1)
    assert {c["name"] for c in m1 if c["n"] == 6} == {
        "M1 generic", "M1 y_n=0", "M1 y_2=0", "M1 y_3=0", "M1 y_4=0", "M1 y_5=0"}
    kernels = [c for c in suite.cases if c["name"] == "boundary kernels"]
    assert len(kernels) == sum(len(v) for v in zs_by_n.values())
    assert all(c["min_gap"] >= 1e6 for c in kernels)


@pytest.mark.criterion(7, "structured determinant vs elimination, rel. error <= 1e-9, 10^4 draws per n")
def test_determinant():
    suite = determinant_suite(seed=SEED, draws=10_000)
    failed = [c for c in suite.cases if not c["pass"]]
    assert not failed, failed
    assert suite.cases[0]["closed_form"] == 14 and abs(suite.cases[0]["oracle"] - 14) < 1e-12
    assert {(c["n"], c["i"]) for c in suite.cases[1:]} == {
        (n, i) for n in range(4, 13) for i in range(2, n)}
    assert all(c["max_relative_error"] <= 1e-9 for c in suite.cases[1:])


@pytest.mark.criterion(8, "boundary points, chart residuals <= 1e-12, approach paths <= 1e-10 and convergent")
def test_boundary(zs_by_n):
    suite = boundary_suite(NS, zs_by_n, seed=SEED, tol=Tolerances())
    failed = [c for c in suite.cases if not c["pass"]]
    assert not failed, failed
    for c in suite.cases:
        if c["name"] == "enumeration":
            assert c["b1"] == 2 ** (c["n"] - 1) and c["b2"] == 2 ** (c["n"] - 2)
            assert c["max_residual"] <= 1e-12
        if c["name"] == "approach paths":
            assert c["max_chart_residual"] <= 1e-10


@pytest.mark.criterion(9, "map chain round trips <= 1e-12 and exp transport on 10^4 samples")
def test_map_chain():
    suite = maps_suite(NS, seed=SEED, samples=10_000, tol=Tolerances())
    failed = [c for c in suite.cases if not c["pass"]]
    assert not failed, failed
    for name in ("cone bijection", "moebius N->P", "exp membership transport"):
        assert sum(c["samples"] for c in suite.cases if c["name"] == name) == 10_000


@pytest.mark.criterion(10, "product relation, infinity agreement, step-halving invariance")
def test_internal_consistency(sweep):
    for rep in sweep[0]:
        assert rep.product_relation and rep.infinity_agrees and rep.halving_agrees, describe(rep)
        assert rep.max_residual <= 1e-10
        by_label = {b.label: p for b, p in rep.generators}
        prod = identity(rep.degree)
        for label in rep.loop_order:
            prod = compose(prod, by_label[label])
        (inf,) = [p for b, p in rep.generators if b.kind == INFINITY]
        assert inf == identity(rep.degree)
        assert compose(prod, inf) == identity(rep.degree)

import math

import numpy as np
import pytest
import scipy.sparse as sp

from _oracle import gauss_solve
from msdg.assembly import SolveConfig, assemble_global
from msdg.basis import SpaceKind
from msdg.coefficients import constant_field, sin_plus_2
from msdg.linsolve import (
    DENSE_LIMIT,
    Factorization,
    SingularSystemError,
    condition_estimate,
    hager_higham_inverse_norm1,
    solve,
)
from msdg.mesh import uniform_partition
from msdg.trace import TraceParams


def system(label="E2", N=10, eps=0.005, f=None, alpha=0.0):
    f = sin_plus_2() if f is None else f
    cfg = SolveConfig(uniform_partition(0, 1, N), SpaceKind.parse(label), eps, f, TraceParams(alpha, alpha))
    return assemble_global(cfg)


def test_one_by_one():
    x = solve(sp.csr_matrix([[2.0]]), np.array([4 + 2j]))
    assert x[0] == 2 + 1j


def test_permutation():
    perm = np.array([2, 0, 3, 1])
    P = sp.csr_matrix((np.ones(4), (np.arange(4), perm)), shape=(4, 4))
    b = np.array([1, 2j, 3, 4 - 1j])
    x = solve(P, b)
    np.testing.assert_array_equal(x[perm], b)


@pytest.mark.parametrize("label,alpha", [("E1", 1.0), ("T3", 0.0), ("E3", 0.5)])
def test_matches_gaussian_elimination(label, alpha):
    s = system(label, 4, eps=0.05, alpha=alpha)
    ref = gauss_solve(s.matrix.toarray(), s.rhs)
    assert np.abs(solve(s) - ref).max() <= 1e-12 * np.abs(ref).max()


@pytest.mark.parametrize("label,N", [("E1", 200), ("T5", 80), ("E2", 640)])
def test_residual_bound(label, N):
    s = system(label, N, alpha=1.0)
    x = solve(s)
    r = s.matrix @ x - s.rhs
    A_inf = abs(s.matrix).sum(axis=1).max()
    assert np.abs(r).max() <= 1e-10 * (A_inf * np.abs(x).max() + np.abs(s.rhs).max())


def test_identity_and_diagonal_condition():
    eye = sp.identity(7, dtype=complex, format="csr")
    for method in ("dense", "onenorm"):
        assert condition_estimate(eye, method).value == pytest.approx(1.0)
    rep = condition_estimate(sp.diags([2.0, 0.5]).tocsr(), "dense")
    assert rep.value == pytest.approx(4.0)
    assert rep.method == "dense_2norm" and rep.dimension == 2 and not rep.singular


def test_auto_method_choice():
    assert condition_estimate(system("E1", 20)).method == "dense_2norm"
    assert condition_estimate(system("E1", 600)).method == "onenorm_estimate"
    with pytest.raises(ValueError):
        condition_estimate(system("E1", 20), "frobenius")


def test_dense_guard():
    n = DENSE_LIMIT + 2
    with pytest.raises(ValueError):
        condition_estimate(sp.identity(n, format="csr"), "dense")


@pytest.mark.parametrize("n", [5, 50])
def test_hager_higham_exact_on_small(n):
    rng = np.random.default_rng(n)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    inv = np.linalg.inv(A)
    exact = np.abs(inv).sum(axis=0).max()
    est = hager_higham_inverse_norm1(lambda v: inv @ v, lambda v: inv.conj().T @ v, n)
    assert exact / 3 <= est <= exact * (1 + 1e-12)


@pytest.mark.parametrize("label,N,alpha", [("E1", 30, 0.0), ("E1", 80, 0.0), ("T3", 40, 1.0), ("E2", 25, 0.1)])
def test_norm_equivalence(label, N, alpha):
    s = system(label, N, alpha=alpha)
    d = condition_estimate(s, "dense").value
    o = condition_estimate(s, "onenorm").value
    n = s.size
    assert d / n <= o <= d * n
    assert d >= 1 - 1e-12 and o >= 1 - 1e-12


def test_resonance_condition_spike():
    # E1, eps=0.005, alternating fluxes: conditioning at N=30 dwarfs N=80
    c30 = condition_estimate(system("E1", 30), "dense").value
    c80 = condition_estimate(system("E1", 80), "dense").value
    assert c30 >= 100 * c80


def test_determinism():
    s = system("T5", 120, alpha=0.5)
    x1, x2 = solve(s), solve(system("T5", 120, alpha=0.5))
    assert x1.tobytes() == x2.tobytes()
    c1 = condition_estimate(s, "onenorm").value
    assert c1 == condition_estimate(s, "onenorm").value


def test_singular_detection():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    fac = Factorization(A)
    assert fac.singular
    with pytest.raises(SingularSystemError):
        solve(A, np.ones(2))
    rep = condition_estimate(A, "onenorm", factor=fac)
    assert rep.singular and math.isinf(rep.value)
    assert math.isinf(condition_estimate(A, "dense").value)


def test_near_singular_pivot_reported():
    A = sp.csr_matrix(np.diag([1.0, 1.0, 1e-18]))
    fac = Factorization(A)
    assert fac.singular
    with pytest.raises(SingularSystemError) as info:
        fac.check()
    assert info.value.pivot == pytest.approx(1e-18)


def test_constant_case_well_posed():
    s = system("E1", 10, f=constant_field(10.0))
    assert not Factorization(s.matrix).singular

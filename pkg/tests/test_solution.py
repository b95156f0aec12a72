import math

import numpy as np
import pytest

from msdg.assembly import SolveConfig, assemble_global, element_data, plane_wave_coefficients
from msdg.basis import SpaceKind
from msdg.coefficients import constant_field, sin_plus_2
from msdg.linsolve import solve
from msdg.mesh import uniform_partition
from msdg.solution import (
    REFERENCE_SPACE,
    DGSolution,
    ReferenceMismatch,
    ReferenceSolution,
    cached_reference,
    eval_solution,
    exact_plane_wave,
    generate_reference,
    l2_error,
    l2_errors,
    load_reference,
    min_reference_elements,
    save_reference,
)
from msdg.trace import TraceParams, boundary_trace_left, boundary_trace_right


def config(label, N, eps=0.005, f=None, alpha=0.0, gamma=0.5):
    f = constant_field(10.0) if f is None else f
    return SolveConfig(uniform_partition(0, 1, N), SpaceKind.parse(label), eps, f, TraceParams(alpha, alpha, gamma))


def solved(cfg):
    return DGSolution.from_vector(cfg, solve(assemble_global(cfg)))


def test_single_element_member():
    cfg = config("E1", 1)
    u = np.array([[1.0, 0.0]])
    sol = DGSolution(cfg.mesh, cfg.space, cfg.eps, cfg.f, u, np.zeros_like(u))
    assert eval_solution(sol, 0.5) == (pytest.approx(1.0), 0)


def test_zero_solution():
    cfg = config("T3", 5)
    z = np.zeros((5, 4))
    sol = DGSolution(cfg.mesh, cfg.space, cfg.eps, cfg.f, z, z)
    u, q = eval_solution(sol, np.linspace(0, 1, 50))
    assert not np.any(u) and not np.any(q)
    with pytest.raises(ValueError):
        eval_solution(sol, 1.5)


@pytest.mark.parametrize("label", ["E1", "E3", "T5"])
def test_plane_wave_coefficients_evaluate(label):
    cfg = config(label, 13)
    sol = DGSolution.from_vector(cfg, plane_wave_coefficients(cfg, 10.0))
    x = np.random.default_rng(0).uniform(0, 1, 100)
    pw = exact_plane_wave(10.0, cfg.eps, 0.0)
    u, q = eval_solution(sol, x)
    np.testing.assert_allclose(u, pw.u_at(x), atol=1e-9)
    np.testing.assert_allclose(q, pw.q_at(x), atol=1e-9)


def test_vector_roundtrip_and_left_limit():
    cfg = config("E2", 4, f=sin_plus_2(), alpha=1.0)
    sol = solved(cfg)
    np.testing.assert_array_equal(DGSolution.from_vector(cfg, sol.to_vector()).to_vector(), sol.to_vector())
    # value at an interior breakpoint belongs to the left element
    x = cfg.mesh.breakpoints[1]
    phi = np.append(np.exp(1j * sol.k[0] * np.array([1, -1]) * (x - cfg.mesh.midpoints[0])), 1.0)
    left = sol.u[0] @ phi
    assert eval_solution(sol, x)[0] == pytest.approx(left)


def test_l2_identity_and_constant():
    cfg = config("E2", 7, f=sin_plus_2())
    sol = solved(cfg)
    assert l2_error(sol, sol) <= 1e-14
    z = DGSolution(cfg.mesh, cfg.space, cfg.eps, cfg.f, np.zeros((7, 3)), np.zeros((7, 3)))
    c = 0.3 - 0.4j
    assert l2_error(z, lambda x: np.full(np.shape(x), c)) == pytest.approx(abs(c), rel=1e-13)


def test_l2_symmetric_and_definite():
    cfg = config("T3", 9, f=sin_plus_2(), alpha=0.5)
    s1 = solved(cfg)
    rng = np.random.default_rng(1)
    s2 = DGSolution(cfg.mesh, cfg.space, cfg.eps, cfg.f,
                    s1.u + 1e-3 * rng.normal(size=s1.u.shape), s1.q)
    e12, e21 = l2_error(s1, s2), l2_error(s2, s1)
    assert e12 > 0
    assert e12 == pytest.approx(e21, rel=1e-12)


@pytest.mark.parametrize("label", ["E1", "E2", "E3", "T3", "T5"])
def test_example1_single_run(label):
    cfg = config(label, 10)
    err = l2_errors(solved(cfg), exact_plane_wave(10.0, cfg.eps, 0.0), ("u", "q"))
    assert err["u"] <= 1e-8
    assert err["q"] <= 1e-7


def test_plane_wave_properties():
    f0, eps, a = 10.0, 0.005, 0.25
    pw = exact_plane_wave(f0, eps, a)
    x = np.linspace(a, a + 1, 1001)
    np.testing.assert_allclose(np.abs(pw.u_at(x)), 1.0, rtol=0, atol=1e-15)
    r = math.sqrt(f0)
    assert pw.q_at(a) + 1j * r * pw.u_at(a) == pytest.approx(2j * r)
    # -eps^2 u'' - f0 u = 0 with u'' = -k^2 u
    assert abs(-(eps**2) * (-(pw.k**2)) * pw.u_at(0.7) - f0 * pw.u_at(0.7)) < 1e-12
    with pytest.raises(ValueError):
        exact_plane_wave(0.0, eps, a)


@pytest.mark.parametrize("gamma", [0.05, 0.5, 0.95])
def test_traces_reproduce_exact_data(gamma):
    f0, eps = 10.0, 0.01
    pw = exact_plane_wave(f0, eps, 0.0)
    ua, qa = complex(pw.u_at(0.0)), complex(pw.q_at(0.0))
    t = boundary_trace_left(ua, qa, f0, gamma)
    assert t.u_hat == pytest.approx(ua, abs=1e-14) and t.q_hat == pytest.approx(qa, abs=1e-14)
    ub, qb = complex(pw.u_at(1.0)), complex(pw.q_at(1.0))
    t = boundary_trace_right(ub, qb, f0, gamma)
    assert t.u_hat == pytest.approx(ub, abs=1e-14) and t.q_hat == pytest.approx(qb, abs=1e-14)


def test_reference_precondition():
    need = min_reference_elements(sin_plus_2(), 0.005)
    assert need == math.ceil(20 * math.sqrt(max(np.sin(np.linspace(0, 1, 20001)) + 2)) / (2 * math.pi * 0.005))
    with pytest.raises(ValueError):
        generate_reference(sin_plus_2(), 0.005, need - 1)


@pytest.fixture(scope="module")
def small_ref():
    return generate_reference(sin_plus_2(), 0.05, 2000)


def test_reference_metadata(small_ref):
    m = small_ref.metadata
    assert m["space"] == REFERENCE_SPACE.label == "P3"
    assert (m["alpha"], m["beta"], m["gamma"]) == (0.0, 0.0, 0.5)
    assert m["N_ref"] == 2000 and m["eps"] == 0.05 and m["f"] == sin_plus_2().descriptor
    small_ref.require(sin_plus_2(), 0.05)
    with pytest.raises(ReferenceMismatch):
        small_ref.require(sin_plus_2(), 0.005)
    with pytest.raises(ReferenceMismatch):
        small_ref.require(constant_field(10.0), 0.05)


def test_save_load_roundtrip(small_ref, tmp_path):
    path = tmp_path / "r.msdgref"
    save_reference(small_ref, path)
    back = load_reference(path, sin_plus_2(), 0.05)
    assert back.metadata == small_ref.metadata
    assert back.solution.to_vector().tobytes() == small_ref.solution.to_vector().tobytes()
    with pytest.raises(ReferenceMismatch):
        load_reference(path, eps=0.001)
    with pytest.raises(ReferenceMismatch):
        load_reference(path, f=constant_field(10.0))


def test_corrupted_files_rejected(small_ref, tmp_path):
    path = tmp_path / "r.msdgref"
    save_reference(small_ref, path)
    raw = path.read_bytes()
    (tmp_path / "short").write_bytes(raw[:-16])
    with pytest.raises(ReferenceMismatch):
        load_reference(tmp_path / "short")
    (tmp_path / "magic").write_bytes(b"X" + raw[1:])
    with pytest.raises(ReferenceMismatch):
        load_reference(tmp_path / "magic")
    stale = raw.replace(b"msdg-reference-1", b"msdg-reference-0")
    (tmp_path / "stale").write_bytes(stale)
    with pytest.raises(ReferenceMismatch):
        load_reference(tmp_path / "stale")


def test_cache_reuses_file(tmp_path):
    r1 = cached_reference(tmp_path, sin_plus_2(), 0.05, N_ref=2000)
    files = sorted(p.name for p in tmp_path.iterdir() if p.suffix == ".msdgref")
    assert len(files) == 1
    r2 = cached_reference(tmp_path, sin_plus_2(), 0.05, N_ref=2000)
    assert r2.solution.to_vector().tobytes() == r1.solution.to_vector().tobytes()


def test_constant_reference_matches_plane_wave():
    ref = generate_reference(constant_field(10.0), 0.02, 5000)
    assert l2_error(ref.solution, exact_plane_wave(10.0, 0.02, 0.0)) <= 1e-8


@pytest.mark.slow
def test_reference_quadrature_insensitive(ref_sinp2_005):
    """Rebuilding the reference with four extra nodes per element moves errors by < 1%."""
    f = sin_plus_2()
    cfg = SolveConfig(uniform_partition(0, 1, ref_sinp2_005.metadata["N_ref"]), REFERENCE_SPACE, 0.005, f)
    sys = assemble_global(cfg, data=element_data(cfg, extra=4))
    alt = ReferenceSolution(ref_sinp2_005.metadata, DGSolution.from_vector(cfg, solve(sys)))
    del sys
    for N in (5, 30, 80, 320, 640):
        sol = solved(config("E1", N, f=f, alpha=1.0))
        e1, e2 = l2_error(sol, ref_sinp2_005), l2_error(sol, alt)
        assert abs(e1 - e2) <= 0.01 * e1, (N, e1, e2)

import numpy as np
import pytest

from discwalk.linalg import orthonormalize
from discwalk.sampler import (
    SubspaceBasis,
    _direction_from_signs,
    build_subspace,
    draw_direction,
    draw_directions,
    projection_fallback_direction,
    solve_subisotropic,
    verify_subisotropic,
)


def random_subspace(h, dim, seed):
    rng = np.random.default_rng(seed)
    basis = orthonormalize([rng.standard_normal(h) for _ in range(dim)])
    return SubspaceBasis(dim=h, basis=basis, declared_count=dim)


class TestBuildSubspace:
    def test_empty(self):
        basis = build_subspace([], [], [], np.zeros(8))
        assert basis.rank == 0
        assert basis.declared_count == 1  # the coloring itself

    def test_blocked_plus_coloring(self):
        e1 = np.array([1.0, 0, 0, 0])
        e2 = np.array([0.0, 1, 0, 0])
        basis = build_subspace([e1], [], [], e2)
        assert basis.rank == 2
        span = basis.basis @ basis.basis.T
        np.testing.assert_allclose(span @ e1, e1, atol=1e-12)
        np.testing.assert_allclose(span @ e2, e2, atol=1e-12)

    def test_cap_arithmetic_at_110(self):
        # 3*floor(110/10) + 2*floor(110/11) + 1 = 54 <= 55.
        h = 110
        rng = np.random.default_rng(0)
        blocked = [rng.standard_normal(h) for _ in range(33)]
        dang = [rng.standard_normal(h) for _ in range(10)]
        safe = [rng.standard_normal(h) for _ in range(10)]
        basis = build_subspace(blocked, dang, safe, rng.standard_normal(h))
        assert basis.declared_count == 54
        assert basis.rank <= h // 2

    def test_cap_violation_errors(self):
        h = 20
        rng = np.random.default_rng(1)
        blocked = [rng.standard_normal(h) for _ in range(7)]  # cap is 6
        with pytest.raises(ValueError, match="cap"):
            build_subspace(blocked, [], [], np.zeros(h))
        family = [rng.standard_normal(h) for _ in range(2)]  # cap is 1
        with pytest.raises(ValueError, match="cap"):
            build_subspace([], family, [], np.zeros(h))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            build_subspace([np.ones(3)], [], [], np.zeros(4))


class TestSolveSubisotropic:
    def test_axis_subspace_h2(self):
        w = SubspaceBasis(2, np.array([[1.0], [0.0]]), 1)
        plan = solve_subisotropic(w)
        np.testing.assert_allclose(plan.u, np.diag([0.0, 1.0]), atol=1e-9)
        assert plan.trace >= 0.5 - 1e-6

    def test_empty_subspace_identity(self):
        w = SubspaceBasis(4, np.zeros((4, 0)), 0)
        plan = solve_subisotropic(w)
        np.testing.assert_allclose(plan.u, np.eye(4), atol=1e-9)

    def test_infeasible_parameters(self):
        w = random_subspace(16, 10, seed=2)  # dim 10 > h/2
        with pytest.raises(ValueError, match="infeasible"):
            solve_subisotropic(w)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_verifier_passes_random_halfspace(self, seed):
        w = random_subspace(48, 24, seed=seed)
        plan = solve_subisotropic(w)
        report = verify_subisotropic(plan.u, w, plan.kappa, plan.eta)
        assert report["ok"], report

    def test_verifier_rejects_bad_matrix(self):
        w = random_subspace(12, 6, seed=5)
        u = np.eye(12)  # does not vanish on W
        report = verify_subisotropic(u, w, 0.25, 0.25)
        assert not report["ok"]
        assert report["w_residual"] > 1e-3


class TestDrawDirection:
    def test_unit_norm_and_orthogonality(self):
        w = random_subspace(32, 12, seed=7)
        plan = solve_subisotropic(w)
        rng = np.random.default_rng(0)
        for _ in range(16):
            v = draw_direction(plan, rng)
            assert abs(np.linalg.norm(v) - 1.0) <= 1e-10
            assert np.abs(w.basis.T @ v).max() <= 1e-7

    def test_single_direction_plan(self):
        w = SubspaceBasis(2, np.array([[1.0], [0.0]]), 1)
        plan = solve_subisotropic(w)
        v = draw_direction(plan, np.random.default_rng(0))
        np.testing.assert_allclose(np.abs(v), [0.0, 1.0], atol=1e-9)

    def test_sign_flip_symmetry(self):
        w = random_subspace(16, 5, seed=9)
        plan = solve_subisotropic(w)
        signs = np.sign(np.random.default_rng(1).standard_normal(
            plan.sqrt_factor.shape[1]
        ))
        v_pos = _direction_from_signs(plan, signs)
        v_neg = _direction_from_signs(plan, -signs)
        np.testing.assert_allclose(v_pos, -v_neg, atol=1e-14)

    def test_identity_plan_covariance(self):
        # Monte-Carlo estimate against the closed form E[vv^T] = U / Tr(U).
        h = 16
        w = SubspaceBasis(h, np.zeros((h, 0)), 0)
        plan = solve_subisotropic(w)
        draws = draw_directions(plan, np.random.default_rng(3), 100_000)
        cov = draws @ draws.T / draws.shape[1]
        assert np.abs(cov - np.eye(h) / h).max() <= 5.0 / np.sqrt(100_000)


class TestProjectionFallback:
    def test_orthogonal_complement_line(self):
        w = SubspaceBasis(2, np.array([[1.0], [0.0]]), 1)
        v = projection_fallback_direction(w, np.random.default_rng(0))
        np.testing.assert_allclose(np.abs(v), [0.0, 1.0], atol=1e-12)

    def test_empty_subspace_uniform(self):
        w = SubspaceBasis(3, np.zeros((3, 0)), 0)
        rng = np.random.default_rng(1)
        draws = np.stack([projection_fallback_direction(w, rng)
                          for _ in range(4000)])
        np.testing.assert_allclose(np.linalg.norm(draws, axis=1), 1.0,
                                   atol=1e-12)
        # rotational symmetry: mean close to zero
        assert np.abs(draws.mean(axis=0)).max() < 0.05

    def test_halfspace_covariance(self):
        # E[vv^T] should vanish on W and be ~ 1/(h - dim W) on the complement.
        h, d = 8, 4
        w = random_subspace(h, d, seed=11)
        rng = np.random.default_rng(2)
        draws = np.stack([projection_fallback_direction(w, rng)
                          for _ in range(100_000)])
        cov = draws.T @ draws / draws.shape[0]
        on_w = w.basis.T @ cov @ w.basis
        assert np.abs(on_w).max() <= 1e-6
        proj = np.eye(h) - w.basis @ w.basis.T
        assert np.abs(cov - proj / (h - d)).max() <= 5.0 / np.sqrt(100_000)

    def test_full_span_errors(self):
        w = SubspaceBasis(2, np.eye(2), 2)
        with pytest.raises(ValueError):
            projection_fallback_direction(w, np.random.default_rng(0))

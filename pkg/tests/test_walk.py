import math

import numpy as np
import pytest

from discwalk.instance import SetSystem, canonicalize, gen_random_regular
from discwalk.walk import (
    TELEMETRY_HEADER,
    WalkConfig,
    barrier_rate,
    column_weights,
    compute_potential,
    compute_slack,
    init_walk,
    refresh_alive,
    resolve_params,
    run_walk,
    select_blocking,
    telemetry_meta,
    write_telemetry,
)


def small_instance(n=48, k=4, seed=3):
    return canonicalize(gen_random_regular(n, n, k, seed=seed))


@pytest.fixture(scope="module")
def walked():
    """One short healthy run shared by the read-only assertions."""
    inst = small_instance()
    cfg = WalkConfig(seed=5, svd_mode="exact")
    x, records, status = run_walk(inst, cfg)
    return inst, cfg, x, records, status


class TestInitWalk:
    def test_initial_state(self):
        inst = small_instance()
        cfg = WalkConfig(seed=0)
        state = init_walk(inst, cfg)
        p = state.params
        assert np.all(state.x == 0.0)
        assert state.b == p.b0
        assert state.slacks.min() >= p.b0 / 2 - 1e-12
        assert state.slacks.max() <= p.b0 + 1e-12
        pots = state.potentials
        assert pots.min() >= math.exp(p.lam) - 1e-6
        assert pots.max() <= math.exp(2 * p.lam) + 1e-6

    def test_zero_support_row(self):
        # A row with no entries keeps the full slack b0 and potential e^lam.
        s = SetSystem.from_entries(4, 2, 2, [0, 0, 1, 1], [0, 1, 0, 1],
                                   [1, 1, -1, -1])
        inst = canonicalize(s)
        cfg = WalkConfig(seed=0)
        state = init_walk(inst, cfg)
        p = state.params
        empty = np.flatnonzero(state.row_support_total == 0)
        if empty.size:
            np.testing.assert_allclose(state.slacks[empty], p.b0)
            np.testing.assert_allclose(
                state.potentials[empty], math.exp(p.lam), rtol=1e-12
            )

    def test_support_exactly_10k_hits_half_b0(self):
        # One input row with 20 degree-1 entries becomes a canonical row of
        # support 10k (k doubles to 2): slack b0 - beta*10k = b0/2 exactly.
        s = SetSystem.from_entries(
            1, 20, 1, [0] * 20, list(range(20)), [1] * 20
        )
        inst = canonicalize(s)
        state = init_walk(inst, WalkConfig(seed=0))
        p = state.params
        target = np.flatnonzero(
            (state.row_support_total == 10 * p.k) & ~state.large
        )
        assert target.size >= 2  # the row and its negation
        np.testing.assert_allclose(state.slacks[target], p.b0 / 2)

    def test_large_row_pinned(self):
        rows, cols, signs = [], [], []
        n_cols = 60  # support 60 > 10k after k doubles to 4
        for j in range(n_cols):  # one huge row plus a diagonal
            rows.append(0)
            cols.append(j)
            signs.append(1)
            rows.append(1 + j)
            cols.append(j)
            signs.append(1)
        s = SetSystem.from_entries(n_cols + 1, n_cols, 2, rows, cols, signs)
        inst = canonicalize(s)
        state = init_walk(inst, WalkConfig(seed=0))
        p = state.params
        assert state.large.any()
        np.testing.assert_allclose(state.slacks[state.large], p.b0 / 2)


class TestSlackAndPotential:
    def test_compute_slack_matches_vectorized(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=1))
        for i in range(0, inst.n, 7):
            assert compute_slack(state, i) == pytest.approx(state.slacks[i])

    def test_fully_colored_support_drops_energy(self):
        s = SetSystem.from_entries(2, 2, 1, [0, 1], [0, 1], [1, -1])
        inst = canonicalize(s)
        state = init_walk(inst, WalkConfig(seed=0))
        state.x[:] = 1.0  # energy term vanishes at |x_j| = 1
        i = 0
        expected = state.b - float((state.A.getrow(i) @ state.x)[0])
        assert compute_slack(state, i) == pytest.approx(expected)

    def test_potential_at_b0(self):
        inst = small_instance()
        p = resolve_params(inst, WalkConfig(seed=0))
        assert compute_potential(p.b0, p) == pytest.approx(math.exp(p.lam))

    def test_potential_boundary_third(self):
        inst = small_instance()
        p = resolve_params(inst, WalkConfig(seed=0))
        assert compute_potential(p.b0 / 3, p) == pytest.approx(
            math.exp(3 * p.lam), rel=1e-12
        )

    def test_potential_simple_mode(self):
        inst = small_instance()
        p = resolve_params(inst, WalkConfig(seed=0, potential_mode="simple"))
        assert compute_potential(p.b0, p) == pytest.approx(math.e)

    def test_dead_slack_raises(self):
        inst = small_instance()
        p = resolve_params(inst, WalkConfig(seed=0))
        with pytest.raises(ValueError):
            compute_potential(0.0, p)

    def test_exponent_capped(self):
        inst = small_instance()
        p = resolve_params(inst, WalkConfig(seed=0))
        assert compute_potential(1e-9, p) == pytest.approx(math.exp(700))


class TestBarrierRate:
    def test_frozen_is_zero(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=0))
        state.n_t = state.params.n_freeze - 1
        assert barrier_rate(state) == 0.0

    def test_halving_doubles(self):
        inst = small_instance()
        p = resolve_params(inst, WalkConfig(seed=0))
        lo = p.barrier_rate(2 * p.n_freeze)
        hi = p.barrier_rate(4 * p.n_freeze)
        assert lo == pytest.approx(2 * hi)

    def test_total_motion_bound(self, walked):
        # Independent quadrature of the rate over the worst-case alive decay.
        inst, cfg, x, records, status = walked
        p = resolve_params(inst, cfg)
        dt = cfg.dt
        total = 0.0
        t = 0.0
        while t < p.n:
            n_t = max(p.n - t - 1, p.n_freeze)
            total += p.barrier_rate(int(math.ceil(n_t))) * dt
            t += dt
        closed_form = (
            p.ct_const * p.lam * p.k / p.b0
            * (1 + math.log(p.n / p.n_freeze)) * 1.05
        )
        assert status.b_final - p.b0 <= total + 1e-9
        assert total <= closed_form


class TestSelectBlocking:
    def test_all_safe_on_fresh_state(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=0, svd_mode="exact"))
        refresh_alive(state)
        plan = select_blocking(state)
        assert plan.dang_rows.size == 0
        assert plan.dang_singular.shape[1] == 0
        assert plan.sigma_dang == 0.0

    def test_tie_break_prefers_lower_index(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=0, svd_mode="exact"))
        refresh_alive(state)
        plan = select_blocking(state)
        picks = plan.rule_rows["top_potential"]
        pots = state.potentials[picks]
        # stable selection: among equal potentials, indices ascend
        for a, b in zip(picks[:-1], picks[1:]):
            if state.potentials[a] == state.potentials[b]:
                assert a < b

    def test_submitted_count_within_half(self, walked):
        inst, cfg, x, records, status = walked
        state = init_walk(inst, cfg)
        refresh_alive(state)
        plan = select_blocking(state)
        n_t = plan.n_t
        submitted = (
            plan.rule_rows["large"].size
            + plan.rule_rows["top_potential"].size
            + plan.rule_rows["dang_support"].size
            + plan.dang_singular.shape[1]
            + plan.safe_singular.shape[1]
            + 1
        )
        assert submitted <= n_t // 2

    def test_entry_bound(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=2, svd_mode="exact"))
        refresh_alive(state)
        plan = select_blocking(state)
        vecs = plan.blocked_vectors
        p = state.params
        if vecs.size:
            assert np.abs(vecs).max() <= 1.0 + 2 * p.beta + 1e-12


class TestRunWalk:
    def test_norm_growth_exact(self, walked):
        _, _, _, _, status = walked
        assert status.norm_err_step_max <= 1e-10
        assert status.norm_err_cum <= 1e-6 * (1 + status.steps * 0.25)

    def test_healthy_run_discrepancy_below_barrier(self, walked):
        inst, cfg, x, records, status = walked
        assert status.status == "healthy"
        dots = inst.system.matrix @ x
        assert dots.max() < status.b_final

    def test_barrier_monotone(self, walked):
        _, _, _, records, _ = walked
        bs = [r.b_t for r in records]
        assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(bs, bs[1:]))

    def test_alive_floor(self, walked):
        inst, _, _, records, _ = walked
        n = inst.n
        for r in records:
            assert r.n_t >= n - r.t - 1 - 1e-9

    def test_determinism(self):
        inst = small_instance(n=32, k=3, seed=9)
        cfg = WalkConfig(seed=11, svd_mode="exact")
        runs = [run_walk(inst, cfg) for _ in range(2)]
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        rows_a = [r.csv_row() for r in runs[0][1]]
        rows_b = [r.csv_row() for r in runs[1][1]]
        assert rows_a == rows_b
        assert runs[0][2].status == runs[1][2].status

    def test_zero_degree_instance(self):
        # All-zero matrix: the walk still colors everything and the barrier
        # never moves.
        s = SetSystem.from_entries(3, 3, 0, [], [], [])
        inst = canonicalize(s)
        cfg = WalkConfig(seed=1, n_freeze=2)
        x, records, status = run_walk(inst, cfg)
        assert status.status == "healthy"
        assert status.b_final == pytest.approx(resolve_params(inst, cfg).b0)

    def test_large_row_dot_stays_zero_early(self):
        # While a row is large it is blocked, so its running sum stays at 0
        # (exactly, before any clamping can occur).
        n_cols = 60  # big row support stays > 10k for the first rebuilds
        rows, cols, signs = [], [], []
        for j in range(n_cols):
            rows += [0, 1 + j]
            cols += [j, j]
            signs += [1, 1]
        s = SetSystem.from_entries(n_cols + 1, n_cols, 2, rows, cols, signs)
        inst = canonicalize(s)
        cfg = WalkConfig(seed=3, svd_mode="exact", batch_steps=4)
        state = init_walk(inst, cfg)
        assert state.large.any()
        from discwalk.sampler import build_subspace
        from discwalk.walk import step

        refresh_alive(state)
        plan = select_blocking(state)
        basis = build_subspace(
            [c for c in plan.blocked_vectors.T],
            [c for c in plan.dang_singular.T],
            [c for c in plan.safe_singular.T],
            state.x[plan.alive_cols],
        )
        rng = np.random.default_rng(0)
        q = basis.basis
        large_before = np.flatnonzero(state.large)
        for _ in range(4):
            g = rng.standard_normal(plan.n_t)
            g -= q @ (q.T @ g)
            g -= q @ (q.T @ g)
            xa = state.x[plan.alive_cols]
            g -= xa * (xa @ g) / max(xa @ xa, 1e-300)
            v = g / np.linalg.norm(g)
            step(state, plan, v)
        dots = state.A @ state.x
        assert np.abs(dots[large_before]).max() <= 1e-9

    def test_simple_mode_runs(self):
        inst = small_instance(n=32, k=3, seed=7)
        cfg = WalkConfig(seed=2, potential_mode="simple", svd_mode="exact")
        x, records, status = run_walk(inst, cfg)
        assert status.status == "healthy"
        assert status.norm_err_step_max <= 1e-10


class TestColumnWeights:
    def test_initial_bound(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=0))
        refresh_alive(state)
        w = column_weights(state)
        p = state.params
        assert w.max() <= p.k * math.exp(2 * p.lam) + 1e-6

    def test_truncation_binds(self):
        inst = small_instance()
        state = init_walk(inst, WalkConfig(seed=0))
        p = state.params
        state.potentials = np.full(inst.n, 10 * p.trunc)
        refreshed = column_weights(state)
        assert refreshed.max() <= p.k * p.trunc + 1e-9

    def test_empty_column_zero(self):
        # Zero-degree instance: every column weight is an empty sum.
        s = SetSystem.from_entries(3, 3, 0, [], [], [])
        inst = canonicalize(s)
        state = init_walk(inst, WalkConfig(seed=0, n_freeze=2))
        refresh_alive(state)
        w = column_weights(state)
        np.testing.assert_array_equal(w, np.zeros(inst.n))


class TestTelemetry:
    def test_header_and_rows(self, tmp_path, walked):
        inst, cfg, x, records, status = walked
        path = tmp_path / "tel.csv"
        write_telemetry(path, records, resolve_params(inst, cfg), cfg)
        lines = path.read_text().splitlines()
        meta = [ln for ln in lines if ln.startswith("#")]
        assert any(ln.startswith("# n=") for ln in meta)
        header_idx = len(meta)
        assert lines[header_idx] == TELEMETRY_HEADER
        assert len(lines) == header_idx + 1 + len(records)
        first = lines[header_idx + 1].split(",")
        assert len(first) == len(TELEMETRY_HEADER.split(","))

    def test_meta_contains_envelope_inputs(self):
        inst = small_instance()
        cfg = WalkConfig(seed=0)
        meta = telemetry_meta(resolve_params(inst, cfg), cfg)
        keys = {ln.split("=")[0][2:] for ln in meta}
        assert {"n", "k", "lambda", "b0", "n_freeze", "guard"} <= keys

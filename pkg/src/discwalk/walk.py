"""Barrier-potential coloring walk on canonical set systems.

The walk maintains a fractional coloring x in [-1,1]^n, a rising barrier b,
and per-row slacks s_i = b - <a_i, x> - beta * energy_i (rows with more than
10k alive entries are pinned at s_i = b0/2 and blocked).  Each row carries a
potential exp(scale * b0 / s_i) that blows up as the row approaches the
barrier.  Every batch of micro-steps the walk rebuilds a forbidden subspace
from the blocked rows, the top right singular vectors of the safe/dangerous
row matrices, and the coloring itself, then steps along random unit
directions orthogonal to that subspace.  When few columns remain alive the
walk freezes and hands the remainder to the rounding finisher.

Telemetry is recorded at every rebuild, and the quantities the analysis
relies on (singular-value checkpoints, column weights, slack floors,
potential guard) are monitored as runtime checks; violations are counted,
never silently repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .instance import CanonicalInstance
from .linalg import sketched_top_right_singular, top_right_singular
from .sampler import (
    SolverFailure,
    SubIsotropicPlan,
    SubspaceBasis,
    build_subspace,
    draw_direction,
    solve_subisotropic,
)

TELEMETRY_FIELDS = (
    "t", "n_t", "b_t", "c_t", "phi_total", "phi_max", "s_min", "w_max",
    "sigma_dang", "sigma_safe", "n_dang", "dang_support_max", "guard_tripped",
)
TELEMETRY_HEADER = ",".join(TELEMETRY_FIELDS)

EXPONENT_CAP = 700.0
LARGE_ROW_FACTOR = 10  # a row is large while it has > 10k alive entries

# Defaults below are the committed tuned values; see README for the
# measurement they were tuned against.
DEFAULT_LAMBDA_CONST = 3.0
DEFAULT_B0_CONST = 2.0
DEFAULT_CT_CONST = 1.0
EXACT_SVD_LIMIT = 192  # smaller side above this -> sketched SVD


@dataclass
class WalkConfig:
    lambda_const: float = DEFAULT_LAMBDA_CONST
    b0_const: float = DEFAULT_B0_CONST
    ct_const: float = DEFAULT_CT_CONST
    dt: float = 0.25
    batch_steps: int = 8
    n_freeze: int | None = None  # None: max(16, ceil(ln^2 n))
    sampler_mode: str = "projection"  # projection | sdp
    potential_mode: str = "full"  # full | simple
    potential_guard: float = 10.0
    strict: bool = False
    seed: int = 0
    svd_mode: str = "auto"  # auto | exact | sketch
    # Rebuild cadence scales with the alive count (batch_steps * n_t/512) so
    # per-run cost stays near-linear; per-batch coloring movement remains
    # small against the slack scale, and the invariant monitors would flag
    # any damage.  Set False to rebuild every batch_steps micro-steps flat.
    adaptive_batch: bool = True

    def validate(self) -> None:
        if min(self.lambda_const, self.b0_const, self.ct_const) <= 0:
            raise ValueError("walk constants must be positive")
        if not 0 < self.dt <= 1:
            raise ValueError("dt must be in (0, 1]")
        if self.batch_steps < 1:
            raise ValueError("batch_steps must be >= 1")
        if self.n_freeze is not None and self.n_freeze < 2:
            raise ValueError("n_freeze must be >= 2")
        if self.sampler_mode not in ("projection", "sdp"):
            raise ValueError(f"unknown sampler_mode {self.sampler_mode!r}")
        if self.potential_mode not in ("full", "simple"):
            raise ValueError(f"unknown potential_mode {self.potential_mode!r}")
        if self.potential_guard <= 0:
            raise ValueError("potential_guard must be positive")
        if self.svd_mode not in ("auto", "exact", "sketch"):
            raise ValueError(f"unknown svd_mode {self.svd_mode!r}")


@dataclass(frozen=True)
class WalkParams:
    """Instance-resolved parameters of a run."""

    n: int
    k: int
    lam: float        # C * ln ln n
    pot_scale: float  # exponent scale: lam in full mode, 1 in simple mode
    b0: float
    beta: float
    n_freeze: int
    dt: float
    ct_const: float
    mode: str
    guard: float

    @property
    def trunc(self) -> float:
        """Potential value at the safe/dangerous boundary, e^{3*scale}."""
        return math.exp(3.0 * self.pot_scale)

    @property
    def phi0_row(self) -> float:
        """Initial per-row potential convention e^{2*scale}."""
        return math.exp(2.0 * self.pot_scale)

    @property
    def guard_limit(self) -> float:
        return self.guard * self.n * self.phi0_row

    def barrier_rate(self, n_t: int) -> float:
        if n_t < self.n_freeze or self.k == 0:
            return 0.0
        log_n = math.log(max(self.n, 2))
        if self.mode == "simple":
            return self.ct_const * self.k * log_n ** 2 / (self.b0 * n_t)
        return self.ct_const * self.lam * self.k / (self.b0 * n_t * log_n)


def resolve_params(inst: CanonicalInstance, cfg: WalkConfig) -> WalkParams:
    cfg.validate()
    n, k = inst.n, inst.k
    lam = cfg.lambda_const * math.log(math.log(max(n, 3)))
    lam = max(lam, 1e-9)
    k_eff = max(k, 1)
    b0 = cfg.b0_const * math.sqrt(lam * k_eff)
    beta = b0 / (20.0 * k_eff) if cfg.potential_mode == "full" else 0.0
    if cfg.n_freeze is not None:
        n_freeze = cfg.n_freeze
    else:
        n_freeze = max(16, math.ceil(math.log(max(n, 2)) ** 2))
    pot_scale = lam if cfg.potential_mode == "full" else 1.0
    return WalkParams(
        n=n, k=k, lam=lam, pot_scale=pot_scale, b0=b0, beta=beta,
        n_freeze=n_freeze, dt=cfg.dt, ct_const=cfg.ct_const,
        mode=cfg.potential_mode, guard=cfg.potential_guard,
    )


@dataclass
class WalkState:
    instance: CanonicalInstance
    cfg: WalkConfig
    params: WalkParams
    A: sp.csr_matrix
    absA: sp.csr_matrix
    A_csc: sp.csc_matrix
    absA_csc: sp.csc_matrix
    row_support_total: np.ndarray
    rng: np.random.Generator
    x: np.ndarray
    t: float
    b: float
    alive: np.ndarray
    n_t: int
    alive_support: np.ndarray
    large: np.ndarray
    slacks: np.ndarray
    potentials: np.ndarray
    phi_total: float
    guard_tripped: bool = False
    failed: bool = False
    aborted: bool = False
    fail_reason: str = ""
    dead_row: int = -1
    violations: int = 0
    violation_counts: dict = field(default_factory=dict)
    overflow_rows: int = 0
    clamp_norm_loss: float = 0.0
    clamp_l1: float = 0.0
    step_count: int = 0
    rebuilds: int = 0
    norm_err_step_max: float = 0.0


@dataclass
class BlockingPlan:
    alive_cols: np.ndarray
    n_t: int
    c_t: float
    blocked_rows: np.ndarray
    rule_rows: dict
    blocked_vectors: np.ndarray  # (n_t, count) columns
    dang_rows: np.ndarray
    safe_rows: np.ndarray
    dang_singular: np.ndarray  # (n_t, q) columns
    safe_singular: np.ndarray
    sigma_dang: float
    sigma_safe: float
    dang_support_max: int
    w_max: float
    basis: SubspaceBasis | None = None
    sub_plan: SubIsotropicPlan | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class StepRecord:
    t: float
    n_t: int
    b_t: float
    c_t: float
    phi_total: float
    phi_max: float
    s_min: float
    w_max: float
    sigma_dang: float
    sigma_safe: float
    n_dang: int
    dang_support_max: int
    guard_tripped: bool
    extras: dict = field(default_factory=dict)

    def csv_row(self) -> str:
        vals = [
            repr(float(self.t)), str(self.n_t), repr(float(self.b_t)),
            repr(float(self.c_t)), repr(float(self.phi_total)),
            repr(float(self.phi_max)), repr(float(self.s_min)),
            repr(float(self.w_max)), repr(float(self.sigma_dang)),
            repr(float(self.sigma_safe)), str(self.n_dang),
            str(self.dang_support_max), str(int(self.guard_tripped)),
        ]
        return ",".join(vals)


@dataclass
class RunStatus:
    status: str  # healthy | failed | aborted
    guard_tripped: bool
    violations: int
    b_final: float
    violation_detail: dict = field(default_factory=dict)
    message: str = ""
    dead_row: int = -1
    steps: int = 0
    rebuilds: int = 0
    norm_err_step_max: float = 0.0
    norm_err_cum: float = 0.0
    clamp_norm_loss: float = 0.0

    @property
    def healthy(self) -> bool:
        return self.status == "healthy"



def _flag(state: "WalkState", name: str) -> None:
    """Record a monitored-invariant violation; never repairs, only counts."""
    state.violations += 1
    state.violation_counts[name] = state.violation_counts.get(name, 0) + 1

def compute_potential(s: float, params: WalkParams) -> float:
    """Row potential exp(scale * b0 / s); the exponent is capped at 700."""
    if s <= 0:
        raise ValueError(f"dead slack {s}")
    return math.exp(min(params.pot_scale * params.b0 / s, EXPONENT_CAP))


def compute_slack(state: WalkState, i: int) -> float:
    """Slack of one row from the definition (the vectorized refresh mirrors
    this; the energy sum ranges over all columns, dead ones included)."""
    p = state.params
    if state.large[i]:
        return p.b0 / 2.0
    lo, hi = state.A.indptr[i], state.A.indptr[i + 1]
    idx, vals = state.A.indices[lo:hi], state.A.data[lo:hi]
    dot = float(vals @ state.x[idx])
    if p.beta:
        energy = float(idx.size - (state.x[idx] ** 2).sum())
        return state.b - dot - p.beta * energy
    return state.b - dot


def _refresh_slacks(state: WalkState) -> None:
    p = state.params
    dots = state.A @ state.x
    if p.beta:
        energy = state.row_support_total - state.absA @ (state.x ** 2)
        slacks = state.b - dots - p.beta * energy
    else:
        slacks = state.b - dots
    if state.large.any():
        slacks[state.large] = p.b0 / 2.0
    state.slacks = slacks
    if slacks.size and slacks.min() <= 0.0 and not state.failed:
        state.failed = True
        state.dead_row = int(np.argmin(slacks))
        state.fail_reason = (
            f"slack died on row {state.dead_row}: {slacks.min():.4g}"
        )
    expo = p.pot_scale * p.b0 / np.maximum(slacks, 1e-300)
    expo = np.where(slacks <= 0.0, EXPONENT_CAP, expo)
    over = expo >= EXPONENT_CAP
    state.overflow_rows = int(over.sum())
    state.potentials = np.exp(np.minimum(expo, EXPONENT_CAP))
    state.phi_total = float(state.potentials.sum())
    if state.phi_total > p.guard_limit:
        state.guard_tripped = True


def refresh_alive(state: WalkState) -> None:
    """Rebuild-boundary refresh: alive set, row statuses, then slacks.

    Between rebuilds the alive set is frozen (clamped coordinates leave it
    here), so statuses and n_t change only at this point.
    """
    p = state.params
    threshold = 1.0 - 1.0 / (2.0 * p.n)
    alive = np.abs(state.x) <= threshold
    state.alive = alive
    state.n_t = int(alive.sum())
    # Per-row alive support via one sparse matvec on the 0/1 pattern.
    state.alive_support = np.rint(
        state.absA @ alive.astype(np.float64)
    ).astype(np.int64)
    was_large = state.large
    now_large = state.alive_support > LARGE_ROW_FACTOR * p.k
    if (now_large & ~was_large).any():
        # Alive supports only shrink, so rows never become large again.
        _flag(state, "large_regrew")
    state.large = now_large & was_large
    transitioned = was_large & ~state.large
    _refresh_slacks(state)
    if transitioned.any():
        # A freshly small row kept <a_i, x> = 0 while blocked, so its slack
        # can only jump up from b0/2 (up to clamp adjustments).
        floor = p.b0 / 2.0 - state.clamp_l1 - 1e-9
        if state.slacks[transitioned].min() < floor:
            _flag(state, "slack_jump")


def init_walk(inst: CanonicalInstance, cfg: WalkConfig,
              rng: np.random.Generator | None = None) -> WalkState:
    """Zero coloring, barrier at b0, all slacks in [b0/2, b0]."""
    params = resolve_params(inst, cfg)
    a = inst.system.matrix.astype(np.float64).tocsr()
    abs_a = sp.csr_matrix(
        (np.abs(a.data), a.indices, a.indptr), shape=a.shape
    )
    n = inst.n
    state = WalkState(
        instance=inst, cfg=cfg, params=params,
        A=a, absA=abs_a, A_csc=a.tocsc(), absA_csc=abs_a.tocsc(),
        row_support_total=np.diff(a.indptr).astype(np.float64),
        rng=rng if rng is not None else np.random.default_rng(cfg.seed),
        x=np.zeros(n), t=0.0, b=params.b0,
        alive=np.ones(n, dtype=bool), n_t=n,
        alive_support=np.diff(a.indptr).astype(np.int64),
        large=np.zeros(n, dtype=bool),
        slacks=np.zeros(n), potentials=np.zeros(n), phi_total=0.0,
    )
    state.large = state.alive_support > LARGE_ROW_FACTOR * params.k
    _refresh_slacks(state)
    if state.slacks.size:
        lo, hi = state.slacks.min(), state.slacks.max()
        if lo < params.b0 / 2.0 - 1e-9 or hi > params.b0 + 1e-9:
            raise AssertionError(
                f"initial slacks outside [b0/2, b0]: [{lo:.4g}, {hi:.4g}]"
            )
    return state


def barrier_rate(state: WalkState) -> float:
    return state.params.barrier_rate(state.n_t)


def column_weights(state: WalkState) -> np.ndarray:
    """W_j = sum over the column's rows of potentials truncated at e^{3*scale},
    for alive columns j (in alive-index order)."""
    trunc = np.minimum(state.potentials, state.params.trunc)
    w_all = state.absA_csc.T @ trunc
    return w_all[state.alive]


def _dedup_span_rows(mat: sp.csr_matrix, row_ids: np.ndarray) -> np.ndarray:
    """Drop rows whose vector (up to sign) already appeared; keeps the span.

    Canonical instances carry a_i and -a_i with identical supports, so
    negation pairs of large rows are span-duplicates that would force the
    slow rank-revealing orthonormalization path every rebuild.
    """
    kept = []
    seen = set()
    for i in row_ids:
        lo, hi = mat.indptr[i], mat.indptr[i + 1]
        idx = mat.indices[lo:hi].tobytes()
        data = mat.data[lo:hi]
        key = (idx, data.tobytes())
        neg_key = (idx, (-data).tobytes())
        if key in seen or neg_key in seen:
            continue
        seen.add(key)
        kept.append(i)
    return np.asarray(kept, dtype=np.int64)


def _top_singular(state: WalkState, mat: sp.csr_matrix, request: int):
    if min(mat.shape) == 0 or request == 0:
        return np.zeros(0), np.zeros((mat.shape[1], 0))
    mode = state.cfg.svd_mode
    use_exact = mode == "exact" or (
        mode == "auto" and min(mat.shape) <= EXACT_SVD_LIMIT
    )
    if use_exact:
        dense = mat.toarray()
        count = min(request, *dense.shape)
        return top_right_singular(dense, count)
    return sketched_top_right_singular(mat, request, state.rng)


def select_blocking(state: WalkState) -> BlockingPlan:
    """Assemble the blocking plan at a rebuild.

    Rules: every large row contributes its alive-restricted row vector; the
    floor(n_t/10) small rows of largest potential and the floor(n_t/10)
    dangerous rows of largest alive support contribute their slack-gradient
    rows (2*beta*e_i - a_i); the top floor(n_t/11) right singular vectors of
    the dangerous and safe row matrices are blocked wholesale.  Ties break
    toward lower row index.
    """
    p = state.params
    alive_idx = np.flatnonzero(state.alive)
    n_t = alive_idx.size
    if n_t != state.n_t:
        raise AssertionError("select_blocking needs a fresh refresh_alive")
    x_alive = state.x[alive_idx]
    a_alive = state.A_csc[:, alive_idx].tocsr()
    if p.beta:
        abs_alive = state.absA_csc[:, alive_idx].tocsr()
        e_mat = (abs_alive @ sp.diags(2.0 * p.beta * x_alive)) - a_alive
    else:
        e_mat = (-a_alive).tocsr()
    max_entry = np.abs(e_mat.data).max(initial=0.0)
    if max_entry > 1.0 + 2.0 * p.beta + 1e-9:
        _flag(state, "entry_bound")

    n_rows = state.A.shape[0]
    small = ~state.large
    dang = state.slacks < p.b0 / 3.0
    if p.mode == "full":
        # Classification consistency: potential side must agree with slack side.
        pot_side = state.potentials > p.trunc * (1.0 + 1e-12)
        boundary = np.abs(state.slacks - p.b0 / 3.0) < 1e-9 * p.b0
        if (pot_side != dang)[~boundary].any():
            _flag(state, "classification")
    if (dang & state.large).any():  # large rows sit at b0/2, always safe
        _flag(state, "large_dangerous")
        dang &= ~state.large

    cap_rows = n_t // 10
    large_rows = np.flatnonzero(state.large)
    small_rows = np.flatnonzero(small)
    q_pot = min(cap_rows, small_rows.size)
    if q_pot:
        order = np.argsort(-state.potentials[small_rows], kind="stable")
        top_pot_rows = small_rows[order[:q_pot]]
    else:
        top_pot_rows = np.zeros(0, dtype=np.int64)
    dang_rows = np.flatnonzero(dang)
    q_sup = min(cap_rows, dang_rows.size)
    if q_sup:
        order = np.argsort(-state.alive_support[dang_rows], kind="stable")
        big_dang_rows = dang_rows[order[:q_sup]]
    else:
        big_dang_rows = np.zeros(0, dtype=np.int64)

    blocked = np.unique(np.concatenate([large_rows, top_pot_rows, big_dang_rows]))

    # Singular families; sigma checkpoint is the value at index ceil(n_t/11).
    q_family = n_t // 11
    checkpoint = -(-n_t // 11)
    safe_rows_idx = np.flatnonzero(~dang)
    families = {}
    sigmas = {}
    for name, rows_idx in (("dang", dang_rows), ("safe", safe_rows_idx)):
        sub = e_mat[rows_idx]
        request = min(checkpoint, sub.shape[0], n_t)
        svals, vecs = _top_singular(state, sub, request)
        rank = int((svals > 1e-12 * svals.max(initial=0.0)).sum())
        families[name] = vecs[:, : min(q_family, rank)]
        sigmas[name] = float(svals[checkpoint - 1]) if svals.size >= checkpoint else 0.0
        bound = math.sqrt(20.0 * max(p.k, 1)) * (1.0 + 2.0 * p.beta)
        if sigmas[name] > bound + 1e-9:
            _flag(state, "sigma")

    # Tiny alive sets (n_freeze < 12) can push the submitted count past
    # floor(n_t/2); trim the singular families, safe first.
    budget = n_t // 2 - 1 - (large_rows.size + q_pot + q_sup)
    if families["dang"].shape[1] + families["safe"].shape[1] > budget:
        keep_safe = max(0, min(families["safe"].shape[1], budget - families["dang"].shape[1]))
        keep_dang = max(0, min(families["dang"].shape[1], budget))
        families["dang"] = families["dang"][:, :keep_dang]
        families["safe"] = families["safe"][:, :keep_safe]

    w_alive = column_weights(state)
    w_max = float(w_alive.max(initial=0.0))
    unblocked_dang = np.setdiff1d(dang_rows, blocked, assume_unique=False)
    dang_support_max = int(state.alive_support[unblocked_dang].max(initial=0))
    if dang_support_max > 10.0 * w_max / p.trunc + 1e-6:
        _flag(state, "dang_support")
    if not state.guard_tripped:
        floor = p.pot_scale * p.b0 / (
            2.0 * p.pot_scale + math.log(100.0 * p.n / n_t)
        )
        unblocked = np.setdiff1d(np.arange(n_rows), blocked, assume_unique=False)
        if unblocked.size and state.slacks[unblocked].min() < floor - 1e-9:
            _flag(state, "slack_floor")
    if state.n_t < p.n - state.t - 1 - 1e-9:
        _flag(state, "nt_floor")

    # Submit each distinct direction once: negation pairs of large rows span
    # the same line, and a row picked by both potential and support rules
    # contributes one vector.
    vec_cols = []
    if large_rows.size:
        keep = _dedup_span_rows(a_alive, large_rows)
        vec_cols.append(a_alive[keep].toarray().T)
    gradient_rows = np.unique(np.concatenate([top_pot_rows, big_dang_rows]))
    if gradient_rows.size:
        gradient_rows = _dedup_span_rows(e_mat, gradient_rows)
        vec_cols.append(e_mat[gradient_rows].toarray().T)
    blocked_vectors = (
        np.concatenate(vec_cols, axis=1) if vec_cols else np.zeros((n_t, 0))
    )

    return BlockingPlan(
        alive_cols=alive_idx, n_t=n_t, c_t=p.barrier_rate(n_t),
        blocked_rows=blocked,
        rule_rows={
            "large": large_rows, "top_potential": top_pot_rows,
            "dang_support": big_dang_rows,
        },
        blocked_vectors=blocked_vectors,
        dang_rows=dang_rows, safe_rows=safe_rows_idx,
        dang_singular=families["dang"], safe_singular=families["safe"],
        sigma_dang=sigmas["dang"], sigma_safe=sigmas["safe"],
        dang_support_max=dang_support_max, w_max=w_max,
    )


def step(state: WalkState, plan: BlockingPlan, v: np.ndarray,
         cfg: WalkConfig | None = None) -> WalkState:
    """One micro-step: x += v*sqrt(dt) on alive coordinates (clamped into
    [-1,1]), barrier += c_t*dt, then slacks and potentials are refreshed."""
    p = state.params
    alive_idx = plan.alive_cols
    x_alive = state.x[alive_idx]
    vnorm2 = float(v @ v)
    xv = float(x_alive @ v)
    if abs(vnorm2 - 1.0) > 1e-9 or abs(xv) > 1e-7:
        raise ValueError(
            f"direction precondition violated: |v|^2={vnorm2:.12f}, <x,v>={xv:.3e}"
        )
    sq = math.sqrt(p.dt)
    growth_err = abs(2.0 * sq * xv + p.dt * (vnorm2 - 1.0))
    state.norm_err_step_max = max(state.norm_err_step_max, growth_err)
    new_vals = x_alive + sq * v
    over = np.abs(new_vals) > 1.0
    if over.any():
        pre = new_vals[over]
        state.clamp_norm_loss += float((pre ** 2 - 1.0).sum())
        state.clamp_l1 += float((np.abs(pre) - 1.0).sum())
        new_vals[over] = np.sign(pre)
    state.x[alive_idx] = new_vals
    state.b += plan.c_t * p.dt
    state.t += p.dt
    state.step_count += 1
    _refresh_slacks(state)
    if state.guard_tripped and state.cfg.strict and not state.aborted:
        state.aborted = True
        state.fail_reason = "potential guard tripped under --strict"
    return state


def _make_record(state: WalkState, plan: BlockingPlan | None) -> StepRecord:
    p = state.params
    if plan is not None:
        n_t, c_t = plan.n_t, plan.c_t
        w_max, sd, ss = plan.w_max, plan.sigma_dang, plan.sigma_safe
        n_dang = int(plan.dang_rows.size)
        dmax = plan.dang_support_max
    else:
        n_t, c_t = state.n_t, 0.0
        w_alive = column_weights(state)
        w_max = float(w_alive.max(initial=0.0))
        sd = ss = 0.0
        dang = (state.slacks < p.b0 / 3.0) & ~state.large
        n_dang = int(dang.sum())
        dmax = int(state.alive_support[dang].max(initial=0))
    return StepRecord(
        t=state.t, n_t=n_t, b_t=state.b, c_t=c_t,
        phi_total=state.phi_total,
        phi_max=float(state.potentials.max(initial=0.0)),
        s_min=float(state.slacks.min(initial=np.inf)),
        w_max=w_max, sigma_dang=sd, sigma_safe=ss,
        n_dang=n_dang, dang_support_max=dmax,
        guard_tripped=state.guard_tripped,
    )


def _finish_status(state: WalkState) -> RunStatus:
    if state.failed:
        status = "failed"
    elif state.aborted:
        status = "aborted"
    else:
        status = "healthy"
    norm_cum = abs(
        float(state.x @ state.x) + state.clamp_norm_loss - state.t
    )
    return RunStatus(
        status=status, guard_tripped=state.guard_tripped,
        violations=state.violations, b_final=state.b,
        violation_detail=dict(state.violation_counts),
        message=state.fail_reason, dead_row=state.dead_row,
        steps=state.step_count, rebuilds=state.rebuilds,
        norm_err_step_max=state.norm_err_step_max,
        norm_err_cum=norm_cum, clamp_norm_loss=state.clamp_norm_loss,
    )


def run_walk(inst: CanonicalInstance, cfg: WalkConfig,
             rng: np.random.Generator | None = None):
    """Run the walk until freeze; returns (fractional coloring, step records,
    run status).  Deterministic given the seed/rng."""
    state = init_walk(inst, cfg, rng)
    p = state.params
    records: list[StepRecord] = []
    while True:
        refresh_alive(state)
        if state.failed or state.aborted:
            break
        if state.n_t <= p.n_freeze:
            break
        plan = select_blocking(state)
        state.rebuilds += 1
        basis = build_subspace(
            [col for col in plan.blocked_vectors.T],
            [col for col in plan.dang_singular.T],
            [col for col in plan.safe_singular.T],
            state.x[plan.alive_cols],
        )
        plan.basis = basis
        if cfg.sampler_mode == "sdp":
            try:
                plan.sub_plan = solve_subisotropic(basis)
            except SolverFailure as exc:
                state.failed = True
                state.fail_reason = f"sub-isotropic solve failed: {exc}"
                break
        records.append(_make_record(state, plan))

        n_t, r = plan.n_t, basis.rank
        base = cfg.batch_steps
        if cfg.adaptive_batch:
            base *= max(1, n_t // 512)
        batch = min(base, max(1, (n_t - r - 2) // 2))
        cap = min(n_t, r + 2 * batch + 2)
        qbuf = np.empty((n_t, cap))
        qbuf[:, :r] = basis.basis
        qcount = r

        def project_out(vec):
            for _ in range(2):
                vec = vec - qbuf[:, :qcount] @ (qbuf[:, :qcount].T @ vec)
            return vec

        stalled = False
        steps_before = state.step_count
        for _ in range(batch):
            xa = state.x[plan.alive_cols]
            rx = project_out(xa.copy())
            rx_norm = np.linalg.norm(rx)
            if rx_norm > 1e-11 * max(1.0, np.linalg.norm(xa)):
                if qcount >= cap:
                    stalled = True
                    break
                qbuf[:, qcount] = rx / rx_norm
                qcount += 1
            if plan.sub_plan is not None:
                v = project_out(draw_direction(plan.sub_plan, state.rng))
                nv = np.linalg.norm(v)
                if nv < 1e-8:
                    v = project_out(state.rng.standard_normal(n_t))
                    nv = np.linalg.norm(v)
            else:
                v = project_out(state.rng.standard_normal(n_t))
                nv = np.linalg.norm(v)
            if nv < 1e-10:
                stalled = True
                break
            v /= nv
            step(state, plan, v)
            if state.failed or state.aborted:
                break
            if qcount >= cap:
                break
            qbuf[:, qcount] = v
            qcount += 1
        if state.failed or state.aborted:
            break
        if stalled and state.step_count == steps_before:
            # No progress possible against this plan; stop rather than spin.
            state.failed = True
            state.fail_reason = "no direction available outside the blocked span"
            break
    records.append(_make_record(state, None))
    status = _finish_status(state)
    if status.healthy:
        dots = state.A @ state.x
        if dots.size and dots.max(initial=-np.inf) >= state.b:
            _flag(state, "final_disc")
            status.violations = state.violations
            status.violation_detail = dict(state.violation_counts)
    return state.x.copy(), records, status


def telemetry_meta(params: WalkParams, cfg: WalkConfig) -> list[str]:
    return [
        f"# n={params.n}",
        f"# k={params.k}",
        f"# lambda={params.lam!r}",
        f"# pot_scale={params.pot_scale!r}",
        f"# b0={params.b0!r}",
        f"# beta={params.beta!r}",
        f"# n_freeze={params.n_freeze}",
        f"# guard={params.guard!r}",
        f"# guard_limit={params.guard_limit!r}",
        f"# mode={params.mode}",
        f"# seed={cfg.seed}",
    ]


def write_telemetry(path, records, params: WalkParams, cfg: WalkConfig) -> None:
    lines = telemetry_meta(params, cfg)
    lines.append(TELEMETRY_HEADER)
    lines.extend(r.csv_row() for r in records)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_coloring(path, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for j, val in enumerate(x):
            fh.write(f"{j} {float(val)!r}\n")

"""Experiment orchestration and the command-line interface.

Subcommands: `gen` (write a random instance), `solve` (run one algorithm on
one instance), `bench` (grid of (n, k) cells x seeds x algorithms into a
results CSV), `verify` (invariant certification on live sampler plans and a
live walk), `oracle` (brute-force minimum discrepancy).  Exit codes: 0 on
success, 1 on run failure, 2 on usage errors.

Results are deterministic given seeds: the instance for a (n, k, seed) cell
is shared by all algorithms, and each algorithm draws from its own seeded
stream.  Only the runtime_ms column varies between identical reruns.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import beck_fiala, gram_schmidt_walk, random_coloring
from .instance import (
    InstanceError,
    SetSystem,
    brute_force_min_disc,
    canonicalize,
    discrepancy,
    gen_random_regular,
    parse_instance,
    write_instance,
)
from .rounding import round_full
from .sampler import (
    SolverFailure,
    draw_directions,
    solve_subisotropic,
    verify_subisotropic,
)
from .walk import (
    DEFAULT_B0_CONST,
    DEFAULT_CT_CONST,
    DEFAULT_LAMBDA_CONST,
    WalkConfig,
    resolve_params,
    run_walk,
    write_coloring,
    write_telemetry,
)

ALGORITHMS = ("walk", "walk-simple", "beckfiala", "gsw", "random")
RESULTS_FIELDS = (
    "alg", "n", "k", "seed", "disc", "b_final", "runtime_ms", "status",
    "guard_tripped", "violations",
)
RESULTS_HEADER = ",".join(RESULTS_FIELDS)

_INSTANCE_SALT = 0xD15C


@dataclass(frozen=True)
class ResultRow:
    alg: str
    n: int
    k: int
    seed: int
    disc: int
    b_final: float
    runtime_ms: float
    status: str
    guard_tripped: bool
    violations: int

    def csv_row(self) -> str:
        return ",".join([
            self.alg, str(self.n), str(self.k), str(self.seed),
            str(self.disc), repr(float(self.b_final)),
            repr(float(self.runtime_ms)), self.status,
            str(int(self.guard_tripped)), str(self.violations),
        ])


@dataclass
class ExperimentConfig:
    algs: tuple
    cells: tuple  # ((n, k), ...)
    seeds: tuple
    walk: WalkConfig = field(default_factory=WalkConfig)
    input_path: str | None = None
    out_path: str | None = None
    telemetry_dir: str | None = None
    workers: int = 1
    signed: bool = False

    def validate(self) -> None:
        if not self.cells or not self.seeds:
            raise ValueError("experiment grid and seeds must be nonempty")
        for alg in self.algs:
            if alg not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {alg!r}")


def instance_rng(n: int, k: int, seed: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([_INSTANCE_SALT, n, k, seed])
    )


def algorithm_rng(alg: str, n: int, k: int, seed: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([ALGORITHMS.index(alg), n, k, seed])
    )


def _load_cell_instance(cfg: ExperimentConfig, n: int, k: int,
                        seed: int) -> SetSystem:
    if cfg.input_path:
        return parse_instance(Path(cfg.input_path).read_text(encoding="utf-8"))
    gen_seed = instance_rng(n, k, seed).integers(0, 2 ** 62)
    return gen_random_regular(n, n, k, int(gen_seed), signed=cfg.signed)


def run_algorithm(alg: str, sys_: SetSystem, walk_cfg: WalkConfig, seed: int,
                  telemetry_path=None):
    """One (algorithm, instance, seed) run; returns (coloring on the original
    columns, b_final, status string, guard flag, violations)."""
    rng = algorithm_rng(alg, sys_.n_rows, sys_.k, seed)
    if alg in ("walk", "walk-simple"):
        mode = "simple" if alg == "walk-simple" else "full"
        cfg = replace(walk_cfg, potential_mode=mode, seed=seed)
        inst = canonicalize(sys_)
        x_frac, records, status = run_walk(inst, cfg, rng)
        if telemetry_path is not None:
            write_telemetry(
                telemetry_path, records, resolve_params(inst, cfg), cfg
            )
        x_full, _ = round_full(x_frac, inst, rng)
        coloring = x_full[: sys_.n_cols]
        return (coloring, status.b_final, status.status,
                status.guard_tripped, status.violations)
    if alg == "beckfiala":
        return beck_fiala(sys_), float("nan"), "healthy", False, 0
    if alg == "gsw":
        return gram_schmidt_walk(sys_, rng), float("nan"), "healthy", False, 0
    if alg == "random":
        return random_coloring(sys_.n_cols, rng), float("nan"), "healthy", False, 0
    raise ValueError(f"unknown algorithm {alg!r}")


def _run_task(args) -> ResultRow:
    cfg, alg, n, k, seed = args
    sys_ = _load_cell_instance(cfg, n, k, seed)
    telemetry_path = None
    if cfg.telemetry_dir and alg in ("walk", "walk-simple"):
        base = Path(cfg.telemetry_dir)
        base.mkdir(parents=True, exist_ok=True)
        telemetry_path = base / f"telemetry_{alg}_n{n}_k{k}_s{seed}.csv"
    start = time.perf_counter()
    coloring, b_final, status, guard, violations = run_algorithm(
        alg, sys_, cfg.walk, seed, telemetry_path
    )
    runtime_ms = (time.perf_counter() - start) * 1000.0
    disc = int(round(discrepancy(sys_, coloring)))
    return ResultRow(
        alg=alg, n=n, k=k, seed=seed, disc=disc, b_final=b_final,
        runtime_ms=runtime_ms, status=status, guard_tripped=guard,
        violations=violations,
    )


def run_experiment(cfg: ExperimentConfig) -> list:
    """All (cell, seed, algorithm) runs, merged in deterministic order
    regardless of worker completion order."""
    cfg.validate()
    tasks = [
        (cfg, alg, n, k, seed)
        for (n, k) in cfg.cells
        for seed in cfg.seeds
        for alg in cfg.algs
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]
    if cfg.out_path:
        write_results(cfg.out_path, rows)
    return rows


def write_results(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


# ---------------------------------------------------------------------------
# CLI


def _add_walk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sampler", choices=("projection", "sdp"),
                   default="projection")
    p.add_argument("--dt", type=float, default=0.25)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--lambda-const", dest="lambda_const", type=float,
                   default=DEFAULT_LAMBDA_CONST)
    p.add_argument("--b0-const", dest="b0_const", type=float,
                   default=DEFAULT_B0_CONST)
    p.add_argument("--ct-const", dest="ct_const", type=float,
                   default=DEFAULT_CT_CONST)
    p.add_argument("--freeze", type=int, default=None)
    p.add_argument("--guard", type=float, default=10.0)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--svd", choices=("auto", "exact", "sketch"), default="auto")


def _walk_config(ns: argparse.Namespace, seed: int = 0) -> WalkConfig:
    return WalkConfig(
        lambda_const=ns.lambda_const, b0_const=ns.b0_const,
        ct_const=ns.ct_const, dt=ns.dt, batch_steps=ns.batch,
        n_freeze=ns.freeze, sampler_mode=ns.sampler,
        potential_guard=ns.guard, strict=ns.strict, seed=seed,
        svd_mode=ns.svd,
    )


def _parse_int_list(text: str) -> tuple:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_seeds(text: str) -> tuple:
    vals = _parse_int_list(text)
    if len(vals) == 1 and "," not in text:
        return tuple(range(vals[0]))
    return vals


def _apply_config_file(argv: list) -> list:
    """key=value lines become leading flags, so explicit flags win (D22)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise InstanceError("--config needs a path")
    path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2:]
    injected = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InstanceError(f"config line is not key=value: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                injected.append(flag)
        else:
            injected.extend([flag, value])
    # Insert after the subcommand token.
    if rest:
        return rest[:1] + injected + rest[1:]
    return injected


def _cmd_gen(ns) -> int:
    sys_ = gen_random_regular(ns.n, ns.cols or ns.n, ns.k, ns.seed,
                              signed=ns.signed)
    text = write_instance(sys_)
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _load_instance_arg(ns) -> SetSystem:
    if ns.input:
        return parse_instance(Path(ns.input).read_text(encoding="utf-8"))
    if ns.n is None or ns.k is None:
        raise InstanceError("need --input or both --n and --k")
    gen_seed = int(instance_rng(ns.n, ns.k, ns.seed).integers(0, 2 ** 62))
    return gen_random_regular(ns.n, ns.n, ns.k, gen_seed)


def _cmd_solve(ns) -> int:
    sys_ = _load_instance_arg(ns)
    walk_cfg = _walk_config(ns, seed=ns.seed)
    start = time.perf_counter()
    coloring, b_final, status, guard, violations = run_algorithm(
        ns.alg, sys_, walk_cfg, ns.seed, ns.telemetry
    )
    runtime_ms = (time.perf_counter() - start) * 1000.0
    disc = discrepancy(sys_, coloring)
    if ns.out:
        write_coloring(ns.out, coloring)
    print(
        f"alg={ns.alg} n={sys_.n_rows} k={sys_.k} seed={ns.seed} "
        f"disc={disc:.0f} b_final={b_final:.4f} status={status} "
        f"guard_tripped={int(guard)} violations={violations} "
        f"runtime_ms={runtime_ms:.1f}"
    )
    return 0 if status == "healthy" else 1


def _cmd_bench(ns) -> int:
    cells = tuple((n, k) for n in _parse_int_list(ns.n) for k in _parse_int_list(ns.k))
    cfg = ExperimentConfig(
        algs=tuple(ns.algs.split(",")),
        cells=cells,
        seeds=_parse_seeds(ns.seeds),
        walk=_walk_config(ns),
        input_path=ns.input,
        out_path=ns.out,
        telemetry_dir=ns.telemetry_dir,
        workers=ns.workers,
    )
    rows = run_experiment(cfg)
    if not ns.out:
        print(RESULTS_HEADER)
        for row in rows:
            print(row.csv_row())
    failed = sum(1 for r in rows if r.status not in ("healthy",))
    print(f"# {len(rows)} runs, {failed} not healthy", file=sys.stderr)
    return 0


def _cmd_oracle(ns) -> int:
    sys_ = parse_instance(Path(ns.input).read_text(encoding="utf-8"))
    print(brute_force_min_disc(sys_))
    return 0


def _cmd_verify(ns) -> int:
    """Invariant certification: sampler plans on random subspaces, then a
    live walk with the SDP sampler and exact decompositions."""
    from .linalg import orthonormalize
    from .sampler import SubspaceBasis

    rng = np.random.default_rng(ns.seed)
    failures = []

    for trial in range(ns.plans):
        h = int(rng.choice((32, 48, 64)))
        raw = rng.standard_normal((h, h // 2))
        w_basis = orthonormalize([raw[:, i] for i in range(raw.shape[1])])
        w = SubspaceBasis(dim=h, basis=w_basis, declared_count=w_basis.shape[1])
        try:
            plan = solve_subisotropic(w)
        except SolverFailure as exc:
            failures.append(f"plan {trial}: solver stalled ({exc})")
            print(f"plan {trial}: FAIL (solver stalled)")
            continue
        report = verify_subisotropic(plan.u, w, plan.kappa, plan.eta)
        draws = draw_directions(plan, rng, 2000)
        diag = (draws ** 2).mean(axis=1)
        cov_ok = diag.max() <= 16.0 / h + 10.0 / np.sqrt(2000)
        ok = report["ok"] and cov_ok
        print(f"plan {trial}: {'PASS' if ok else 'FAIL'} "
              f"(h={h}, trace={report['trace']:.2f}, cov_max={diag.max():.4f})")
        if not ok:
            failures.append(f"plan {trial}: {report}")

    walk_cfg = WalkConfig(
        sampler_mode="sdp", svd_mode="exact", seed=ns.seed,
        b0_const=DEFAULT_B0_CONST, ct_const=DEFAULT_CT_CONST,
    )
    sys_ = gen_random_regular(ns.n, ns.n, ns.k, ns.seed)
    inst = canonicalize(sys_)
    x_frac, records, status = run_walk(inst, walk_cfg, np.random.default_rng(ns.seed))
    ok = status.status == "healthy" and status.violations == 0
    print(f"walk n={ns.n} k={ns.k}: {'PASS' if ok else 'FAIL'} "
          f"(status={status.status}, violations={status.violations}, "
          f"rebuilds={status.rebuilds}, b_final={status.b_final:.3f})")
    if not ok:
        failures.append(f"walk: {status}")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discwalk",
        description="Discrepancy walk benchmark: low-degree set systems, "
        "a barrier-potential coloring walk, and classical baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signed", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="run one algorithm on one instance")
    p.add_argument("--alg", choices=ALGORITHMS, default="walk")
    p.add_argument("--input", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--telemetry", default=None)
    _add_walk_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="grid benchmark into a results CSV")
    p.add_argument("--algs", default="walk,random")
    p.add_argument("--n", required=True, help="comma list, e.g. 256,512")
    p.add_argument("--k", required=True, help="comma list, e.g. 16,32")
    p.add_argument("--seeds", default="3",
                   help="count (e.g. 5) or comma list (e.g. 0,3,7)")
    p.add_argument("--input", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--telemetry-dir", dest="telemetry_dir", default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_walk_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("oracle", help="brute-force minimum discrepancy")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("verify", help="invariant certification suite")
    p.add_argument("--n", type=int, default=72)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plans", type=int, default=5)
    p.set_defaults(func=_cmd_verify)

    return parser


def cli_main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return ns.func(ns)
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, SolverFailure) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(cli_main())

"""Benchmark harness: problem generation, experiment execution, reporting.

An experiment is described by a flat key-value spec file (see
``load_experiment_spec``) naming a problem source, a list of
preconditioners, inner/outer solver settings, and an output path.  Each
(problem, preconditioner) cell is solved ``runs`` times from a zero start;
the table reports the mean iteration count and wall time, the final run's
relative residual, and the relative error against an independently
computed reference solution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, IlsolveError, ProblemAssumptionError
from .krylov import CgConfig, FgmresConfig, fgmres_solve
from .mmio import read_matrix_market
from .preconditioners import VARIANTS, make_preconditioner
from .problem import (
    IlsProblem,
    block_system_operator,
    build_rhs,
    compute_alpha,
    dense_blocks,
    exact_solution_oracle,
)
from .sparse import SparseMatrixCsr, normalize_to_unit_one_norm, rectangular_identity_csr

__all__ = [
    "ExperimentSpec",
    "TableRow",
    "generate_augmented_problem",
    "generate_hilbert_problem",
    "generate_random_problem",
    "hilbert_matrix",
    "reference_solution",
    "build_problem",
    "load_experiment_spec",
    "run_experiment",
    "report_write",
]


# ---------------------------------------------------------------------------
# Problem generators
# ---------------------------------------------------------------------------

def generate_augmented_problem(
    core: SparseMatrixCsr,
    q: int,
    scale: float = 6.0,
    rhs_policy: str = "ones",
) -> IlsProblem:
    """Augment a p x n matrix into an ILS instance: A1 = core,
    A2 = scale * I_{q x n} (rectangular identity pattern), all-ones right-
    hand side, and the default shift derived from A1."""
    if q < 1:
        raise ValueError("q must be at least 1")
    if rhs_policy != "ones":
        raise ValueError(f"unknown rhs policy {rhs_policy!r}")
    p, n = core.n_rows, core.n_cols
    a2 = rectangular_identity_csr(q, n, scale)
    return IlsProblem(
        core, a2, np.ones(p), np.ones(q), p, q, n, compute_alpha(core)
    )


def hilbert_matrix(n: int) -> np.ndarray:
    """H[i, j] = 1 / (i + j + 1) with 0-based indices."""
    idx = np.arange(n, dtype=np.float64)
    return 1.0 / (idx[:, None] + idx[None, :] + 1.0)


def generate_hilbert_problem(n: int, a2_scale: float = 0.7, cap: int = 2000) -> IlsProblem:
    """A1 is the (fully dense) n x n Hilbert matrix kept as a dense
    operand, A2 = a2_scale * I_n, all-ones right-hand side."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > cap:
        raise ConfigurationError(f"Hilbert generator capped at n = {cap}, got {n}")
    h = hilbert_matrix(n)
    a2 = rectangular_identity_csr(n, n, a2_scale)
    return IlsProblem(h, a2, np.ones(n), np.ones(n), n, n, n, compute_alpha(h))


def generate_random_problem(
    p: int,
    q: int,
    n: int,
    seed: int = 0,
    alpha_range: tuple[float, float] = (0.1, 0.5),
) -> IlsProblem:
    """Dense random instance engineered so the reduced normal matrix is
    SPD: A1 has singular values in [1, 2] (so the Gram spectrum sits in
    [1, 4]) and A2 is rescaled until its largest squared singular value is
    half the smallest Gram eigenvalue.  alpha is drawn uniformly from
    alpha_range.  p >= n is required so A1 can have full column rank."""
    if p < n:
        raise ValueError("p must be at least n for A1 to have full column rank")
    if min(p, q, n) < 1:
        raise ValueError("p, q, n must all be positive")
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((p, n)))
    vt, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sing = rng.uniform(1.0, 2.0, size=n)
    a1 = u @ (sing[:, None] * vt.T)
    a2 = rng.standard_normal((q, n))
    top = np.linalg.norm(a2, ord=2)
    a2 *= np.sqrt(0.5) / top  # largest eigenvalue of A2'A2 becomes 0.5
    alpha = float(rng.uniform(*alpha_range))
    b1 = rng.standard_normal(p)
    b2 = rng.standard_normal(q)
    return IlsProblem(a1, a2, b1, b2, p, q, n, alpha)


# ---------------------------------------------------------------------------
# Reference solution with indefinite fallback
# ---------------------------------------------------------------------------

def reference_solution(prob: IlsProblem, dense_cap: int = 4000):
    """Reference solution for error reporting.

    Uses the SPD oracle when the standing assumption holds.  Several of
    the classic benchmark constructions violate it (the reduced normal
    matrix is nonsingular but indefinite); those fall back to a dense
    symmetric-indefinite solve so the error column stays meaningful.
    Returns (x_star, note) where note is '' for the clean path.
    """
    try:
        return exact_solution_oracle(prob), ""
    except ProblemAssumptionError:
        if prob.n > dense_cap:
            raise
        a1d, a2d = dense_blocks(prob)
        normal = a1d.T @ a1d - a2d.T @ a2d
        rhs = a1d.T @ prob.b1 - a2d.T @ prob.b2
        x = np.linalg.solve(normal, rhs)
        return x, "reduced normal matrix indefinite; reference from dense LU solve"


# ---------------------------------------------------------------------------
# Experiment specification
# ---------------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    """One experiment: a problem source, preconditioner list, solver
    settings, and output destination."""

    problem: str                      # "matrix-market" | "hilbert" | "random"
    matrix: str | None = None         # path for matrix-market sources
    p: int | None = None
    q: int | None = None
    n: int | None = None
    a2_scale: float = 6.0
    normalize: bool = True
    hilbert_cap: int = 2000
    preconditioners: tuple[str, ...] = ("ibs1", "ibs2", "ibs3", "ibs4")
    inner: str = "cg"
    inner_tol: float = 1e-3
    inner_maxit: int = 1000
    outer_tol: float = 1e-8
    outer_maxit: int = 2000
    restart: int | None = None
    runs: int = 5
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.problem not in ("matrix-market", "hilbert", "random"):
            raise ValueError(f"unknown problem source {self.problem!r}")
        bad = [k for k in self.preconditioners if k.lower() not in VARIANTS]
        if bad:
            raise ValueError(f"unknown preconditioners {bad}; choose from {VARIANTS}")
        self.preconditioners = tuple(k.lower() for k in self.preconditioners)


_SPEC_KEYS = {
    "problem", "matrix", "p", "q", "n", "a2_scale", "normalize", "hilbert_cap",
    "preconditioners", "inner", "inner.tol", "inner.maxit",
    "outer.tol", "outer.maxit", "outer.restart", "runs", "seed", "out",
}


def load_experiment_spec(path) -> ExperimentSpec:
    """Parse the flat ``key = value`` spec format ('#' starts a comment).

    Keys: problem, matrix, p, q, n, a2_scale, normalize, hilbert_cap,
    preconditioners (comma separated), inner, inner.tol, inner.maxit,
    outer.tol, outer.maxit, outer.restart, runs, seed, out.
    """
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{line_no}: expected 'key = value', got {stripped!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key not in _SPEC_KEYS:
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
            raw[key] = value

    def get_int(key):
        return int(raw[key]) if key in raw else None

    spec = ExperimentSpec(
        problem=raw.get("problem", "matrix-market"),
        matrix=raw.get("matrix"),
        p=get_int("p"),
        q=get_int("q"),
        n=get_int("n"),
        a2_scale=float(raw.get("a2_scale", 6.0)),
        normalize=raw.get("normalize", "true").lower() in ("true", "1", "yes"),
        hilbert_cap=int(raw.get("hilbert_cap", 2000)),
        preconditioners=tuple(
            tok.strip() for tok in raw.get("preconditioners", "ibs1,ibs2,ibs3,ibs4").split(",") if tok.strip()
        ),
        inner=raw.get("inner", "cg"),
        inner_tol=float(raw.get("inner.tol", 1e-3)),
        inner_maxit=int(raw.get("inner.maxit", 1000)),
        outer_tol=float(raw.get("outer.tol", 1e-8)),
        outer_maxit=int(raw.get("outer.maxit", 2000)),
        restart=get_int("outer.restart"),
        runs=int(raw.get("runs", 5)),
        seed=int(raw.get("seed", 0)),
        out=raw.get("out"),
    )
    return spec


def build_problem(spec: ExperimentSpec) -> IlsProblem:
    """Materialize the problem a spec describes."""
    if spec.problem == "matrix-market":
        if not spec.matrix:
            raise ValueError("matrix-market source needs a 'matrix' path")
        core = read_matrix_market(spec.matrix)
        if spec.normalize:
            core = normalize_to_unit_one_norm(core)
        if spec.q is None:
            raise ValueError("matrix-market source needs 'q'")
        return generate_augmented_problem(core, spec.q, spec.a2_scale)
    if spec.problem == "hilbert":
        if spec.n is None:
            raise ValueError("hilbert source needs 'n'")
        return generate_hilbert_problem(spec.n, spec.a2_scale, cap=spec.hilbert_cap)
    if spec.p is None or spec.q is None or spec.n is None:
        raise ValueError("random source needs 'p', 'q', and 'n'")
    return generate_random_problem(spec.p, spec.q, spec.n, seed=spec.seed)


# ---------------------------------------------------------------------------
# Execution and reporting
# ---------------------------------------------------------------------------

@dataclass
class TableRow:
    """One benchmark cell.  Unconverged rows keep it/res/err as None
    (rendered as empty CSV cells)."""

    problem: str
    preconditioner: str
    it: float | None
    cpu: float
    res: float | None
    err: float | None
    converged: bool
    note: str = ""


def run_experiment(spec: ExperimentSpec, echo=None) -> list[TableRow]:
    """Run every (problem, preconditioner) cell of the experiment.

    The reference solution is computed once per problem (it does not
    depend on the run or the preconditioner).  ``echo``, when given, is
    called with each finished TableRow (the CLI uses this for progress).
    """
    prob = build_problem(spec)
    rhs = build_rhs(prob).data
    op = block_system_operator(prob)
    outer = FgmresConfig(
        rel_tolerance=spec.outer_tol, max_iterations=spec.outer_maxit, restart=spec.restart
    )
    inner_cfg = CgConfig(rel_tolerance=spec.inner_tol, max_iterations=spec.inner_maxit)

    ref_note = ""
    try:
        x_star, ref_note = reference_solution(prob)
    except IlsolveError as exc:
        x_star = None
        ref_note = f"reference solution unavailable: {exc}"
    x_star_norm = float(np.linalg.norm(x_star)) if x_star is not None else 0.0

    rows = []
    label = prob.label()
    for kind in spec.preconditioners:
        pre = make_preconditioner(kind, prob, inner=spec.inner, inner_config=inner_cfg)
        its, cpus = [], []
        last = None
        failure_note = ""
        for _ in range(spec.runs):
            pre.reset_stats()
            try:
                x, report = fgmres_solve(op, pre, rhs, config=outer)
            except IlsolveError as exc:
                failure_note = f"solver failure: {exc}"
                last = None
                break
            its.append(report.iterations)
            cpus.append(report.wall_seconds)
            last = (x, report)
        if last is None:
            rows.append(TableRow(label, kind, None, float(np.mean(cpus)) if cpus else 0.0,
                                 None, None, False, failure_note))
        else:
            x, report = last
            err = None
            if x_star is not None and x_star_norm > 0.0:
                x_k = x[prob.layout.sx]
                err = float(np.linalg.norm(x_k - x_star)) / x_star_norm
            note = ref_note
            if pre.inner_failures:
                extra = f"{pre.inner_failures} inner solves hit their cap"
                note = f"{note}; {extra}" if note else extra
            if report.converged:
                rows.append(TableRow(label, kind, float(np.mean(its)), float(np.mean(cpus)),
                                     report.final_res, err, True, note))
            else:
                dagger = f"no convergence in {report.iterations} iterations"
                note = f"{note}; {dagger}" if note else dagger
                rows.append(TableRow(label, kind, None, float(np.mean(cpus)), None, None, False, note))
        if echo is not None:
            echo(rows[-1])
    return rows


def _fmt_sci(x: float | None) -> str:
    return "" if x is None else f"{x:.2e}"


def _fmt_it(x: float | None) -> str:
    if x is None:
        return ""
    return str(int(round(x))) if abs(x - round(x)) < 1e-9 else f"{x:.1f}"


def report_write(rows: list[TableRow], fmt: str, path) -> None:
    """Write rows as CSV or JSON with a fixed column order.

    CSV renders res/err in scientific notation with three significant
    digits; JSON keeps full precision.
    """
    if not rows:
        raise ValueError("no rows to write")
    if fmt == "csv":
        lines = ["problem,preconditioner,IT,CPU,RES,ERR,converged"]
        for r in rows:
            lines.append(
                f"{r.problem},{r.preconditioner},{_fmt_it(r.it)},{r.cpu:.6g},"
                f"{_fmt_sci(r.res)},{_fmt_sci(r.err)},{str(r.converged).lower()}"
            )
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = [
            {
                "problem": r.problem,
                "preconditioner": r.preconditioner,
                "IT": r.it,
                "CPU": r.cpu,
                "RES": r.res,
                "ERR": r.err,
                "converged": r.converged,
                "note": r.note,
            }
            for r in rows
        ]
        with open(path, "w", encoding="ascii") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")

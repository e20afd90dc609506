"""Built-in benchmark generators with analytically known constants, the exact
batch-alignment analyzer for linear constraint systems, and a plain-text
instance format so other implementations can consume identical problems.

Every generated instance uses the objective f(x) = 0.5 * |x - x_c|^2 with the
pull center x_c placed outside the feasible region, so the constrained
optimum x* = P_X[x_c] sits on the boundary of at least one constraint and the
feasibility machinery is exercised on every run.  The optimum and its value
are computed by the independent distance oracle, making rate measurement
exact.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import (PolyhedronSpec, distance_oracle, max_violation,
                       project_intersection)
from .oracle import (KnownOptimum, ObjectiveOracle, OracleError,
                     ProblemSpec, SimpleSet, empty_family, linear_family)
from .solver import PolyhedralContext, analysis_constants, ConfigError


class GenerationError(RuntimeError):
    """Benchmark generation failed (degenerate geometry after all retries)."""


class EigenComputationError(RuntimeError):
    """Power iteration failed to converge."""


@dataclass
class BenchmarkInstance:
    """A generated problem plus the polyhedral data the harness needs."""

    spec: ProblemSpec
    poly: PolyhedronSpec
    anchor: np.ndarray                # strictly feasible interior point
    pull_center: np.ndarray           # unconstrained minimizer x_c of the objective
    params: dict = field(default_factory=dict)
    analysis: Optional[dict] = None

    def context(self) -> PolyhedralContext:
        return PolyhedralContext(poly=self.poly, simple_set=self.spec.simple_set,
                                 feasible_point=self.anchor)


def _quadratic_objective(center: np.ndarray) -> ObjectiveOracle:
    def evaluate(x):
        d = x - center
        return 0.5 * float(d @ d)

    def subgradient(x):
        return x - center

    return ObjectiveOracle(evaluate=evaluate, subgradient=subgradient)


def _build_instance(A: np.ndarray, b: np.ndarray, anchor: np.ndarray,
                    pull_center: np.ndarray, radius_factor: float,
                    params: dict) -> BenchmarkInstance:
    """Assemble spec + instance around a pull center; boundary optimum required."""
    poly = PolyhedronSpec(A=A, b=b)
    n = poly.n
    radius = radius_factor * max(float(np.linalg.norm(pull_center - anchor)), 1.0)
    simple_set = SimpleSet.ball(anchor, radius)
    x_star = project_intersection(poly, simple_set, pull_center, tol=1e-10)
    if max_violation(poly, x_star) > 1e-8:
        raise GenerationError("computed optimum is infeasible")
    active = float(np.max(poly.A @ x_star + poly.b))
    if active < -1e-6:
        raise GenerationError("optimum interior to all constraints")
    f_star = 0.5 * float(np.linalg.norm(x_star - pull_center)) ** 2
    spec = ProblemSpec(
        dimension=n,
        objective=_quadratic_objective(pull_center),
        constraints=linear_family(poly.A, poly.b),
        simple_set=simple_set,
        mu=1.0,
        M_f=radius + float(np.linalg.norm(pull_center - anchor)),
        M_g=1.0,
        known_optimum=KnownOptimum(f_star=f_star, x_star=x_star),
    )
    return BenchmarkInstance(spec=spec, poly=poly, anchor=anchor.copy(),
                             pull_center=pull_center, params=dict(params))


def make_polyhedral_benchmark(n: int, m: int, seed: int,
                              margin_range=(0.1, 0.5), overshoot: float = 1.0,
                              radius_factor: float = 4.0,
                              max_attempts: int = 100) -> BenchmarkInstance:
    """Random polytope benchmark with known optimum on the boundary.

    Rows are unit-norm Gaussian directions; offsets keep the origin strictly
    feasible with margins drawn from ``margin_range``.  The pull center is
    placed beyond a random face (plus a tangential perturbation), so the
    optimum computed by the distance oracle is boundary-active; degenerate
    draws are regenerated with a shifted center, up to ``max_attempts``.
    """
    if m < 1 or n < 2:
        raise OracleError("need m >= 1 and n >= 2")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=1)[:, None]
    margins = rng.uniform(*margin_range, size=m)
    b = -margins
    anchor = np.zeros(n)

    params = {"kind": "benchmark", "n": n, "m": m, "seed": seed,
              "overshoot": overshoot, "radius_factor": radius_factor}
    last_error = None
    for attempt in range(max_attempts):
        j = int(rng.integers(0, m))
        depth = margins[j] + overshoot * rng.uniform(0.5, 1.5)
        tangent = rng.standard_normal(n)
        tangent -= (tangent @ A[j]) * A[j]
        pull = depth * A[j] + 0.3 * tangent
        try:
            return _build_instance(A, b, anchor, pull, radius_factor, params)
        except GenerationError as exc:
            last_error = exc
    raise GenerationError(
        f"no boundary-active optimum after {max_attempts} attempts: {last_error}")


def make_orthonormal_benchmark(n: int, seed: int, n_active: int = 4,
                               margin_range=(0.1, 0.5), overshoot: float = 1.0,
                               radius_factor: float = 4.0) -> BenchmarkInstance:
    """Benchmark whose n constraint rows are orthonormal.

    Any size-N subset J of rows then has a Gram matrix equal to the identity,
    so the exact batch alignment bound is 1/N: the regime where averaging the
    parallel steps provably helps.  The pull center violates ``n_active``
    constraints at once.
    """
    if not 1 <= n_active <= n:
        raise OracleError("n_active must lie in 1..n")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q.T.copy()
    margins = rng.uniform(*margin_range, size=n)
    b = -margins
    anchor = np.zeros(n)
    depths = margins[:n_active] + overshoot * rng.uniform(0.5, 1.5, size=n_active)
    pull = depths @ A[:n_active]
    params = {"kind": "orthonormal", "n": n, "m": n, "seed": seed,
              "n_active": n_active, "radius_factor": radius_factor}
    return _build_instance(A, b, anchor, pull, radius_factor, params)


def make_duplicated_benchmark(n: int, m: int, seed: int, margin: float = 0.3,
                              overshoot: float = 1.0,
                              radius_factor: float = 4.0) -> BenchmarkInstance:
    """Benchmark with one constraint direction duplicated m times.

    Every admissible row subset is rank one, so the exact batch alignment
    bound is 1 and the rate theory predicts no gain from parallel averaging.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    a /= np.linalg.norm(a)
    A = np.tile(a, (m, 1))
    b = np.full(m, -margin)
    anchor = np.zeros(n)
    tangent = rng.standard_normal(n)
    tangent -= (tangent @ a) * a
    pull = (margin + overshoot) * a + 0.3 * tangent
    params = {"kind": "duplicated", "n": n, "m": m, "seed": seed,
              "margin": margin, "radius_factor": radius_factor}
    return _build_instance(A, b, anchor, pull, radius_factor, params)


def make_orthant2() -> BenchmarkInstance:
    """Two-dimensional corner problem: x <= 0 componentwise, pull center (1, 1).

    The optimum is the origin with value 1; handy for end-to-end smoke runs.
    """
    A = np.eye(2)
    b = np.zeros(2)
    anchor = np.array([-0.5, -0.5])
    pull = np.array([1.0, 1.0])
    params = {"kind": "orthant2", "n": 2, "m": 2, "seed": 0}
    return _build_instance(A, b, anchor, pull, radius_factor=4.0, params=params)


def make_unconstrained(n: int = 4, seed: int = 3) -> BenchmarkInstance:
    """No functional constraints: plain projected subgradient descent.

    The feasible set is the simple set itself; the optimum is the pull center
    (kept inside the ball), so distance metrics are identically zero.
    """
    rng = np.random.default_rng(seed)
    pull = rng.standard_normal(n)
    anchor = np.zeros(n)
    radius = 4.0 * max(float(np.linalg.norm(pull)), 1.0)
    simple_set = SimpleSet.ball(anchor, radius)
    spec = ProblemSpec(
        dimension=n,
        objective=_quadratic_objective(pull),
        constraints=empty_family(),
        simple_set=simple_set,
        mu=1.0,
        M_f=radius + float(np.linalg.norm(pull)),
        M_g=1.0,
        known_optimum=KnownOptimum(f_star=0.0, x_star=pull.copy()),
    )
    poly = PolyhedronSpec(A=np.zeros((0, n)), b=np.zeros(0))
    return BenchmarkInstance(spec=spec, poly=poly, anchor=anchor,
                             pull_center=pull,
                             params={"kind": "unconstrained", "n": n, "seed": seed})


BUILTINS = {
    "orthant2": lambda n, m, seed: make_orthant2(),
    "benchmark": lambda n, m, seed: make_polyhedral_benchmark(n, m, seed),
    "orthonormal": lambda n, m, seed: make_orthonormal_benchmark(n, seed),
    "duplicated": lambda n, m, seed: make_duplicated_benchmark(n, m, seed),
    "unconstrained": lambda n, m, seed: make_unconstrained(n, seed),
}


def make_builtin(name: str, n: int = 10, m: int = 20, seed: int = 0) -> BenchmarkInstance:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise OracleError(f"unknown builtin problem {name!r}; "
                          f"choose from {sorted(BUILTINS)}") from None
    return factory(n, m, seed)


# ---------------------------------------------------------------------------
# exact batch-alignment analysis for linear constraints


def lambda_max_power(G: np.ndarray, rel_tol: float = 1e-10,
                     max_steps: int = 10 ** 5) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Deterministic: runs from two fixed start vectors (a ramp and a
    fixed-seeded Gaussian, so symmetry of the ramp cannot trap the
    iteration in an invariant subspace) and returns the larger estimate.
    """
    G = np.asarray(G, dtype=np.float64)
    k = G.shape[0]
    if k == 0:
        return 0.0
    starts = [np.arange(1.0, k + 1.0)]
    if k > 1:
        starts.append(np.random.default_rng(20260810).standard_normal(k))
    best = 0.0
    for v in starts:
        v = v / np.linalg.norm(v)
        lam = 0.0
        diff_prev = np.inf
        for step in range(max_steps):
            w = G @ v
            norm_w = float(np.linalg.norm(w))
            if norm_w == 0.0:
                lam = 0.0
                break
            lam_new = float(v @ w)
            v = w / norm_w
            diff = abs(lam_new - lam)
            lam = lam_new
            # Rayleigh estimates converge geometrically; bound the remaining
            # error by diff * r / (1 - r) with r the observed contraction
            ratio = diff / diff_prev if diff_prev > 0 else 0.0
            remaining = diff * ratio / (1.0 - ratio) if ratio < 1.0 else np.inf
            if max(diff, remaining) <= rel_tol * max(1.0, abs(lam)):
                break
            diff_prev = diff
        else:
            raise EigenComputationError(
                f"power iteration did not converge in {max_steps} steps")
        best = max(best, lam)
    return best


@dataclass(frozen=True)
class LNScheme:
    """Sampling scheme for the exact alignment bound.

    ``exhaustive``: every distinct index subset of the given size is
    admissible (covers without-replacement and slot-partition draws).
    ``partition``: the admissible subsets are exactly the given disjoint
    equal-size cells, one of which forms the whole minibatch.
    """

    kind: str                          # "exhaustive" | "partition"
    batch_size: Optional[int] = None
    cells: Optional[tuple] = None

    @staticmethod
    def exhaustive(batch_size: int) -> "LNScheme":
        return LNScheme("exhaustive", batch_size=int(batch_size))

    @staticmethod
    def partition(cells) -> "LNScheme":
        cells = tuple(tuple(int(i) for i in c) for c in cells)
        return LNScheme("partition", batch_size=len(cells[0]), cells=cells)


MAX_ENUMERATION = 10 ** 6


def exact_ln_linear(poly: PolyhedronSpec, scheme: LNScheme) -> float:
    """Exact supremum of the batch alignment ratio for linear constraints.

    Returns max over admissible index sets J of lambda_max(A_J A_J^T) / |J|,
    which bounds every realized per-batch ratio.  The value lies in (0, 1];
    it reaches 1 only when some admissible subset has rank <= 1 (duplicated
    directions), which is flagged with a warning.
    """
    m = poly.m
    if scheme.kind == "exhaustive":
        size = scheme.batch_size
        if not 1 <= size <= m:
            raise OracleError(f"batch size {size} out of range for m={m}")
        if math.comb(m, size) > MAX_ENUMERATION:
            raise OracleError(
                f"exhaustive enumeration of {math.comb(m, size)} subsets exceeds "
                f"the {MAX_ENUMERATION} cap; use a partition scheme")
        subsets = itertools.combinations(range(m), size)
    elif scheme.kind == "partition":
        cells = scheme.cells
        sizes = {len(c) for c in cells}
        if len(sizes) != 1:
            raise OracleError("partition cells must have equal size")
        flat = [i for c in cells for i in c]
        if len(set(flat)) != len(flat) or any(not 0 <= i < m for i in flat):
            raise OracleError("partition cells must be disjoint subsets of the rows")
        size = sizes.pop()
        subsets = iter(cells)
    else:
        raise OracleError(f"unknown scheme kind {scheme.kind!r}")

    best = 0.0
    for subset in subsets:
        rows = poly.A[list(subset)]
        gram = rows @ rows.T
        best = max(best, lambda_max_power(gram) / size)
    if size >= 2 and best >= 1.0 - 1e-12:
        warnings.warn("an admissible subset has rank <= 1 (duplicated "
                      "directions): the alignment bound reaches 1 and parallel "
                      "averaging gives no predicted gain", stacklevel=2)
    return min(best, 1.0)


@dataclass
class QBRow:
    batch_size: int
    ln: float
    beta_parallel: float
    q_parallel: Optional[float]
    b_parallel: Optional[float]
    beta_sequential: float
    q_sequential: Optional[float]
    b_sequential: Optional[float]
    outside_theory: bool
    note: str = ""


def qb_curves(poly: PolyhedronSpec, scheme: str, c_hat: float, mg: float,
              beta_policy, n_range) -> list:
    """Contraction and gain factors as a function of the minibatch size.

    ``scheme`` is "exhaustive" or a mapping batch_size -> partition cells.
    ``beta_policy`` is "optimal" (beta = 1/L_N parallel, beta = 1 sequential)
    or a fixed float used for both variants.  Rows whose parallel regime is
    not covered by the rate theory are flagged, not rejected.
    """
    if c_hat * mg ** 2 <= 1.0:
        raise ConfigError("need c_hat * M_g^2 > 1 for the gain predictions")
    rows = []
    for size in n_range:
        if scheme == "exhaustive":
            ln = exact_ln_linear(poly, LNScheme.exhaustive(size))
        else:
            ln = exact_ln_linear(poly, LNScheme.partition(scheme[size]))
        beta_p = 1.0 / ln if beta_policy == "optimal" else float(beta_policy)
        beta_s = 1.0 if beta_policy == "optimal" else float(beta_policy)
        note = ""
        try:
            q_p, b_p = analysis_constants(ln, c_hat, mg, beta_p, size, "parallel")
            outside = False
        except ConfigError as exc:
            q_p = b_p = None
            outside = True
            note = str(exc)
        try:
            q_s, b_s = analysis_constants(ln, c_hat, mg, beta_s, size, "sequential")
        except ConfigError as exc:
            q_s = b_s = None
            note = (note + "; " if note else "") + str(exc)
        rows.append(QBRow(batch_size=size, ln=ln, beta_parallel=beta_p,
                          q_parallel=q_p, b_parallel=b_p, beta_sequential=beta_s,
                          q_sequential=q_s, b_sequential=b_s,
                          outside_theory=outside, note=note))
    return rows


# ---------------------------------------------------------------------------
# plain-text instance format


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_instance(instance: BenchmarkInstance, path) -> None:
    """Write an instance in the plain-text matrix format (see README)."""
    spec = instance.spec
    poly = instance.poly
    ss = spec.simple_set
    lines = [f"{poly.n} {poly.m}"]
    for i in range(poly.m):
        lines.append(" ".join(_fmt(v) for v in poly.A[i]) + " " + _fmt(poly.b[i]))
    lines.append("objective quadratic")
    lines.append("center " + " ".join(_fmt(v) for v in instance.pull_center))
    if ss.variant == "ball":
        lines.append("set ball " + " ".join(_fmt(v) for v in ss.center)
                     + " " + _fmt(ss.radius))
    elif ss.variant == "whole-space":
        lines.append("set whole")
    else:
        raise OracleError(f"instance format supports ball or whole-space sets, "
                          f"not {ss.variant!r}")
    lines.append("mu " + _fmt(spec.mu))
    lines.append("Mf " + _fmt(spec.M_f))
    lines.append("Mg " + _fmt(spec.M_g))
    if spec.known_optimum is not None:
        lines.append("fstar " + _fmt(spec.known_optimum.f_star))
        lines.append("xstar " + " ".join(_fmt(v) for v in spec.known_optimum.x_star))
    lines.append("anchor " + " ".join(_fmt(v) for v in instance.anchor))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> BenchmarkInstance:
    """Read an instance written by :func:`save_instance`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        n, m = (int(t) for t in lines[0].split())
        A = np.zeros((m, n))
        b = np.zeros(m)
        for i in range(m):
            vals = [float(t) for t in lines[1 + i].split()]
            if len(vals) != n + 1:
                raise ValueError(f"row {i} has {len(vals)} values, expected {n + 1}")
            A[i], b[i] = vals[:n], vals[n]
        fields = {}
        for line in lines[1 + m:]:
            key, _, rest = line.partition(" ")
            fields[key] = rest
        if fields.get("objective") != "quadratic":
            raise ValueError("unsupported objective block")
        pull = np.array([float(t) for t in fields["center"].split()])
        set_parts = fields["set"].split()
        if set_parts[0] == "ball":
            center = np.array([float(t) for t in set_parts[1:1 + n]])
            radius = float(set_parts[1 + n])
            simple_set = SimpleSet.ball(center, radius)
        elif set_parts[0] == "whole":
            simple_set = SimpleSet.whole_space(n)
        else:
            raise ValueError(f"unsupported set variant {set_parts[0]!r}")
        mu = float(fields["mu"])
        mf = float(fields["Mf"])
        mg = float(fields["Mg"])
        known = None
        if "fstar" in fields and "xstar" in fields:
            known = KnownOptimum(
                f_star=float(fields["fstar"]),
                x_star=np.array([float(t) for t in fields["xstar"].split()]))
        anchor = np.array([float(t) for t in fields["anchor"].split()]) \
            if "anchor" in fields else np.zeros(n)
    except (KeyError, IndexError, ValueError) as exc:
        raise OracleError(f"malformed instance file {path}: {exc}") from exc

    poly = PolyhedronSpec(A=A, b=b)
    fam = linear_family(A, b) if m else empty_family()
    spec = ProblemSpec(dimension=n, objective=_quadratic_objective(pull),
                       constraints=fam, simple_set=simple_set, mu=mu, M_f=mf,
                       M_g=mg, known_optimum=known)
    return BenchmarkInstance(spec=spec, poly=poly, anchor=anchor,
                             pull_center=pull, params={"kind": "file", "n": n, "m": m})

"""Fully-digital precoders: conventional, error-statistics and flat-mainlobe.

All three place each receiver's precoding vector in the null space of the
other receivers' array responses (single directions for the conventional and
error-statistics designs, whole angular grids for the flat-mainlobe design)
and differ only in how the in-space component is chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleGeometryError, RankDeficiencyError
from .geometry import ArrayGeometry, steering_vector

__all__ = [
    "DigitalPrecoder",
    "AngleGrid",
    "NullSpaceBasis",
    "MinMaxSolution",
    "null_space_basis",
    "conventional_dp",
    "es_precoder",
    "minmax_ball_solver",
    "fm_precoder",
]

_RANK_RTOL = 1e-10


@dataclass
class DigitalPrecoder:
    """M_t x K precoding matrix; column k serves receiver k."""

    matrix: np.ndarray
    scheme_tag: str
    objective_trace: list[float] | None = None
    converged: bool = True


@dataclass(frozen=True)
class AngleGrid:
    """Uniform angular samples across [center - half_width, center + half_width]."""

    center_deg: float
    half_width_deg: float
    sample_count: int
    samples: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.sample_count == 1:
            samples = np.array([self.center_deg])
        else:
            samples = np.linspace(
                self.center_deg - self.half_width_deg,
                self.center_deg + self.half_width_deg,
                self.sample_count,
            )
        object.__setattr__(self, "samples", samples)

    def overlaps(self, other: "AngleGrid") -> bool:
        gap = abs(self.center_deg - other.center_deg)
        return gap < self.half_width_deg + other.half_width_deg


@dataclass
class NullSpaceBasis:
    """Orthonormal basis of the right null space of an interference matrix."""

    basis: np.ndarray
    source_rank: int


def _phase_normalize_columns(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Removes the SVD sign/phase ambiguity so outputs are deterministic across
    linear-algebra backends.
    """
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.maximum(np.abs(pivots), 1e-300), 1.0)
    return v * np.conj(phases)


def null_space_basis(
    interference: np.ndarray,
    element_count: int | None = None,
    rank_rtol: float | None = _RANK_RTOL,
) -> NullSpaceBasis:
    """Orthonormal right-null-space basis of a (rows x M_t) interference matrix.

    The basis is the trailing M_t - rows right singular vectors, which are
    orthogonal to every interference row at machine precision.  An empty
    interference matrix (single receiver) yields the identity.

    With ``rank_rtol`` set, singular values below ``rank_rtol * s_max`` count
    as zero and a shortfall against the row count raises
    :class:`RankDeficiencyError`; this catches duplicated steering directions.
    Pass ``rank_rtol=None`` for dense angular grids, whose rows are heavily
    correlated by construction and whose feasibility is checked structurally
    by the caller instead.
    """
    interference = np.atleast_2d(np.asarray(interference, dtype=complex))
    rows, cols = interference.shape
    if rows == 0 or interference.size == 0:
        if element_count is None:
            element_count = cols
        if element_count == 0:
            raise ValueError("cannot infer array size from an empty interference matrix")
        return NullSpaceBasis(np.eye(element_count, dtype=complex), 0)
    if rows >= cols:
        raise ValueError("interference matrix must have fewer rows than columns")
    _, s, vh = np.linalg.svd(interference, full_matrices=True)
    if rank_rtol is not None:
        rank = int(np.sum(s > rank_rtol * s[0]))
        if rank != rows:
            raise RankDeficiencyError(
                f"interference matrix rank {rank} below row count {rows}"
            )
    basis = vh[rows:].conj().T
    return NullSpaceBasis(_phase_normalize_columns(basis), rows)


def _nulled_max_gain_columns(responses: list[np.ndarray]) -> np.ndarray:
    """Per-receiver gain-maximizing vectors subject to nulling the others.

    Column k is the projection of receiver k's response onto the null space
    of the other receivers' responses.  No power scaling is applied here.
    """
    k = len(responses)
    mt = responses[0].shape[0]
    columns = np.zeros((mt, k), dtype=complex)
    for i in range(k):
        others = [responses[j].conj() for j in range(k) if j != i]
        if others:
            interference = np.vstack(others)
        else:
            interference = np.zeros((0, mt), dtype=complex)
        v = null_space_basis(interference, element_count=mt).basis
        columns[:, i] = v @ (v.conj().T @ responses[i])
    return columns


def conventional_dp(est_aods: list[float], bs: ArrayGeometry) -> DigitalPrecoder:
    """Non-robust zero-forcing precoder steering at the estimated angles.

    Each column maximizes the array gain toward its own estimated direction
    subject to nulling the other receivers' estimated directions; the matrix
    is then scaled to total power K.
    """
    if len(est_aods) > bs.element_count:
        raise ValueError("more receivers than transmit antennas")
    responses = [steering_vector(a, bs) for a in est_aods]
    matrix = _nulled_max_gain_columns(responses)
    k = len(est_aods)
    matrix *= np.sqrt(k) / np.linalg.norm(matrix)
    return DigitalPrecoder(matrix, "CDP")


def es_precoder(expected_responses: list[np.ndarray]) -> DigitalPrecoder:
    """Error-statistics robust precoder built from expected array responses.

    Identical construction to the conventional precoder with the nominal
    steering vectors replaced by the misalignment-averaged responses.
    """
    responses = [np.asarray(r, dtype=complex) for r in expected_responses]
    matrix = _nulled_max_gain_columns(responses)
    k = len(responses)
    matrix *= np.sqrt(k) / np.linalg.norm(matrix)
    return DigitalPrecoder(matrix, "DP-ES")


@dataclass
class MinMaxSolution:
    """Output of the min-max ball-constrained solver."""

    weights: list[np.ndarray]
    objective: float
    iterations: int
    converged: bool


def _ball_project(weights: np.ndarray, radius_sq: float) -> np.ndarray:
    norm_sq = float(np.sum(np.abs(weights) ** 2))
    if norm_sq > radius_sq:
        weights = weights * np.sqrt(radius_sq / norm_sq)
    return weights


def minmax_ball_solver(
    systems: list[tuple[np.ndarray, np.ndarray]],
    radius_sq: float,
    start: list[np.ndarray] | None = None,
    tol: float = 1e-8,
    max_iter: int = 2000,
) -> MinMaxSolution:
    """Minimize max_k ||B_k g_k - t_k||^2 over a total-power ball.

    Projected subgradient on the pointwise-max objective: at each step the
    residual-gradient of the currently worst receiver is followed with a
    diminishing step c/sqrt(t), then the stacked weights are projected back
    onto the ball of squared radius ``radius_sq``.  The best iterate seen
    (including the starting point) is returned, so the result never exceeds
    the objective of a supplied warm start.

    A single system bypasses the subgradient loop: the max is one term, so
    the ball-projected least-squares solution is optimal.
    """
    if not systems:
        raise ValueError("at least one system is required")
    mats = [np.asarray(b, dtype=complex) for b, _ in systems]
    targets = [np.asarray(t, dtype=complex) for _, t in systems]
    dims = [b.shape[1] for b in mats]

    def objective(weights: list[np.ndarray]) -> float:
        return max(
            float(np.sum(np.abs(b @ g - t) ** 2))
            for b, g, t in zip(mats, weights, targets)
        )

    if len(systems) == 1:
        g, *_ = np.linalg.lstsq(mats[0], targets[0], rcond=None)
        norm_sq = float(np.sum(np.abs(g) ** 2))
        if norm_sq > radius_sq:
            g = _regularized_ball_solution(mats[0], targets[0], radius_sq)
        weights = [g]
        return MinMaxSolution(weights, objective(weights), 0, True)

    offsets = np.cumsum([0] + dims)

    def split(stacked: np.ndarray) -> list[np.ndarray]:
        return [stacked[offsets[i] : offsets[i + 1]] for i in range(len(dims))]

    if start is None:
        stacked = np.zeros(offsets[-1], dtype=complex)
    else:
        stacked = np.concatenate([np.asarray(g, dtype=complex) for g in start])
    stacked = _ball_project(stacked, radius_sq)

    best = stacked.copy()
    best_obj = objective(split(stacked))
    step_scale = np.sqrt(radius_sq)
    stall = 0
    converged = False
    iterations = max_iter
    for t in range(1, max_iter + 1):
        weights = split(stacked)
        vals = [
            float(np.sum(np.abs(b @ g - tt) ** 2))
            for b, g, tt in zip(mats, weights, targets)
        ]
        worst = int(np.argmax(vals))
        residual = mats[worst] @ weights[worst] - targets[worst]
        grad_block = 2.0 * mats[worst].conj().T @ residual
        grad = np.zeros_like(stacked)
        grad[offsets[worst] : offsets[worst + 1]] = grad_block
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-15:
            converged = True
            iterations = t
            break
        stacked = _ball_project(
            stacked - (step_scale / np.sqrt(t)) * grad / gnorm, radius_sq
        )
        obj = objective(split(stacked))
        if obj < best_obj:
            if best_obj - obj < tol * max(best_obj, 1e-12):
                stall += 1
            else:
                stall = 0
            best_obj = obj
            best = stacked.copy()
        else:
            stall += 1
        if stall > max(200, max_iter // 4):
            converged = True
            iterations = t
            break
    return MinMaxSolution(split(best), best_obj, iterations, converged)


def _regularized_ball_solution(
    b: np.ndarray, t: np.ndarray, radius_sq: float
) -> np.ndarray:
    """Least squares with an active norm-ball constraint via bisection on the
    Tikhonov multiplier."""
    bhb = b.conj().T @ b
    bht = b.conj().T @ t
    eye = np.eye(b.shape[1])

    def solve(mu: float) -> np.ndarray:
        return np.linalg.solve(bhb + mu * eye, bht)

    lo, hi = 0.0, 1.0
    while float(np.sum(np.abs(solve(hi)) ** 2)) > radius_sq:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.sum(np.abs(solve(mid)) ** 2)) > radius_sq:
            lo = mid
        else:
            hi = mid
    return solve(hi)


def fm_precoder(
    grids: list[AngleGrid],
    bs: ArrayGeometry,
    tol: float = 1e-4,
    max_iter: int = 50,
    solver_tol: float = 1e-8,
    solver_max_iter: int = 600,
) -> DigitalPrecoder:
    """Flat-mainlobe robust precoder via alternating phase/weight optimization.

    Each receiver's precoding vector lives in the null space of the other
    receivers' angular grids, which enforces zero grid interference by
    construction.  The in-space weights chase a unit-gain target across the
    receiver's own grid: weights are updated by the min-max ball solver for
    fixed target phases, then the target phases are re-aligned with the
    achieved grid response, until the worst-receiver matching error stops
    improving.
    """
    k = len(grids)
    mt = bs.element_count
    for i in range(k):
        for j in range(i + 1, k):
            if grids[i].overlaps(grids[j]):
                raise InfeasibleGeometryError(
                    f"angular grids of receivers {i} and {j} overlap"
                )
    n = grids[0].sample_count
    if mt - (k - 1) * n <= 0:
        raise InfeasibleGeometryError(
            f"no null space left: M_t={mt}, K={k}, N={n}"
        )

    grid_rows = [
        np.vstack([steering_vector(a, bs).conj() for a in g.samples]) for g in grids
    ]
    bases = []
    for i in range(k):
        others = [grid_rows[j] for j in range(k) if j != i]
        if others:
            interference = np.vstack(others)
        else:
            interference = np.zeros((0, mt), dtype=complex)
        bases.append(
            null_space_basis(interference, element_count=mt, rank_rtol=None).basis
        )
    designs = [grid_rows[i] @ bases[i] for i in range(k)]

    # Warm-start each receiver at its least-squares weights under an equal
    # power split.  The per-receiver budget matters: an ill-conditioned grid
    # near the array axis can blow up one receiver's unconstrained solution,
    # and a shared rescaling would then crush every other receiver to zero.
    weights = []
    for b in designs:
        g, *_ = np.linalg.lstsq(b, np.ones(n, dtype=complex), rcond=None)
        if float(np.sum(np.abs(g) ** 2)) > 1.0:
            g = _regularized_ball_solution(b, np.ones(n, dtype=complex), 1.0)
        weights.append(g)

    phases = [np.angle(b @ g) for b, g in zip(designs, weights)]
    trace: list[float] = []
    prev = np.inf
    converged = False
    for _ in range(max_iter):
        targets = [np.exp(1j * chi) for chi in phases]
        solution = minmax_ball_solver(
            list(zip(designs, targets)),
            radius_sq=float(k),
            start=weights,
            tol=solver_tol,
            max_iter=solver_max_iter,
        )
        weights = solution.weights
        trace.append(solution.objective)
        phases = [np.angle(b @ g) for b, g in zip(designs, weights)]
        if abs(prev - solution.objective) < tol:
            converged = True
            break
        prev = solution.objective

    matrix = np.column_stack([bases[i] @ weights[i] for i in range(k)])
    return DigitalPrecoder(matrix, "DP-FM", objective_trace=trace, converged=converged)

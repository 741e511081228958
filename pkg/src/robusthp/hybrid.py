"""Constant-modulus factorization of a fully-digital precoder.

Alternates between a least-squares digital step and an analog step that keeps
every analog entry on the 1/sqrt(M_t) circle.  Two analog solvers: an
iterative gradient-projection search and a one-shot least-squares phase
extraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .digital import DigitalPrecoder
from .errors import IllConditionedFactorizationError, UnsupportedSolverError

__all__ = [
    "HybridPrecoder",
    "CmlsProblem",
    "GpResult",
    "digital_ls_step",
    "gp_analog_step",
    "lsp_analog",
    "approximate_hybrid",
    "ANALOG_SOLVERS",
]

ANALOG_SOLVERS = ("GP", "LSP", "MO")


@dataclass
class HybridPrecoder:
    """Analog/baseband factor pair with factorization diagnostics."""

    analog: np.ndarray
    baseband: np.ndarray
    residual: float
    iterations_used: int
    residual_trace: list[float] = field(default_factory=list)
    gp_iterations: int = 0

    @property
    def composite(self) -> np.ndarray:
        return self.analog @ self.baseband


@dataclass
class CmlsProblem:
    """Constant-modulus least-squares fit of vec(F_RF) to a digital target.

    The Kronecker design matrix (F_BB^T kron I) is never materialized; all
    products use vec(F_RF @ F_BB) and vec(Y @ F_BB^H) instead, so memory
    scales with M_t * N_RF.  ``design_matrix`` builds the explicit Kronecker
    form for cross-checks only.
    """

    baseband: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.baseband = np.asarray(self.baseband, dtype=complex)
        self.target = np.asarray(self.target, dtype=complex)
        if self.baseband.shape[1] != self.target.shape[1]:
            raise ValueError("baseband and target column counts disagree")

    @property
    def element_count(self) -> int:
        return self.target.shape[0]

    @property
    def rf_chains(self) -> int:
        return self.baseband.shape[0]

    @property
    def unknown_len(self) -> int:
        return self.element_count * self.rf_chains

    def unvec(self, x: np.ndarray) -> np.ndarray:
        return np.reshape(x, (self.element_count, self.rf_chains), order="F")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Design-matrix product: vec(F_RF @ F_BB)."""
        return (self.unvec(x) @ self.baseband).ravel(order="F")

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        """Adjoint product: vec(Y @ F_BB^H)."""
        ymat = np.reshape(y, self.target.shape, order="F")
        return (ymat @ self.baseband.conj().T).ravel(order="F")

    def objective(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.target - self.unvec(x) @ self.baseband) ** 2)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the unconstrained objective: -2 A^H (f - A x)."""
        residual = self.target - self.unvec(x) @ self.baseband
        return -2.0 * (residual @ self.baseband.conj().T).ravel(order="F")

    def design_matrix(self) -> np.ndarray:
        return np.kron(self.baseband.T, np.eye(self.element_count))

    def target_vector(self) -> np.ndarray:
        return self.target.ravel(order="F")


@dataclass
class GpResult:
    """Best constant-modulus iterate found by the gradient-projection search."""

    x: np.ndarray
    objectives: list[float]
    iterations: int
    converged: bool


def digital_ls_step(analog: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least-squares baseband matrix for a fixed analog matrix.

    Power normalization is deliberately not applied here; it happens once at
    factorization exit.
    """
    analog = np.asarray(analog, dtype=complex)
    rank = np.linalg.matrix_rank(analog, tol=1e-12 * np.linalg.norm(analog))
    if rank < analog.shape[1]:
        raise IllConditionedFactorizationError(
            f"analog matrix rank {rank} below column count {analog.shape[1]}"
        )
    return np.linalg.pinv(analog) @ target


def _project_modulus(x: np.ndarray, element_count: int) -> np.ndarray:
    return np.exp(1j * np.angle(x)) / np.sqrt(element_count)


def gp_analog_step(
    problem: CmlsProblem,
    start: np.ndarray,
    tol: float = 1e-4,
    max_iter: int = 100,
) -> GpResult:
    """Gradient projection on the constant-modulus constraint set.

    Conjugate directions with the Polak-Ribiere update, an exact line search
    along each direction, and a phase-only projection back onto the modulus
    circle after every move.  When the line-search curvature vanishes the
    direction restarts at steepest descent.  The lowest-objective iterate is
    returned, so a warm start is never made worse.
    """
    mt = problem.element_count
    x = _project_modulus(np.asarray(start, dtype=complex).ravel(order="F"), mt)
    grad = problem.gradient(x)
    direction = -grad
    objectives = [problem.objective(x)]
    best_x = x.copy()
    best_obj = objectives[0]
    converged = False
    iterations = max_iter
    for t in range(1, max_iter + 1):
        a_d = problem.apply(direction)
        denom = float(np.real(np.vdot(a_d, a_d)))
        if denom <= 1e-15:
            direction = -grad
            a_d = problem.apply(direction)
            denom = float(np.real(np.vdot(a_d, a_d)))
            if denom <= 1e-15:
                converged = True
                iterations = t
                break
        residual_vec = problem.target_vector() - problem.apply(x)
        step = float(np.real(np.vdot(a_d, residual_vec))) / denom
        candidate = _project_modulus(x + step * direction, mt)
        obj = problem.objective(candidate)
        if obj > objectives[-1]:
            # The phase projection can undo a conjugate move; fall back to a
            # steepest-descent step from the current point.
            direction = -grad
            a_d = problem.apply(direction)
            denom = float(np.real(np.vdot(a_d, a_d)))
            if denom > 1e-15:
                step = float(np.real(np.vdot(a_d, residual_vec))) / denom
                candidate = _project_modulus(x + step * direction, mt)
                obj = problem.objective(candidate)
        x = candidate
        new_grad = problem.gradient(x)
        denom_pr = float(np.real(np.vdot(grad, grad)))
        if denom_pr <= 1e-30:
            beta = 0.0
        else:
            beta = float(np.real(np.vdot(new_grad - grad, new_grad))) / denom_pr
        beta = max(beta, 0.0)
        direction = -new_grad + beta * direction
        grad = new_grad
        objectives.append(obj)
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        if abs(objectives[-1] - objectives[-2]) < tol:
            converged = True
            iterations = t
            break
    return GpResult(best_x, objectives, iterations, converged)


def lsp_analog(baseband: np.ndarray, target: np.ndarray) -> np.ndarray:
    """One-shot analog matrix: phases of the target-baseband correlation.

    Matrix form of projecting the unconstrained least-squares solution onto
    the constant-modulus set; exact when the baseband rows are orthogonal
    with equal norms.
    """
    target = np.asarray(target, dtype=complex)
    baseband = np.asarray(baseband, dtype=complex)
    mt = target.shape[0]
    return np.exp(1j * np.angle(target @ baseband.conj().T)) / np.sqrt(mt)


def approximate_hybrid(
    target: DigitalPrecoder | np.ndarray,
    rf_chains: int,
    analog_solver: str = "GP",
    tol: float = 1e-3,
    max_iter: int = 30,
    rng: np.random.Generator | None = None,
    gp_tol: float = 1e-4,
    gp_max_iter: int = 100,
) -> HybridPrecoder:
    """Factor a fully-digital precoder into analog and baseband matrices.

    Starts the analog matrix at uniform random phases, then alternates the
    least-squares digital step with the chosen analog solver until the
    approximation error stops changing.  GP warm-starts from the previous
    analog iterate, which keeps the recorded residual sequence non-increasing.
    The baseband matrix is scaled at exit so the product carries power K.
    """
    if analog_solver not in ANALOG_SOLVERS:
        raise ValueError(f"unknown analog solver {analog_solver!r}; expected one of {ANALOG_SOLVERS}")
    if analog_solver == "MO":
        raise UnsupportedSolverError("the manifold-optimization analog solver is not implemented")
    f_opt = target.matrix if isinstance(target, DigitalPrecoder) else np.asarray(target, dtype=complex)
    mt, k = f_opt.shape
    if not k <= rf_chains <= mt:
        raise ValueError(f"need K <= N_RF <= M_t, got K={k}, N_RF={rf_chains}, M_t={mt}")
    if rng is None:
        rng = np.random.default_rng()

    analog = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (mt, rf_chains))) / np.sqrt(mt)
    baseband = np.zeros((rf_chains, k), dtype=complex)
    trace: list[float] = []
    gp_total = 0
    prev = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        baseband = digital_ls_step(analog, f_opt)
        if analog_solver == "GP":
            problem = CmlsProblem(baseband, f_opt)
            result = gp_analog_step(
                problem, analog.ravel(order="F"), tol=gp_tol, max_iter=gp_max_iter
            )
            analog = problem.unvec(result.x)
            gp_total += result.iterations
        else:
            analog = lsp_analog(baseband, f_opt)
        residual = float(np.linalg.norm(f_opt - analog @ baseband) ** 2)
        trace.append(residual)
        if abs(prev - residual) < tol:
            break
        prev = residual

    product_norm = np.linalg.norm(analog @ baseband)
    if product_norm <= 0:
        raise IllConditionedFactorizationError("zero analog-baseband product")
    baseband = baseband * (np.sqrt(k) / product_norm)
    return HybridPrecoder(
        analog=analog,
        baseband=baseband,
        residual=trace[-1],
        iterations_used=iterations,
        residual_trace=trace,
        gp_iterations=gp_total,
    )

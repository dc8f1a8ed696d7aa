"""Cutting-plane learner for the plan-model weights.

Joint features stack one block per task type over the nine plan formulas,
so the linear score of (example, task) equals the plan-model score under
that task's weights. Training solves the single-slack margin problem: each
round adds the currently most violated aggregated constraint and re-solves
a tiny quadratic program over the working set in its dual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .planner import FORMULAS, TASK_TYPES, MlnModel

DIM = len(TASK_TYPES) * len(FORMULAS)
_FORMULA_IDX = {f: i for i, f in enumerate(FORMULAS)}


class NonConvergenceError(RuntimeError):
    def __init__(self, violation: float, iterations: int):
        self.violation = violation
        self.iterations = iterations
        super().__init__(f"no convergence after {iterations} rounds, violation {violation:.3e}")


@dataclass(frozen=True)
class PlanExample:
    satisfied: frozenset[str]
    task: str


@dataclass
class CuttingPlaneState:
    constraints: list[tuple[np.ndarray, float]] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)
    violations: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def psi(x: PlanExample | frozenset, y: str) -> np.ndarray:
    """Joint feature map: indicators of satisfied formulas in task y's block."""
    satisfied = x.satisfied if isinstance(x, PlanExample) else x
    vec = np.zeros(DIM)
    base = TASK_TYPES.index(y) * len(FORMULAS)
    for f in satisfied:
        vec[base + _FORMULA_IDX[f]] = 1.0
    return vec


def loss(W: np.ndarray, x: PlanExample | frozenset, y: str, ybar: str) -> float:
    """Unit surcharge plus the score gap between the two labelings."""
    if y == ybar:
        return 0.0
    return 1.0 + abs(float(W @ psi(x, y)) - float(W @ psi(x, ybar)))


def loss_augmented_infer(W: np.ndarray, x: PlanExample | frozenset, y_true: str) -> str:
    """Most violating task under current weights; ties fall to task order."""
    best, best_val = None, None
    for y in TASK_TYPES:
        val = float(W @ psi(x, y)) + loss(W, x, y_true, y)
        if best_val is None or val > best_val:
            best, best_val = y, val
    return best


def _solve_working_qp(constraints: list[tuple[np.ndarray, float]], C: float) -> tuple[np.ndarray, float]:
    """Maximize the dual of the working-set problem exactly.

    Variables live on the simplex {lam >= 0, sum lam = C} after adding a
    slack coordinate, and mass moves pairwise between the most and least
    favorable coordinates until the gradient gap closes.
    """
    m = len(constraints)
    D = np.zeros((m + 1, DIM))
    delta = np.zeros(m + 1)
    for k, (d, l) in enumerate(constraints, start=1):
        D[k] = d
        delta[k] = l
    G = D @ D.T
    lam = np.zeros(m + 1)
    lam[0] = C
    tol = 1e-12 * max(1.0, float(np.abs(delta).max()))
    for _ in range(100000):
        grad = delta - G @ lam
        i = int(np.argmax(grad))
        active = np.nonzero(lam > 0)[0]
        j = active[int(np.argmin(grad[active]))]
        gap = grad[i] - grad[j]
        if gap <= tol:
            break
        eta = G[i, i] - 2.0 * G[i, j] + G[j, j]
        t = lam[j] if eta <= 1e-300 else min(gap / eta, lam[j])
        lam[i] += t
        lam[j] -= t
    W = D.T @ lam
    objective = float(delta @ lam - 0.5 * W @ W)
    return W, objective


def train_ssvm(
    examples: list[PlanExample],
    C: float = 1.0,
    eps: float = 1e-3,
    max_iter: int = 1000,
) -> tuple[MlnModel, CuttingPlaneState]:
    """Learn non-negative per-task formula weights by cutting planes.

    Stops once the most violated aggregated constraint is satisfied within
    eps at the current (weights, slack); weights are clipped to the
    non-negative orthant after each working-set solve.
    """
    if not examples:
        raise ValueError("no training examples")
    for ex in examples:
        if ex.task not in TASK_TYPES:
            raise ValueError(f"unknown task type {ex.task!r}")
    W = np.zeros(DIM)
    xi = 0.0
    state = CuttingPlaneState()
    n = len(examples)
    last_violation = float("inf")
    for _ in range(max_iter):
        state.iterations += 1
        dbar = np.zeros(DIM)
        lbar = 0.0
        for ex in examples:
            ybar = loss_augmented_infer(W, ex, ex.task)
            dbar += psi(ex, ex.task) - psi(ex, ybar)
            lbar += loss(W, ex, ex.task, ybar)
        dbar /= n
        lbar /= n
        last_violation = lbar - float(W @ dbar) - xi
        state.violations.append(last_violation)
        if last_violation <= eps:
            state.converged = True
            break
        state.constraints.append((dbar, lbar))
        W_raw, objective = _solve_working_qp(state.constraints, C)
        state.objectives.append(objective)
        W = np.maximum(W_raw, 0.0)
        xi = max(0.0, max(l - float(W @ d) for d, l in state.constraints))
    if not state.converged:
        raise NonConvergenceError(last_violation, state.iterations)
    weights = {
        task: W[i * len(FORMULAS) : (i + 1) * len(FORMULAS)].copy()
        for i, task in enumerate(TASK_TYPES)
    }
    model = MlnModel(task_types=TASK_TYPES, weights=weights)
    return model, state

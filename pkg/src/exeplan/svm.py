"""Binary soft-margin SVM dual solved by pairwise coordinate updates.

The solver keeps the usual box and equality constraints of the dual and
moves the most violating pair until the optimality gap is below tolerance.
State is kept so samples can be appended and the solution re-optimized
cheaply during self-training.
"""

from __future__ import annotations

import numpy as np

_BOUND_EPS = 1e-12


class SmoState:
    """Dual variables and error cache for one binary problem."""

    def __init__(self, C: float):
        self.C = float(C)
        self.alpha = np.zeros(0)
        self.y = np.zeros(0)
        # F[i] = w.x_i - y_i, maintained incrementally
        self.F = np.zeros(0)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def add_sample(self, gram_col: np.ndarray, y_new: float) -> None:
        """Append one sample with alpha=0; existing error entries are unchanged."""
        f_new = float(gram_col @ (self.alpha * self.y)) - y_new
        self.alpha = np.append(self.alpha, 0.0)
        self.y = np.append(self.y, float(y_new))
        self.F = np.append(self.F, f_new)

    def _masks(self) -> tuple[np.ndarray, np.ndarray]:
        pos, neg = self.y > 0, self.y < 0
        below = self.alpha < self.C - _BOUND_EPS
        above = self.alpha > _BOUND_EPS
        up = (pos & below) | (neg & above)
        low = (pos & above) | (neg & below)
        return up, low

    def optimize(self, G: np.ndarray, tol: float = 5e-5, max_updates: int = 200000) -> int:
        """Run pairwise updates until the violating-pair gap closes.

        G must be the Gram matrix over the current samples. Returns the
        number of pair updates performed.
        """
        if self.n == 0:
            return 0
        updates = 0
        while True:
            up, low = self._masks()
            if not up.any() or not low.any():
                return updates
            up_idx = np.nonzero(up)[0]
            low_idx = np.nonzero(low)[0]
            i = up_idx[np.argmin(self.F[up_idx])]
            j = low_idx[np.argmax(self.F[low_idx])]
            gap = self.F[j] - self.F[i]
            if gap <= 2.0 * tol:
                return updates
            if updates >= max_updates:
                raise RuntimeError(f"smo did not converge, gap={gap:.3e}")
            head_i = (self.C - self.alpha[i]) if self.y[i] > 0 else self.alpha[i]
            head_j = self.alpha[j] if self.y[j] > 0 else (self.C - self.alpha[j])
            t_max = min(head_i, head_j)
            eta = G[i, i] + G[j, j] - 2.0 * G[i, j]
            t = t_max if eta <= 1e-300 else min(gap / eta, t_max)
            self.alpha[i] += self.y[i] * t
            self.alpha[j] -= self.y[j] * t
            np.clip(self.alpha, 0.0, self.C, out=self.alpha)
            self.F += t * (G[i] - G[j])
            updates += 1

    def bias(self) -> float:
        up, low = self._masks()
        if up.any() and low.any():
            b_up = float(self.F[up].min())
            b_low = float(self.F[low].max())
            return -(b_up + b_low) / 2.0
        if up.any():
            return -float(self.F[up].min())
        if low.any():
            return -float(self.F[low].max())
        return 0.0

    def dual_objective(self, G: np.ndarray) -> float:
        ay = self.alpha * self.y
        return float(self.alpha.sum() - 0.5 * ay @ G @ ay)


def kkt_residual(state: SmoState, b: float) -> float:
    """Largest complementary-slackness violation at (alpha, b)."""
    if state.n == 0:
        return 0.0
    beta = -b
    up, low = state._masks()
    worst = 0.0
    if up.any():
        worst = max(worst, float((beta - state.F[up]).max()))
    if low.any():
        worst = max(worst, float((state.F[low] - beta).max()))
    return max(worst, 0.0)


def solve_binary(G: np.ndarray, y: np.ndarray, C: float, tol: float = 5e-5) -> SmoState:
    """Solve one binary dual from scratch."""
    state = SmoState(C)
    state.alpha = np.zeros(len(y))
    state.y = np.asarray(y, dtype=float).copy()
    state.F = -state.y.copy()
    state.optimize(G, tol=tol)
    return state

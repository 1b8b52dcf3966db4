'''
*********************************************************************
OPTIMIZERS
*********************************************************************
'''

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from constants import *
from helpers import StructuralError, printWarning, printDebug


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    lr: float = NETWORK_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    aborted: int = 0

    @classmethod
    def zeros(cls, shape, lr=NETWORK_LR):
        return cls(np.zeros(shape), np.zeros(shape), lr=lr)


def adam_step(state, params, grads):
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.shape or state.m.shape != params.shape:
        raise StructuralError('adam_step: params %s, grads %s, state %s'
                              % (params.shape, grads.shape, state.m.shape))

    if not np.all(np.isfinite(grads)):
        state.aborted += 1
        printWarning('adam_step: non-finite gradient, step %d aborted' % (state.step_count + 1))
        return params, state

    t = state.step_count + 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** t)
    v_hat = state.v / (1.0 - state.beta2 ** t)
    state.step_count = t
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps), state


'''
*********************************************************************
L-BFGS
*********************************************************************
'''

@dataclass
class LbfgsState:
    history: int = LBFGS_HISTORY
    c1: float = LBFGS_C1
    c2: float = LBFGS_C2
    max_ls: int = LBFGS_MAX_LS
    pairs: deque = field(default_factory=deque)
    iterations: int = 0
    evaluations: int = 0
    discarded: int = 0
    loss: float = math.inf
    line_search_failed: bool = False

    def push(self, s, y):
        if self.history == 0:
            return
        if s @ y <= LBFGS_CURVATURE_EPS:
            self.discarded += 1
            return
        self.pairs.append((s, y))
        while len(self.pairs) > self.history:
            self.pairs.popleft()

    def direction(self, g):
        # two-loop recursion
        q = -g.copy()
        alphas = []
        for s, y in reversed(self.pairs):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            q -= a * y
            alphas.append((rho, a))
        if self.pairs:
            s, y = self.pairs[-1]
            q *= (s @ y) / (y @ y)
        for (s, y), (rho, a) in zip(self.pairs, reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        return q


def _cubic_interpolate(x1, f1, g1, x2, f2, g2, bounds=None):
    if bounds is not None:
        xmin_bound, xmax_bound = bounds
    else:
        xmin_bound, xmax_bound = (x1, x2) if x1 <= x2 else (x2, x1)

    d1 = g1 + g2 - 3 * (f1 - f2) / (x1 - x2)
    d2_square = d1 ** 2 - g1 * g2
    if d2_square >= 0:
        d2 = math.sqrt(d2_square)
        if x1 <= x2:
            min_pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2 * d2))
        else:
            min_pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2 * d2))
        return min(max(min_pos, xmin_bound), xmax_bound)
    return (xmin_bound + xmax_bound) / 2.


def _strong_wolfe(fg, x, t, d, f, g, gtd, c1, c2, max_ls, tolerance_change=1e-9):
    """Returns (f_new, g_new, t, evaluations, wolfe_satisfied)"""

    d_norm = np.abs(d).max()
    f_new, g_new = fg(x + t * d)
    evals = 1
    gtd_new = g_new @ d

    t_prev, f_prev, g_prev, gtd_prev = 0.0, f, g, gtd
    done = False
    ls_iter = 0
    while ls_iter < max_ls:
        if f_new > f + c1 * t * gtd or (ls_iter > 1 and f_new >= f_prev):
            bracket = [t_prev, t]
            bracket_f = [f_prev, f_new]
            bracket_g = [g_prev, g_new]
            bracket_gtd = [gtd_prev, gtd_new]
            break
        if abs(gtd_new) <= -c2 * gtd:
            bracket = [t]
            bracket_f = [f_new]
            bracket_g = [g_new]
            done = True
            break
        if gtd_new >= 0:
            bracket = [t_prev, t]
            bracket_f = [f_prev, f_new]
            bracket_g = [g_prev, g_new]
            bracket_gtd = [gtd_prev, gtd_new]
            break

        # extrapolate
        min_step = t + 0.01 * (t - t_prev)
        max_step = t * 10
        tmp = t
        t = _cubic_interpolate(t_prev, f_prev, gtd_prev, t, f_new, gtd_new, bounds=(min_step, max_step))
        t_prev, f_prev, g_prev, gtd_prev = tmp, f_new, g_new, gtd_new
        f_new, g_new = fg(x + t * d)
        evals += 1
        gtd_new = g_new @ d
        ls_iter += 1

    if ls_iter == max_ls:
        bracket = [0.0, t]
        bracket_f = [f, f_new]
        bracket_g = [g, g_new]
        bracket_gtd = [gtd, gtd_new]

    # zoom
    insuf_progress = False
    low_pos, high_pos = (0, 1) if bracket_f[0] <= bracket_f[-1] else (1, 0)
    while not done and ls_iter < max_ls:
        if abs(bracket[1] - bracket[0]) * d_norm < tolerance_change:
            break

        t = _cubic_interpolate(bracket[0], bracket_f[0], bracket_gtd[0],
                               bracket[1], bracket_f[1], bracket_gtd[1])
        eps = 0.1 * (max(bracket) - min(bracket))
        if min(max(bracket) - t, t - min(bracket)) < eps:
            if insuf_progress or t >= max(bracket) or t <= min(bracket):
                if abs(t - max(bracket)) < abs(t - min(bracket)):
                    t = max(bracket) - eps
                else:
                    t = min(bracket) + eps
                insuf_progress = False
            else:
                insuf_progress = True
        else:
            insuf_progress = False

        f_new, g_new = fg(x + t * d)
        evals += 1
        gtd_new = g_new @ d
        ls_iter += 1

        if f_new > f + c1 * t * gtd or f_new >= bracket_f[low_pos]:
            bracket[high_pos] = t
            bracket_f[high_pos] = f_new
            bracket_g[high_pos] = g_new
            bracket_gtd[high_pos] = gtd_new
            low_pos, high_pos = (0, 1) if bracket_f[0] <= bracket_f[1] else (1, 0)
        else:
            if abs(gtd_new) <= -c2 * gtd:
                done = True
            elif gtd_new * (bracket[high_pos] - bracket[low_pos]) >= 0:
                bracket[high_pos] = bracket[low_pos]
                bracket_f[high_pos] = bracket_f[low_pos]
                bracket_g[high_pos] = bracket_g[low_pos]
                bracket_gtd[high_pos] = bracket_gtd[low_pos]
            bracket[low_pos] = t
            bracket_f[low_pos] = f_new
            bracket_g[low_pos] = g_new
            bracket_gtd[low_pos] = gtd_new

    return bracket_f[low_pos], bracket_g[low_pos], bracket[low_pos], evals, done


def lbfgs_minimize(loss_evaluator, params, max_iters, history=LBFGS_HISTORY, gtol=LBFGS_GTOL,
                   c1=LBFGS_C1, c2=LBFGS_C2, max_ls=LBFGS_MAX_LS):
    """Minimize with L-BFGS and a strong-Wolfe line search.

    loss_evaluator(x) -> (loss, gradient). Returns (params, LbfgsState);
    state.line_search_failed marks an early stop at the best point seen.
    """

    state = LbfgsState(history=history, c1=c1, c2=c2, max_ls=max_ls)

    def fg(x):
        f, g = loss_evaluator(x)
        return float(f), np.asarray(g, dtype=np.float64)

    x = np.array(params, dtype=np.float64, copy=True)
    f, g = fg(x)
    state.evaluations = 1

    while state.iterations < max_iters:
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            state.line_search_failed = True
            printWarning('lbfgs: non-finite loss or gradient at iteration %d' % state.iterations)
            break
        if np.linalg.norm(g) < gtol:
            break

        d = state.direction(g)
        gtd = g @ d
        if gtd >= 0:
            # memory lost positive definiteness, restart from steepest descent
            state.pairs.clear()
            d = -g
            gtd = g @ d

        t = min(1.0, 1.0 / np.abs(g).sum()) if not state.pairs else 1.0
        f_new, g_new, t, evals, wolfe = _strong_wolfe(fg, x, t, d, f, g, gtd, c1, c2, max_ls)
        state.evaluations += evals

        if not f_new < f:
            state.line_search_failed = True
            printWarning('lbfgs: line search failed at iteration %d, keeping best point' % state.iterations)
            break
        if not wolfe:
            printDebug(2, 'lbfgs: step accepted without curvature condition at iteration %d' % state.iterations)

        s = t * d
        state.push(s, g_new - g)
        x = x + s
        f, g = f_new, g_new
        state.iterations += 1

    state.loss = f
    return x, state

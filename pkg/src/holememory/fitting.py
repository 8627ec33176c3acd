"""Damped Gauss-Newton least squares with a simplex fallback."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize


class FitError(RuntimeError):
    """Fit did not converge; ``best`` holds the best parameters seen."""

    def __init__(self, message: str, best: np.ndarray | None = None):
        super().__init__(message)
        self.best = best


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class FitReport:
    params: np.ndarray
    residual_norm: float
    covariance: np.ndarray
    iterations: int
    method: str

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def _covariance(jac: np.ndarray, cost: float, n_obs: int) -> np.ndarray:
    n_par = jac.shape[1]
    dof = max(n_obs - n_par, 1)
    jtj = jac.T @ jac
    try:
        return np.linalg.inv(jtj) * (2.0 * cost / dof)
    except np.linalg.LinAlgError:
        return np.full((n_par, n_par), np.inf)


def gauss_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0,
    *,
    lower=None,
    max_iter: int = 200,
    xtol: float = 1e-12,
    gtol: float = 1e-14,
) -> FitReport:
    """Minimise ``0.5*|residual(p)|^2`` by Gauss-Newton with Marquardt damping.

    ``lower`` clips parameters from below after each step.  Falls back to a
    Nelder-Mead search when the damped iteration stalls; raises FitError if
    that fails too.
    """
    p = np.asarray(p0, dtype=float).copy()
    lo = None if lower is None else np.asarray(lower, dtype=float)
    r = residual(p)
    cost = 0.5 * float(r @ r)
    lam = 1e-3
    it = 0
    converged = False
    while it < max_iter:
        J = jacobian(p)
        g = J.T @ r
        scale = np.maximum(np.abs(p), 1e-12)
        if np.max(np.abs(g) * scale) <= gtol * max(cost, 1e-300) or cost == 0.0:
            converged = True
            break
        it += 1
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + step
            if lo is not None:
                trial = np.maximum(trial, lo)
            r_t = residual(trial)
            cost_t = 0.5 * float(r_t @ r_t)
            if np.isfinite(cost_t) and cost_t <= cost:
                small = np.all(np.abs(trial - p) <= xtol * (np.abs(p) + xtol))
                p, r, old, cost = trial, r_t, cost, cost_t
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                if small or old - cost <= 1e-15 * old:
                    converged = True
                break
            lam *= 10.0
        if not accepted:
            # no descent possible from here: local minimum to machine precision
            converged = True
            break
        if converged:
            break
    if converged:
        J = jacobian(p)
        return FitReport(p, float(np.sqrt(2 * cost)), _covariance(J, cost, r.size), it, "gauss-newton")

    res = minimize(
        lambda q: 0.5 * float(np.sum(residual(q) ** 2)),
        p,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 40000},
    )
    if not res.success:
        raise FitError(f"fit did not converge after {it} iterations: {res.message}", best=res.x)
    q = res.x
    r = residual(q)
    cost = 0.5 * float(r @ r)
    return FitReport(q, float(np.sqrt(2 * cost)), _covariance(jacobian(q), cost, r.size), it + res.nit, "nelder-mead")

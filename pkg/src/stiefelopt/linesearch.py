"""Step-size machinery: BB trial steps, clamping, the non-monotone reference
value, and Armijo backtracking along the projected curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .linalg import frobenius_inner, frobenius_norm
from .manifold import RankDeficientError, StiefelPoint, retract

__all__ = [
    "BB_DENOM_TOL",
    "bb_steps",
    "clamp_step",
    "NonmonotoneState",
    "nonmonotone_update",
    "LineSearchResult",
    "LineSearchError",
    "backtrack",
]

#: Denominators below this magnitude make a BB quotient meaningless; the
#: quotient is reported as +inf and left for :func:`clamp_step` to cap.
BB_DENOM_TOL = 1e-30


def bb_steps(step_diff, grad_diff) -> tuple[float, float]:
    """Both Barzilai-Borwein trial steps from one iterate/gradient difference.

    With ``S = X_{k+1} - X_k`` and ``R`` the gradient difference::

        bb1 = | ||S||_F^2 / <S, R> |       bb2 = | <S, R> / ||R||_F^2 |

    Absolute values keep the steps positive on non-convex stretches where
    ``<S, R> < 0``.  A denominator with magnitude below
    :data:`BB_DENOM_TOL` yields ``math.inf`` (the caller clamps).
    """
    ss = frobenius_norm(step_diff) ** 2
    sr = frobenius_inner(step_diff, grad_diff)
    rr = frobenius_norm(grad_diff) ** 2
    bb1 = math.inf if abs(sr) < BB_DENOM_TOL else abs(ss / sr)
    bb2 = math.inf if rr < BB_DENOM_TOL else abs(sr / rr)
    return bb1, bb2


def clamp_step(tau: float, tau_min: float, tau_max: float) -> float:
    """Clamp a trial step into ``[tau_min, tau_max]`` (inf maps to tau_max)."""
    if not (0 < tau_min <= tau_max):
        raise ValueError(f"need 0 < tau_min <= tau_max, got [{tau_min}, {tau_max}]")
    return max(min(tau, tau_max), tau_min)


@dataclass(frozen=True)
class NonmonotoneState:
    """Weight ``q`` and reference value ``c`` of the averaged acceptance rule.

    Fresh solves start from ``q = 1`` and ``c = F(X_0)``.
    """

    q: float
    c: float


def nonmonotone_update(
    state: NonmonotoneState, f_new: float, eta: float
) -> NonmonotoneState:
    """Advance the averaged reference after accepting a step with value ``f_new``.

    ::

        q' = eta * q + 1
        c' = (eta * q * c + f_new) / q'

    ``eta = 0`` collapses the reference to ``f_new`` (monotone behaviour);
    ``eta = 1`` (boundary, useful in tests) makes ``c`` the running mean of
    all accepted values.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    q_new = eta * state.q + 1.0
    c_new = (eta * state.q * state.c + f_new) / q_new
    return NonmonotoneState(q=q_new, c=c_new)


@dataclass(frozen=True)
class LineSearchResult:
    """Accepted step: length, landing point, objective value there, number of
    objective evaluations spent, and whether the retraction fast path fired."""

    tau: float
    point: StiefelPoint
    value: float
    nfe: int
    used_taylor: bool


class LineSearchError(RuntimeError):
    """Backtracking exhausted its budget without sufficient decrease.

    Carries the best (lowest-value) candidate seen so the caller can report
    or salvage it.
    """

    def __init__(self, message: str, best: LineSearchResult | None, nfe: int):
        super().__init__(message)
        self.best = best
        self.nfe = nfe


def backtrack(
    objective,
    point: StiefelPoint,
    direction,
    slope: float,
    tau0: float,
    c_ref: float,
    *,
    rho1: float = 1e-4,
    delta: float = 0.3,
    max_halvings: int = 60,
    max_rank_retries: int = 10,
) -> LineSearchResult:
    """Armijo backtracking along ``Z(tau) = proj(X - tau*H)``.

    Starting from ``tau0``, the step shrinks by ``delta`` until the strict
    sufficient-decrease test ``F(Z(tau)) < c_ref + rho1 * tau * slope``
    passes; a candidate that merely ties the reference is rejected.  With a
    monotone reference ``c_ref = F(X)`` this is classical Armijo; the
    non-monotone solver passes its averaged reference instead.

    Parameters
    ----------
    objective
        Object with ``value(x) -> float``.
    point : StiefelPoint
        Current iterate ``X``.
    direction : array_like
        Tangent descent direction ``H``.
    slope : float
        Directional derivative at ``tau = 0``; must be negative.
    tau0 : float
        First trial step, ``> 0``.
    c_ref : float
        Acceptance reference value.
    rho1, delta : float
        Sufficient-decrease coefficient and shrink factor, both in (0, 1).
    max_halvings : int
        Budget of shrinks before giving up.
    max_rank_retries : int
        Rank-deficient projections are retried with ``tau`` halved at most
        this many times (they do not consume objective evaluations).

    Raises
    ------
    LineSearchError
        If the budget is exhausted; the best candidate seen rides along.
    """
    if not slope < 0:
        raise ValueError(f"slope must be negative, got {slope}")
    if not tau0 > 0:
        raise ValueError(f"tau0 must be > 0, got {tau0}")
    if not 0 < rho1 < 1:
        raise ValueError(f"rho1 must be in (0, 1), got {rho1}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")

    tau = float(tau0)
    nfe = 0
    shrinks = 0
    rank_retries = 0
    best: LineSearchResult | None = None
    while True:
        try:
            candidate, used_taylor = retract(point, direction, tau)
        except RankDeficientError:
            rank_retries += 1
            if rank_retries > max_rank_retries:
                raise LineSearchError(
                    f"projection stayed rank deficient after {max_rank_retries} "
                    "step halvings",
                    best,
                    nfe,
                ) from None
            tau *= 0.5
            continue
        f_val = float(objective.value(candidate.x))
        nfe += 1
        if f_val < c_ref + rho1 * tau * slope:
            return LineSearchResult(
                tau=tau, point=candidate, value=f_val, nfe=nfe, used_taylor=used_taylor
            )
        if best is None or f_val < best.value:
            best = LineSearchResult(
                tau=tau, point=candidate, value=f_val, nfe=nfe, used_taylor=used_taylor
            )
        shrinks += 1
        if shrinks > max_halvings:
            raise LineSearchError(
                f"no sufficient decrease after {max_halvings} step reductions "
                f"(best F = {best.value:.6e} at tau = {best.tau:.3e}, "
                f"reference = {c_ref:.6e})",
                best,
                nfe,
            )
        tau *= delta

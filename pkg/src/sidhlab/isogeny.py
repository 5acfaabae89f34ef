"""Degree-3 and degree-4 x-only isogenies and the strategy-driven chain
evaluator, including the fault hook that zeroes the imaginary parts of a
freshly computed projective curve coefficient.

Chains never raise on corrupted data: a kernel that fails its order check
marks the trace degenerate and the run stops, mirroring how a faulted victim
computation just produces garbage downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

from .montgomery import (
    ProjCoeff,
    XPoint,
    xdbl,
    xdbl_e,
    xtpl,
    xtpl_e,
    zero_imaginary_parts,
)


@dataclass(frozen=True, slots=True)
class IsogenyStep:
    """One computed isogeny: codomain coefficient plus evaluation constants."""

    degree: int
    new_coeff: ProjCoeff
    eval_data: tuple


@dataclass
class FaultHook:
    """Zeroes the imaginary parts of the output coefficient of the isogeny
    with 0-based chain index ``target_index``; fires at most once."""

    target_index: int
    armed: bool = True
    fired: bool = False

    def maybe_fire(self, isogeny_index: int, coeff: ProjCoeff) -> ProjCoeff:
        if self.armed and not self.fired and isogeny_index == self.target_index:
            self.fired = True
            return zero_imaginary_parts(coeff)
        return coeff


@dataclass
class ChainTrace:
    """Per-run record: coefficients E_0..E_e (post-fault values included),
    each step's kernel x-point, and where (if anywhere) the chain went bad."""

    coeffs: list = dc_field(default_factory=list)
    kernels: list = dc_field(default_factory=list)
    degenerate_at: Optional[int] = None
    fault_fired_at: Optional[int] = None

    @property
    def completed(self) -> bool:
        return self.degenerate_at is None


class StrategyError(ValueError):
    """The strategy does not drive the chain through every leaf exactly once."""


def xisog3(K: XPoint) -> IsogenyStep:
    """3-isogeny from the order-3 kernel x(K); codomain in (alpha : beta) form.

    alpha' = (X - Z)(3X + Z)^3, beta' = (X + Z)(3X - Z)^3.
    """
    X, Z = K.X, K.Z
    k1 = X - Z
    k2 = X + Z
    t = X + X + X
    u = t + Z
    v = t - Z
    alpha = k1 * u.sqr() * u
    beta = k2 * v.sqr() * v
    return IsogenyStep(3, ProjCoeff(alpha, beta), (k1, k2))


def xeval3(Q: XPoint, step: IsogenyStep) -> XPoint:
    """Push x(Q) through a 3-isogeny: x' = x (x*xK - 1)^2 / (x - xK)^2."""
    k1, k2 = step.eval_data
    t0 = k1 * (Q.X + Q.Z)
    t1 = k2 * (Q.X - Q.Z)
    return XPoint(Q.X * (t0 + t1).sqr(), Q.Z * (t0 - t1).sqr())


def xisog4(K: XPoint) -> IsogenyStep:
    """4-isogeny from the order-4 kernel x(K) with x(K) != +-1."""
    X, Z = K.X, K.Z
    x2 = X.sqr()
    z2 = Z.sqr()
    alpha = (x2 + x2).sqr()  # 4 X^4 = A' + 2C'
    c24 = (z2 + z2).sqr()  # 4 Z^4 = 4 C'
    zz2 = z2 + z2
    return IsogenyStep(4, ProjCoeff(alpha, alpha - c24), (zz2 + zz2, X - Z, X + Z))


def xeval4(Q: XPoint, step: IsogenyStep) -> XPoint:
    k1, k2, k3 = step.eval_data
    t0 = Q.X + Q.Z
    t1 = Q.X - Q.Z
    xq = t0 * k2
    zq = t1 * k3
    t0 = t0 * t1 * k1
    t1 = (xq + zq).sqr()
    zq = (xq - zq).sqr()
    return XPoint((t0 + t1) * t1, zq * (zq - t0))


def _has_order_3(R: XPoint, coeff: ProjCoeff) -> bool:
    """Exact order 3: R is a finite point and [3]R is infinity."""
    if R.Z.is_zero():
        return False  # infinity or the degenerate (0,0)
    return xtpl(R, coeff).is_infinity()


def _has_order_4(R: XPoint, coeff: ProjCoeff) -> bool:
    """Exact order 4 with x != +-1 (the kernels the 4-isogeny formulas take)."""
    if R.Z.is_zero():
        return False
    if (R.X - R.Z).is_zero() or (R.X + R.Z).is_zero():
        return False  # kernel above (0, 0): outside the formulas' domain
    R2 = xdbl(R, coeff)
    if R2.Z.is_zero():
        return False
    return xdbl(R2, coeff).is_infinity()


def strategy_eval3(
    R: XPoint,
    coeff: ProjCoeff,
    strategy: Sequence[int],
    push_points: Sequence[XPoint] = (),
    hook: Optional[FaultHook] = None,
) -> tuple[ProjCoeff, list, ChainTrace]:
    """Compute the 3^n-isogeny with kernel <R> as n sequential 3-isogenies,
    n = len(strategy) + 1, optionally pushing auxiliary points through every
    step and applying the fault hook to freshly computed coefficients.

    Every step's kernel is order-3 checked first; a failure (possible after a
    fault) marks the trace degenerate and returns early instead of raising.
    """
    n = len(strategy) + 1
    trace = ChainTrace(coeffs=[coeff])
    pushed = list(push_points)
    stack: list[tuple[XPoint, int]] = []
    i = 0
    k = 0
    for row in range(1, n + 1):
        while i < n - row:
            stack.append((R, i))
            m = strategy[k]
            k += 1
            R = xtpl_e(R, coeff, m)
            i += m
        trace.kernels.append(R)
        if not _has_order_3(R, coeff):
            trace.degenerate_at = row - 1
            return coeff, pushed, trace
        step = xisog3(R)
        coeff = step.new_coeff
        if hook is not None:
            coeff = hook.maybe_fire(row - 1, coeff)
            if hook.fired and trace.fault_fired_at is None:
                trace.fault_fired_at = row - 1
        trace.coeffs.append(coeff)
        if row < n:
            stack = [(xeval3(pt, step), idx) for pt, idx in stack]
            R, i = stack.pop()
        if pushed:
            pushed = [xeval3(pt, step) for pt in pushed]
    return coeff, pushed, trace


def strategy_eval4(
    R: XPoint,
    coeff: ProjCoeff,
    strategy: Sequence[int],
    push_points: Sequence[XPoint] = (),
) -> tuple[ProjCoeff, list, ChainTrace]:
    """2^(2n)-isogeny with kernel <R> as n 4-isogenies, n = len(strategy) + 1.

    Mirrors strategy_eval3 with doublings in place of triplings; no fault
    hook (the 2-power side is not a fault target here).
    """
    n = len(strategy) + 1
    trace = ChainTrace(coeffs=[coeff])
    pushed = list(push_points)
    stack: list[tuple[XPoint, int]] = []
    i = 0
    k = 0
    for row in range(1, n + 1):
        while i < n - row:
            stack.append((R, i))
            m = strategy[k]
            k += 1
            R = xdbl_e(R, coeff, 2 * m)
            i += m
        trace.kernels.append(R)
        if not _has_order_4(R, coeff):
            trace.degenerate_at = row - 1
            return coeff, pushed, trace
        step = xisog4(R)
        coeff = step.new_coeff
        trace.coeffs.append(coeff)
        if row < n:
            stack = [(xeval4(pt, step), idx) for pt, idx in stack]
            R, i = stack.pop()
        if pushed:
            pushed = [xeval4(pt, step) for pt in pushed]
    return coeff, pushed, trace


def validate_strategy(strategy: Sequence[int], n: int) -> bool:
    """Replay the index bookkeeping: every leaf visited exactly once."""
    if n < 1 or len(strategy) != n - 1:
        return False
    stack: list[int] = []
    i = 0
    k = 0
    for row in range(1, n + 1):
        while i < n - row:
            stack.append(i)
            if k >= len(strategy) or strategy[k] <= 0:
                return False
            i += strategy[k]
            k += 1
        if i != n - row:
            return False  # overshot a leaf
        if row < n:
            if not stack:
                return False
            i = stack.pop()
    return not stack and k == len(strategy)


def balanced_strategy(n: int, cost_mul: float = 1.0, cost_isog: float = 1.0) -> list[int]:
    """Minimum-cost strategy for an n-leaf chain under the usual recursion:
    splitting at b costs C(n-b) + C(b) + b*cost_mul + (n-b)*cost_isog.

    Ties break toward the smallest split so runs are reproducible.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    S: dict[int, list[int]] = {1: []}
    C: dict[int, float] = {1: 0.0}
    for size in range(2, n + 1):
        best_b, best_cost = None, None
        for b in range(1, size):
            cost = C[size - b] + C[b] + b * cost_mul + (size - b) * cost_isog
            if best_cost is None or cost < best_cost:
                best_b, best_cost = b, cost
        S[size] = [best_b] + S[size - best_b] + S[best_b]
        C[size] = best_cost
    strategy = S[n]
    if not validate_strategy(strategy, n):
        raise StrategyError(f"internal: invalid strategy for n={n}")
    return strategy

"""The fault oracle: run the victim's derive with one injected coefficient
zeroing and report whether the chain still looks supersingular.

The verdict combines (a) the per-step kernel order checks the chain evaluator
already performs (a faulted coefficient outside GF(p) derails the very next
kernel) and (b) a final-curve spot check that three random on-curve points
are annihilated by p + 1.  Honest GF(p)-coefficient faults are literal
no-ops, so the whole run, including the final j-invariant, is unchanged.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .field import Fp2Field
from .isogeny import ChainTrace, FaultHook, balanced_strategy, strategy_eval3
from .montgomery import (
    DegenerateCoefficientError,
    MontgomeryCurve,
    affine_a_from_projective,
    coeff_from_a,
    coeff_in_fp,
    ladder3pt,
    xdbl_e,
    xpoint_from_affine,
    xtpl_e,
)
from .protocol import BOB, InconsistentPublicKeyError, PublicKey, SidhParams, derive_with_trace, get_a

SPOT_CHECK_POINTS = 3


@dataclass(frozen=True, slots=True)
class OracleVerdict:
    """bit = 1 iff the faulted run kept every kernel order-3 and the final
    curve passed the supersingularity spot check."""

    bit: int
    failure_step: Optional[int] = None
    trace: Optional[ChainTrace] = None


def oracle(
    params: SidhParams,
    sk_bob: int,
    pk: PublicKey,
    i: int,
    keep_trace: bool = False,
    seed: Optional[int] = None,
) -> OracleVerdict:
    """O_sk(pk, i): victim derive with the (i+1)-th 3-isogeny output
    coefficient's imaginary parts zeroed.

    Every malformed pk maps to bit 0 with diagnostics; only an out-of-range
    i is rejected up front.  Deterministic: the spot-check randomness is
    derived from (pk, i) unless an explicit seed is supplied.
    """
    if not 0 <= i <= params.e3 - 2:
        raise ValueError(f"fault index {i} outside [0, e3 - 2]")
    hook = FaultHook(target_index=i)
    try:
        final, trace = derive_with_trace(params, BOB, sk_bob, pk, hook)
    except (InconsistentPublicKeyError, ZeroDivisionError):
        return OracleVerdict(bit=0, failure_step=-1)
    if not trace.completed:
        return OracleVerdict(
            bit=0,
            failure_step=trace.degenerate_at,
            trace=trace if keep_trace else None,
        )
    if seed is None:
        seed = _spot_seed(params, pk, i)
    good = _supersingular_spot_check(params, final, random.Random(seed))
    return OracleVerdict(
        bit=1 if good else 0,
        failure_step=None if good else params.e3,
        trace=trace if keep_trace else None,
    )


def make_oracle(params: SidhParams, sk_bob: int) -> Callable[[PublicKey, int], int]:
    """Close over a fixed static key; the attack only ever sees the bit."""

    def _oracle(pk: PublicKey, i: int) -> int:
        return oracle(params, sk_bob, pk, i).bit

    return _oracle


def _spot_seed(params: SidhParams, pk: PublicKey, i: int) -> int:
    F = params.field
    material = "|".join((F.encode(pk.xP), F.encode(pk.xQ), F.encode(pk.xPQ), str(i)))
    return int.from_bytes(hashlib.sha256(material.encode()).digest()[:8], "big")


def _supersingular_spot_check(params: SidhParams, coeff, rng: random.Random) -> bool:
    """Sample on-curve points and require [p+1]P = [2^e2][3^e3]P = infinity."""
    try:
        A = affine_a_from_projective(coeff)
    except DegenerateCoefficientError:
        return False
    F = params.field
    try:
        E = MontgomeryCurve(A, F)
    except ValueError:
        return False
    cc = coeff_from_a(A, F)
    checked = 0
    tries = 0
    while checked < SPOT_CHECK_POINTS and tries < 100 * SPOT_CHECK_POINTS:
        tries += 1
        x = F.random_element(rng)
        if x.is_zero() or not F.is_square(E.rhs(x)):
            continue
        pt = xpoint_from_affine(x, F)
        out = xtpl_e(xdbl_e(pt, cc, params.e2), cc, params.e3)
        if not out.is_infinity():
            return False
        checked += 1
    return checked == SPOT_CHECK_POINTS


def debug_assert_forced_curve(params: SidhParams, sk_prefix: int, pk: PublicKey, i: int) -> bool:
    """Replay the victim's first i steps on pk (kernel [3^(e3-i)](P'+[sk]Q'),
    which the forger arranged to be the backtracking walk) and confirm the
    i-th codomain is exactly the A = 6 curve.  Test instrumentation only;
    the oracle's verdict never calls this.
    """
    F = params.field
    A = get_a(pk, F)
    if i == 0:
        return A == F(6)
    coeff = coeff_from_a(A, F)
    xP = xpoint_from_affine(pk.xP, F)
    xQ = xpoint_from_affine(pk.xQ, F)
    xD = xpoint_from_affine(pk.xPQ, F)
    kernel = xtpl_e(ladder3pt(sk_prefix, xP, xQ, xD, coeff), coeff, params.e3 - i)
    final, _, trace = strategy_eval3(kernel, coeff, balanced_strategy(i))
    if not trace.completed:
        return False
    return affine_a_from_projective(final) == F(6)


def dump_chain_trace(trace: ChainTrace, field: Fp2Field) -> str:
    """Line-oriented trace dump: index, alpha, beta, affine A, GF(p) flag."""
    lines = []
    for idx, coeff in enumerate(trace.coeffs):
        try:
            a_str = field.encode(affine_a_from_projective(coeff))
            fp_flag = "fp" if coeff_in_fp(coeff) else "fp2"
        except DegenerateCoefficientError:
            a_str, fp_flag = "-", "degenerate"
        lines.append(
            f"{idx} alpha={field.encode(coeff.alpha)} beta={field.encode(coeff.beta)} "
            f"A={a_str} {fp_flag}"
        )
    if trace.fault_fired_at is not None:
        lines.append(f"fault_at={trace.fault_fired_at}")
    if trace.degenerate_at is not None:
        lines.append(f"degenerate_at={trace.degenerate_at}")
    return "\n".join(lines)

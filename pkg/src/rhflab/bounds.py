"""Closed-form bound constants c0, a0, b and c, plus the alpha-decay term.

Every function returns the s = 0 (or T = 0) value without evaluating an
exponential, so the closed forms are reproduced exactly.
"""
import math

PI2 = math.pi**2


def bound_c0(chi, C, alpha, A1, vol0, int_f0, s):
    """c0 = 256 pi^2 chi (e^{36Cs}-1)/(36C) + 104 alpha^2 A1^2 Vol0 (e^{35Cs}-e^{Cs})/(35C)
    + e^{37Cs} alpha A1 Vol0 + e^{36Cs} int f0."""
    if not C > 0:
        raise ValueError(f"c0 needs C > 0 (got {C}); C <= 0 is unsupported, use a0 when min S(0) > 0")
    if s == 0:
        return alpha * A1 * vol0 + int_f0
    e36 = math.exp(36 * C * s)
    return (
        256 * PI2 * chi / (36 * C) * (e36 - 1)
        + 104 * alpha**2 * A1**2 * vol0 / (35 * C) * (math.exp(35 * C * s) - math.exp(C * s))
        + math.exp(37 * C * s) * alpha * A1 * vol0
        + e36 * int_f0
    )


def bound_a0(chi, alpha, A1, vol0, int_sic2_over_s0, s):
    return 256 * PI2 * chi * s + 104 * (alpha * A1) ** 2 * vol0 * s + alpha * A1 * vol0 + int_sic2_over_s0


def bound_b(int_sic2_0, chi, alpha, A1, vol0, s):
    aa = alpha * A1
    if s == 0:
        return 9 * int_sic2_0 + 9 * aa * vol0
    e88 = math.exp(88 * s)
    return (
        9 * e88 * int_sic2_0
        + 1152 / 88 * PI2 * chi * (e88 - 1)
        + 468 / 86 * aa**2 * vol0 * (e88 - math.exp(2 * s))
        + 9 * aa * vol0 * math.exp(90 * s)
    )


def bound_c(int_sic2_0, chi, alpha, A1, vol0, T):
    aa = alpha * A1
    inner = int_sic2_0 + PI2 * abs(chi) + (aa**2 + aa) * vol0
    return 9 * inner if T == 0 else 9 * math.exp(90 * T) * inner


def alpha_decay_term(C, s, decay_integral):
    """e^{36Cs} times the given value of int_0^s (-alpha') int (S+C)^4 dV dt."""
    return decay_integral if s == 0 else math.exp(36 * C * s) * decay_integral

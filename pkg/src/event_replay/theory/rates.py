"""Oversampling-rate arithmetic: Lambert W, history-length bounds,
iteration complexity.

All logarithms are natural.  ``m`` measures the oversampling exponent: a
stratified mix whose event tables hold histories of length at most
``tau_bound(m, ...)`` samples their states at least ``(1 - eta) ** -m``
times as often as the default table alone.
"""

from __future__ import annotations

import math


def lambert_w0(x: float, tol: float = 1e-12, max_iter: int = 100) -> float:
    """Principal Lambert W branch for x >= 0 via Halley iteration.

    Solves ``w * exp(w) = x``.  Converges when the residual drops below
    ``tol`` in absolute terms for moderate x, relative terms for large x
    (float64 cannot represent an absolute 1e-12 residual once x outgrows
    ~1e4).
    """
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"lambert_w0 handles finite x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < math.e:
        w = math.log1p(x) * 0.75
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    limit = tol * max(1.0, x)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= limit:
            return w
        wp1 = w + 1.0
        w = w - f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    raise RuntimeError(f"lambert_w0 did not converge for x={x}")


def tau_bound(m: float, eta: float, n: int, mu: float) -> float:
    """Largest event-history length that still yields (1-eta)^-m oversampling."""
    _check_rate_args(eta, n, mu)
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    return (1.0 - eta) ** m / ((m + 1.0) * n * mu)


def m_exact(eta: float, n: int, tau: float, mu: float) -> float:
    """Oversampling exponent at which ``tau_bound`` equals ``tau``.

    Inverts the bound with the principal Lambert W branch.  The result can
    be negative when ``tau`` exceeds the m = 0 bound, meaning no
    oversampling guarantee holds for these parameters.
    """
    _check_rate_args(eta, n, mu)
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    a = 1.0 / (1.0 - eta)
    ln_a = math.log(a)
    x = a * ln_a / (n * tau * mu)
    return lambert_w0(x) / ln_a - 1.0


def m_asymptotic(tau: float, mu: float) -> float:
    """Small-mu companion of :func:`m_exact`: ``-ln(tau mu) - ln(-ln(tau mu))``.

    Valid for ``tau * mu < 1/e``.  Matches ``m_exact`` as mu -> 0 when the
    event proportion satisfies ``ln(1 / (1 - eta)) = 1``, i.e.
    ``eta = 1 - 1/e``, the proportion at which the exact rate's log base
    drops out.
    """
    z = tau * mu
    if not 0.0 < z < 1.0 / math.e:
        raise ValueError(f"tau * mu must lie in (0, 1/e), got {z}")
    neg_log = -math.log(z)
    return neg_log - math.log(neg_log)


def sample_complexity(gamma: float, eps: float, c_b: float, l_b: float) -> float:
    """Iteration count for target-based Q-learning to reach sup-norm eps.

    ``c_b`` and ``l_b`` are the minimum and maximum probabilities of
    drawing each state-action pair from the buffer distribution.  Uses the
    step-size schedule of :func:`step_size_constants` and natural logs.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if not 0.0 < eps <= 1.0 / (1.0 - gamma):
        raise ValueError(f"eps must lie in (0, 1/(1-gamma)], got {eps}")
    if not 0.0 < c_b <= l_b <= 1.0:
        raise ValueError(f"need 0 < c_b <= l_b <= 1, got c_b={c_b}, l_b={l_b}")
    lead = 832.0 * gamma ** 2 / ((1.0 - gamma) ** 5 * eps ** 2)
    return lead * math.log(4.0 / ((1.0 - gamma) * eps)) * l_b / c_b ** 3


def step_size_constants(gamma: float, c_b: float, l_b: float) -> tuple[float, float]:
    """(alpha, lam) for the schedule alpha_t = alpha / (lam + t).

    alpha = 2 / c_b and lam = 13 gamma^2 l_b / (2 c_b^2), the constants
    under which the complexity bound of :func:`sample_complexity` holds.
    """
    if not 0.0 < c_b <= l_b <= 1.0:
        raise ValueError(f"need 0 < c_b <= l_b <= 1, got c_b={c_b}, l_b={l_b}")
    alpha = 2.0 / c_b
    lam = 13.0 * gamma ** 2 * l_b / (2.0 * c_b ** 2)
    return alpha, lam


def _check_rate_args(eta: float, n: int, mu: float) -> None:
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")

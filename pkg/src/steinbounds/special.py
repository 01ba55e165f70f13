"""Scalar special-function kernel.

Everything here is a thin, contract-checked layer over ``scipy.special``:
gamma and log-gamma, double factorials, Pochhammer products, modified
Bessel functions (plus log-space variants for tail quadrature), the
confluent hypergeometric U function on the parameter slice we actually
use, and the standard normal pdf/cdf/Mill's-ratio triple.

All functions are pure and reentrant.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)

_GAMMA_OVERFLOW = 171.62  # gamma(x) overflows double precision above this


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x`` away from the non-positive integers.

    Relative error <= 1e-12 on [1e-3, 170]. Raises instead of returning
    inf/nan so pole and overflow bugs surface at the call site; use
    :func:`log_gamma` above the representable range.
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma_fn pole at non-positive integer x={x}")
    if x > _GAMMA_OVERFLOW:
        raise OverflowError(f"gamma_fn({x}) overflows double precision; use log_gamma")
    return float(_sp.gamma(x))


def log_gamma(x: float) -> float:
    """log(Gamma(x)) for x > 0."""
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return float(_sp.gammaln(x))


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1.

    Returns an exact Python integer (callers needing floats coerce).
    """
    if n < -1:
        raise ValueError(f"double_factorial requires n >= -1, got {n}")
    if n in (-1, 0):
        return 1
    return math.prod(range(n, 0, -2))


def log_double_factorial(n: int) -> float:
    """log(n!!), safe for n far beyond the float overflow threshold."""
    if n < -1:
        raise ValueError(f"log_double_factorial requires n >= -1, got {n}")
    if n in (-1, 0):
        return 0.0
    return math.fsum(math.log(k) for k in range(n, 0, -2))


def pochhammer_k(x: float, n: int, k: float) -> float:
    """Step-k rising product x (x+k) (x+2k) ... (x+(n-1)k); 1 when n = 0.

    Falls back to log-space accumulation with sign tracking when the
    running product leaves double range (factorial-type growth shows up
    in high-order bound sweeps).
    """
    if n < 0:
        raise ValueError(f"pochhammer_k requires n >= 0, got {n}")
    out = 1.0
    for i in range(n):
        out *= x + i * k
        if math.isinf(out):
            return _signed_exp_sum(x + j * k for j in range(n))
    return out


def pochhammer(x: float, n: int) -> float:
    """Rising factorial (x)_n; the k = 1 Pochhammer product."""
    return pochhammer_k(x, n, 1.0)


def _signed_exp_sum(factors) -> float:
    """Product of reals via sum of logs, tracking sign; inf on true overflow."""
    sign = 1.0
    logs = []
    for f in factors:
        if f == 0.0:
            return 0.0
        if f < 0.0:
            sign = -sign
            f = -f
        logs.append(math.log(f))
    total = math.fsum(logs)
    if total > 709.0:
        return sign * math.inf
    return sign * math.exp(total)


def product(factors) -> float:
    """Overflow-guarded product of nonnegative factors (empty product = 1)."""
    factors = list(factors)
    out = 1.0
    for f in factors:
        out *= f
    if math.isinf(out) or (out == 0.0 and all(f != 0.0 for f in factors)):
        return _signed_exp_sum(factors)
    return out


def bessel_i(nu: float, x):
    """Modified Bessel function of the first kind I_nu(x), x >= 0.

    Relative error <= 1e-10 for 1e-8 <= x <= 700 and |nu| <= 60; larger
    arguments overflow and should go through :func:`log_bessel_i`.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise ValueError("bessel_i requires x >= 0")
    out = _sp.iv(nu, x_arr)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind K_nu(x), x > 0.

    K is symmetric in the order (K_nu = K_{-nu}); diverges as x -> 0.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("bessel_k requires x > 0 (K diverges at the origin)")
    out = _sp.kv(nu, x_arr)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def log_bessel_i(nu: float, x):
    """log I_nu(x) via the exponentially scaled ive; safe for huge x."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise ValueError("log_bessel_i requires x >= 0")
    out = np.log(_sp.ive(nu, x_arr)) + x_arr
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def log_bessel_k(nu: float, x):
    """log K_nu(x) via the exponentially scaled kve; safe for huge x."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("log_bessel_k requires x > 0")
    out = np.log(_sp.kve(nu, x_arr)) - x_arr
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


# Parameter slice on which hyp_u is validated: a = s - 1, b = 1/2 with
# s in {1/2} union [1, 20]. Generality is a non-goal.
_HYP_U_B = 0.5


def _hyp_u_scalar(a: float, x: float) -> float:
    """U(a, 1/2, x) for a > 0 through the real integral representation.

    Direct library evaluation dips to ~3e-8 relative in a transition
    region for fractional a; splitting the integral at t = 1 with an
    algebraic endpoint weight keeps this path at ~1e-11.
    """
    import warnings

    from scipy import integrate as _integrate

    def body(t):
        return math.exp(-x * t) * (1.0 + t) ** (-a - 0.5)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        head, _ = _integrate.quad(body, 0.0, 1.0, weight="alg", wvar=(a - 1.0, 0.0),
                                  epsabs=0.0, epsrel=1e-12, limit=300)
        tail, _ = _integrate.quad(lambda t: body(t) * t ** (a - 1.0), 1.0, math.inf,
                                  epsabs=1e-300, epsrel=1e-12, limit=300)
    return (head + tail) * math.exp(-_sp.gammaln(a))


def hyp_u(a: float, b: float, x) -> float:
    """Confluent hypergeometric U(a, b, x) on the validated slice.

    Accuracy 1e-8 relative for b = 1/2, a in {-1/2} union [0, 19], x > 0.
    Anything else raises: accuracy is only certified there.
    """
    if b != _HYP_U_B:
        raise ValueError(f"hyp_u validated only for b = {_HYP_U_B}, got b={b}")
    if not (a == -0.5 or 0.0 <= a <= 19.0):
        raise ValueError(f"hyp_u validated only for a in {{-1/2}} U [0, 19], got a={a}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("hyp_u requires x > 0")
    if a == 0.0:
        out = np.ones_like(x_arr)
    elif a == -0.5:
        out = np.sqrt(x_arr)
    else:
        out = np.vectorize(lambda t: _hyp_u_scalar(a, t))(x_arr)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def norm_pdf(x):
    x_arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x_arr * x_arr) / SQRT_2PI
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def norm_cdf(x):
    out = _sp.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def mills_ratio(x):
    """(1 - Phi(x)) / phi(x) through erfcx: accurate arbitrarily far into
    the right tail (overflows to inf deep in the left tail)."""
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = SQRT_PI_OVER_2 * _sp.erfcx(x_arr / math.sqrt(2.0))
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def std_normal(x):
    """Standard normal triple (pdf, cdf, Mill's ratio) at ``x``."""
    return norm_pdf(x), norm_cdf(x), mills_ratio(x)

"""Closed-form bound evaluators and the bound dispatch front end.

Every family stores BOTH an engine scheme (see :mod:`catalog`) and the
explicit product/double-factorial formula for the same chain, evaluated
here without touching the generic engine.  Their coefficient-by-
coefficient agreement is a test, not an assumption.

Also hosts the bound machinery that falls outside the three generic
chains: the quartic-tail family, the multivariate normal estimates, the
one-step gamma bound and the literature bounds for the normal family.
"""

from __future__ import annotations

import itertools
import math

from . import catalog as cat
from . import special as sf
from .engine import (
    BoundCoefficients,
    NormSymbol,
    deriv_coupled_bound,
    index_set,
    mixed_coupled_bound,
    value_coupled_bound,
)
from .errors import ValidityError

__all__ = [
    "closed_form_bound",
    "bound_for",
    "gamma_onestep_bound",
    "quartic_bounds",
    "mvn_bounds",
    "normal_literature_bound",
    "MODE_TOKENS",
]

SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)


def _rising(lo: int, hi: int) -> float:
    """Product lo * (lo+1) * ... * hi (1 when empty)."""
    return sf.product(range(lo, hi + 1))


def _sym(j: int, centered: bool = True) -> NormSymbol:
    if j == 0:
        return NormSymbol.centered() if centered else NormSymbol.plain()
    return NormSymbol.test_deriv(j)


# ---------------------------------------------------------------------------
# Family closed forms.
# ---------------------------------------------------------------------------


def _normal_closed(n: int, mode: str) -> BoundCoefficients:
    out = {}
    if mode == "i":
        for j in range(n + 1):
            out[_sym(j)] = (math.pi / 2.0) ** ((n - j + 1) / 2.0) * _rising(j + 1, n)
    elif mode == "ii" and n % 2 == 1:
        k = (n - 1) // 2
        for j in range(k + 1):
            out[_sym(2 * j)] = 2.0 ** (k - j + 1) * sf.double_factorial(2 * k) / sf.double_factorial(2 * j)
    elif mode == "ii":
        k = n // 2
        for j in range(1, k + 1):
            out[_sym(2 * j - 1)] = (
                2.0 ** (k - j + 1) * sf.double_factorial(2 * k - 1) / sf.double_factorial(2 * j - 1)
            )
        out[NormSymbol.centered()] = out.get(NormSymbol.centered(), 0.0) + (
            SQRT_PI_OVER_2 * 2.0 ** k * sf.double_factorial(2 * k - 1)
        )
    else:
        raise ValueError(f"normal closed form: unknown mode {mode!r}")
    return BoundCoefficients(out)


def _gamma_closed(n: int, r: float, lam: float) -> BoundCoefficients:
    log_c = [(r + i) + sf.log_gamma(r + i) - (r + i) * math.log(r + i) for i in range(n + 1)]
    out = {}
    for j in range(n + 1):
        out[_sym(j)] = lam ** (n - j) * _rising(j + 1, n) * math.exp(math.fsum(log_c[j:]))
    return BoundCoefficients(out)


def gamma_onestep_bound(n: int, r: float) -> BoundCoefficients:
    """Single-coefficient bound 2 e^(r+n) Gamma(r+n) / (r+n)^(r+n) on the
    n-th test-derivative norm (valid for n >= 1; rate-independent of lam)."""
    if n < 1:
        raise ValidityError("the one-step gamma bound starts at order 1")
    return BoundCoefficients({NormSymbol.test_deriv(n): 2.0 * cat.gamma_solution_constant(r + n)})


def _beta_closed(n: int, mode: str, alpha: float, beta: float) -> BoundCoefficients:
    out = {}
    if mode == "i":
        consts = [cat.beta_solution_constant(alpha + i, beta + i) for i in range(n + 1)]
        for j in range(n + 1):
            out[_sym(j)] = sf.product(consts[j:]) * _rising(j + 1, n) * sf.pochhammer(alpha + beta + j, n - j)
    elif mode == "iii":
        if n < 1:
            raise ValidityError("the Lipschitz chain starts at order 1")
        consts = [cat.beta_lipschitz_constant(alpha + i, beta + i) for i in range(n)]
        for j in range(1, n + 1):
            out[_sym(j)] = (
                sf.product(consts[j - 1:])
                * _rising(j, n - 1)
                * sf.pochhammer(alpha + beta + j - 1, n - j)
            )
    else:
        raise ValueError(f"beta closed form: unknown mode {mode!r}")
    return BoundCoefficients(out)


def _student_t_closed(n: int, mode: str, d: float, delta: float) -> BoundCoefficients:
    out = {}
    if mode == "i":
        if d - 2 * n <= 0:
            raise ValidityError(f"student-t needs d - 2n > 0 (d={d}, n={n})")
        log_ratio = [sf.log_gamma(d / 2.0 - i) - sf.log_gamma((d + 1.0) / 2.0 - i) for i in range(n + 1)]
        for j in range(n + 1):
            a_j = math.exp(math.fsum(log_ratio[j:]))
            out[_sym(j)] = (
                (math.sqrt(math.pi) / (2.0 * delta)) ** (n + 1 - j)
                * _rising(j + 1, n)
                * sf.pochhammer(d - n, n - j)
                * a_j
            )
    elif mode == "ii":
        if d - 2 * (n - 1) <= 0:
            raise ValidityError(f"student-t needs d - 2(n-1) > 0 (d={d}, n={n})")
        q = 2.0 / (delta * delta)
        if n % 2 == 1:
            k = (n - 1) // 2
            for j in range(k + 1):
                out[_sym(2 * j)] = (
                    q ** (k - j + 1)
                    * sf.double_factorial(2 * k) / sf.double_factorial(2 * j)
                    * sf.pochhammer_k(d - 2 * k, k - j, 2.0)
                )
        else:
            k = n // 2
            for j in range(1, k + 1):
                out[_sym(2 * j - 1)] = (
                    q ** (k - j + 1)
                    * sf.double_factorial(2 * k - 1) / sf.double_factorial(2 * j - 1)
                    * sf.pochhammer_k(d - 2 * k + 1, k - j, 2.0)
                )
            out[NormSymbol.centered()] = out.get(NormSymbol.centered(), 0.0) + (
                cat.student_t_solution_constant(d, delta)
                * q ** k
                * sf.double_factorial(2 * k - 1)
                * sf.pochhammer_k(d - 2 * k + 1, k, 2.0)
            )
    else:
        raise ValueError(f"student-t closed form: unknown mode {mode!r}")
    return BoundCoefficients(out)


def _inverse_gamma_closed(n: int, alpha: float, beta: float) -> BoundCoefficients:
    if alpha <= 2 * n + 1:
        raise ValidityError(f"inverse-gamma needs alpha > 2n + 1 (alpha={alpha}, n={n})")
    log_c = [
        sf.log_gamma(alpha - 2 * i) - math.log(beta)
        + (alpha - 2 * i - 1.0) * (1.0 - math.log(alpha - 2 * i - 1.0))
        for i in range(n + 1)
    ]
    out = {}
    for j in range(n + 1):
        out[_sym(j)] = _rising(j + 1, n) * sf.pochhammer(alpha - n, n - j) * math.exp(math.fsum(log_c[j:]))
    return BoundCoefficients(out)


def _prr_closed(n: int, mode: str, s: float) -> BoundCoefficients:
    out = {}
    if mode == "i":
        if s < 1.0:
            raise ValidityError("prr first-derivative chain requires s >= 1")
        for j in range(n):
            out[_sym(j, centered=False)] = _rising(j + 1, n - 1) * (2.0 * math.pi) ** ((n - j) / 2.0)
    elif mode == "ii":
        c = cat.prr_second_derivative_constant(s)
        if n % 2 == 1:
            k = (n - 1) // 2
            for j in range(1, k + 1):
                out[_sym(2 * j - 1)] = (
                    c ** (k - j + 1) * sf.double_factorial(2 * k - 1) / sf.double_factorial(2 * j - 1)
                )
            tail = c ** k * sf.double_factorial(2 * k - 1)
            if s >= 1.0:
                out[NormSymbol.plain()] = out.get(NormSymbol.plain(), 0.0) + SQRT_2PI * tail
            else:
                out[NormSymbol.solution_deriv()] = tail
        else:
            k = n // 2
            for j in range(k):
                out[_sym(2 * j, centered=False)] = (
                    c ** (k - j) * sf.double_factorial(2 * k - 2) / sf.double_factorial(2 * j)
                )
    else:
        raise ValueError(f"prr closed form: unknown mode {mode!r}")
    return BoundCoefficients(out)


def _vg_symmetric_closed(n: int, r: float, sigma: float) -> BoundCoefficients:
    """theta = 0 variance-gamma chain (first-derivative base constants)."""
    q = 2.0 / (sigma * sigma)
    out = {}
    if n % 2 == 1:
        k = (n - 1) // 2
        for j in range(k + 1):
            out[_sym(2 * j)] = (
                q ** (k - j + 1)
                * sf.double_factorial(2 * k) / sf.double_factorial(2 * j)
                / sf.pochhammer_k(r + 2 * j, k - j + 1, 2.0)
            )
    else:
        k = n // 2
        for j in range(1, k + 1):
            out[_sym(2 * j - 1)] = (
                q ** (k - j + 1)
                * sf.double_factorial(2 * k - 1) / sf.double_factorial(2 * j - 1)
                / sf.pochhammer_k(r + 2 * j - 1, k - j + 1, 2.0)
            )
        out[NormSymbol.centered()] = out.get(NormSymbol.centered(), 0.0) + (
            cat.vg_symmetric_solution_constant(r, sigma)
            * q ** k
            * sf.double_factorial(2 * k - 1)
            / sf.pochhammer_k(r + 1, k, 2.0)
        )
    return BoundCoefficients(out)


def _vg_general_subsets(m: int, j: int, l: int):
    """Brute-force subset families (independent of the engine's enumerator)."""
    lo, hi = m - j, m
    for combo in itertools.combinations(range(lo, hi + 1), l):
        members = set(combo)
        if lo not in members or hi not in members:
            continue
        if all(i in members or (i + 1) in members for i in range(lo, hi)):
            yield members


def _vg_general_closed(n: int, r: float, theta: float, sigma: float) -> BoundCoefficients:
    """General-theta variance-gamma bound on ||f^(n)|| (n >= 2), evaluated
    straight from the displayed subset-family formula."""
    if n < 2:
        raise ValidityError("the mixed-coupling display starts at order 2")
    m = n - 1
    s2 = sigma * sigma
    root = math.sqrt(theta * theta + sigma * sigma)
    b = [2.0 / (r + i) + cat.vg_scale_constant(r + i, theta, sigma) for i in range(m + 1)]

    def a_sum(j: int) -> float:
        total = 0.0
        for l in index_set(j):
            for members in _vg_general_subsets(m, j, l):
                prod = 1.0
                for i in members:
                    if i == m - j:
                        continue
                    prod *= (abs(theta) if (i - 1) in members else 1.0) * i * b[i] / s2
                total += prod
        return total

    out = {}
    for j in range(m):
        out[NormSymbol.test_deriv(m - j)] = b[m - j] / s2 * a_sum(j)
    out[NormSymbol.centered()] = (b[0] / s2) * (a_sum(m) + (b[1] / root) * a_sum(m - 1))
    return BoundCoefficients(out)


def closed_form_bound(spec: cat.DistributionSpec, n: int, mode: str) -> BoundCoefficients:
    """Explicit product-formula evaluation of a family chain bound.

    mode is the internal chain mode ("i", "ii", "iii", "mixed").  Raises
    ValidityError outside the family window.
    """
    fam, p = spec.family, spec.params
    if fam == "normal":
        return _normal_closed(n, mode)
    if fam in ("gamma", "exponential"):
        r = p.get("r", 1.0)
        return _gamma_closed(n, r, p["lam"])
    if fam in ("beta", "arcsine"):
        alpha = p.get("alpha", 0.5)
        beta = p.get("beta", 0.5)
        return _beta_closed(n, mode, alpha, beta)
    if fam == "student_t":
        return _student_t_closed(n, mode, p["d"], p["delta"])
    if fam == "inverse_gamma":
        return _inverse_gamma_closed(n, p["alpha"], p["beta"])
    if fam == "prr":
        return _prr_closed(n, mode, p["s"])
    if fam == "vg":
        if mode == "mixed":
            return _vg_general_closed(n, p["r"], p["theta"], p["sigma"])
        if p["theta"] != 0.0:
            raise ValidityError("the theta = 0 variance-gamma chain requires theta = 0")
        return _vg_symmetric_closed(n, p["r"], p["sigma"])
    raise ValueError(f"no closed form for family {fam!r}")


# ---------------------------------------------------------------------------
# Quartic-tail bounds.
# ---------------------------------------------------------------------------


def quartic_bounds(order: int, variant: str = "iterated") -> BoundCoefficients:
    """Sup-norm bounds for the quartic-tail family.

    variant "bounded": constant 1/(2 c1) times the order-n chain weights.
    variant "iterated": constant 2 times the order-(n-1) chain weights
    (tighter; order 0 falls back to "bounded").
    variant "lipschitz": the order-0..2 constants on ||h'||.
    variant "lipschitz_iterated": the order-2 constant 8 on ||h'|| that
    one chain step yields.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    c1 = cat.quartic_normalizer()
    if variant == "bounded" or (variant == "iterated" and order == 0):
        weights = cat.quartic_a_coeffs(order)
        return BoundCoefficients({_sym(j): w / (2.0 * c1) for j, w in enumerate(weights)})
    if variant == "iterated":
        weights = cat.quartic_a_coeffs(order - 1)
        return BoundCoefficients({_sym(j): 2.0 * w for j, w in enumerate(weights)})
    if variant == "lipschitz":
        table = {
            0: math.sqrt(3.0 * math.pi) / 2.0,
            1: math.sqrt(2.0) * 3.0 ** 0.25 * sf.gamma_fn(0.25),
            2: 4.0,
        }
        if order not in table:
            raise ValidityError("lipschitz constants listed for orders 0, 1, 2 only")
        return BoundCoefficients({NormSymbol.test_deriv(1): table[order]})
    if variant == "lipschitz_iterated":
        if order != 2:
            raise ValidityError("the iterated Lipschitz constant is a second-derivative bound")
        return BoundCoefficients({NormSymbol.test_deriv(1): 8.0})
    raise ValueError(f"unknown quartic variant {variant!r}")


# ---------------------------------------------------------------------------
# Multivariate normal bounds.
# ---------------------------------------------------------------------------


def mvn_bounds(n: int, row_norms, mode: str) -> BoundCoefficients:
    """Coefficient forms of the multivariate-normal estimates.

    row_norms are the covariance row norms [sum_j sigma_ij^2]^(1/2) for
    the differentiation directions.  "partial" gives 1/n on the n-th
    mixed partial of h; "first" gives the order-1 bound against ||h~||;
    "lower" trades one derivative for the smallest row norm; "iterated"
    is the identity-covariance second-derivative estimate obtained by one
    chain step.
    """
    row_norms = [float(v) for v in row_norms]
    if not row_norms or any(v < 0 for v in row_norms):
        raise ValueError("row_norms must be nonempty nonnegative reals")
    if mode == "partial":
        if n < 1:
            raise ValidityError("the flat partial-derivative bound starts at order 1")
        return BoundCoefficients({NormSymbol.test_deriv(n): 1.0 / n})
    if mode == "first":
        return BoundCoefficients({NormSymbol.centered(): SQRT_PI_OVER_2 * max(row_norms)})
    if mode == "lower":
        if n < 2:
            raise ValidityError("the derivative-trading bound starts at order 2")
        ratio = math.exp(sf.log_gamma(n / 2.0) - sf.log_gamma((n + 1.0) / 2.0)) / math.sqrt(2.0)
        return BoundCoefficients({NormSymbol.test_deriv(n - 1): ratio * min(row_norms)})
    if mode == "iterated":
        if n != 2:
            raise ValidityError("the iterated estimate is stated for the second derivatives")
        if any(abs(v - 1.0) > 1e-12 for v in row_norms):
            raise ValidityError("the iterated estimate assumes identity covariance")
        return BoundCoefficients(
            {NormSymbol.test_deriv(1): SQRT_PI_OVER_2, NormSymbol.centered(): math.pi / 2.0}
        )
    raise ValueError(f"unknown mvn mode {mode!r}")


# ---------------------------------------------------------------------------
# Normal-family literature bounds.
# ---------------------------------------------------------------------------


def normal_literature_bound(n: int, which: str) -> BoundCoefficients:
    """Sharp normal-family estimates quoted from prior work.

    which "next-over-n": ||f^(n)|| <= ||h^(n+1)|| / (n+1);
    "gamma-ratio":       ||f^(n)|| <= Gamma((n+1)/2)/(sqrt(2) Gamma(n/2+1)) ||h^(n+1)||;
    "two-prev":          ||f^(n)|| <= 2 ||h^(n-1)||  (n >= 2).
    """
    if which == "next-over-n":
        return BoundCoefficients({NormSymbol.test_deriv(n + 1): 1.0 / (n + 1)})
    if which == "gamma-ratio":
        ratio = math.exp(sf.log_gamma((n + 1.0) / 2.0) - sf.log_gamma(n / 2.0 + 1.0)) / math.sqrt(2.0)
        return BoundCoefficients({NormSymbol.test_deriv(n + 1): ratio})
    if which == "two-prev":
        if n < 2:
            raise ValidityError("the derivative-dropping estimate starts at order 2")
        sym = NormSymbol.test_deriv(n - 1) if n >= 2 else NormSymbol.centered()
        return BoundCoefficients({sym: 2.0})
    raise ValueError(f"unknown normal literature bound {which!r}")


# ---------------------------------------------------------------------------
# Mode-token dispatch (shared by the verifier and the CLI).
# ---------------------------------------------------------------------------

MODE_TOKENS = (
    "default",
    "lemma23i",
    "lemma23ii",
    "lemma23iii",
    "lemma24i",
    "lemma24ii",
    "lemma25",
    "onestep",
    "bounded",
    "iterated",
    "lipschitz",
    "lipschitz_iterated",
    "partial",
    "first",
    "lower",
    "next-over-n",
    "gamma-ratio",
    "two-prev",
)

_VALUE_TOKENS = {"lemma23i": "i", "lemma23ii": "ii", "lemma23iii": "iii"}
_DERIV_TOKENS = {"lemma24i": "i", "lemma24ii": "ii"}


def bound_for(spec: cat.DistributionSpec, n: int, mode: str | None = None) -> BoundCoefficients:
    """Bound on ||f^(n)|| for a catalog family under a mode token.

    Tokens lemma23*/lemma24*/lemma25 select the generic chains (they must
    match the family's coupling shape); family-specific tokens select the
    quartic, multivariate-normal, one-step gamma and normal literature
    bounds.  Raises ValidityError for orders outside the window.
    """
    if n < 0:
        raise ValidityError("derivative order must be >= 0")
    if mode is None or mode == "default":
        mode = spec.default_mode
    if mode in _VALUE_TOKENS:
        if spec.coupling_kind != "value" or _VALUE_TOKENS[mode] not in spec.engine_modes:
            raise ValidityError(f"{spec.family} does not support mode {mode}")
        spec.check_order(n, mode)
        return value_coupled_bound(spec.scheme(), _VALUE_TOKENS[mode], n)
    if mode in _DERIV_TOKENS:
        if spec.coupling_kind != "deriv" or _DERIV_TOKENS[mode] not in spec.engine_modes:
            raise ValidityError(f"{spec.family} does not support mode {mode}")
        spec.check_order(n, mode)
        if n == 0:
            raise ValidityError("the derivative-coupled chains start at order 1")
        return deriv_coupled_bound(spec.scheme(), _DERIV_TOKENS[mode], n)
    if mode == "lemma25":
        if spec.family != "vg":
            raise ValidityError(f"{spec.family} does not support the mixed-coupling chain")
        r, theta, sigma = spec.params["r"], spec.params["theta"], spec.params["sigma"]
        if n == 0:
            return BoundCoefficients({NormSymbol.centered(): cat.vg_base_constants(r, theta, sigma)[0]})
        if n == 1:
            return BoundCoefficients({NormSymbol.centered(): cat.vg_base_constants(r, theta, sigma)[1]})
        return mixed_coupled_bound(spec.scheme(), n - 1)
    if mode == "onestep":
        if spec.family not in ("gamma", "exponential"):
            raise ValidityError("the one-step bound is a gamma-family estimate")
        return gamma_onestep_bound(n, spec.params.get("r", 1.0))
    if spec.family == "quartic" and mode in ("bounded", "iterated", "lipschitz", "lipschitz_iterated"):
        return quartic_bounds(n, mode)
    if spec.family == "mvn" and mode in ("partial", "first", "lower", "iterated"):
        return mvn_bounds(n, spec._impl["row_norms"], mode)
    if mode in ("next-over-n", "gamma-ratio", "two-prev"):
        if spec.family != "normal":
            raise ValidityError("these literature bounds are normal-family estimates")
        return normal_literature_bound(n, mode)
    if mode in MODE_TOKENS:
        raise ValidityError(f"{spec.family} does not support mode {mode}")
    raise ValueError(f"unknown mode token {mode!r}")

"""Distribution catalog.

One spec object per supported family, holding everything the rest of the
package needs: the density and support, the level-k operator coefficients
of the iterated Stein equations, the coupling shape and cumulative
coupling sequences, per-level base constants, validity windows, and the
base-case substitutions that resolve leftover solution norms.

The catalog is immutable after construction and every evaluator here is
pure.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate
from scipy.special import kve as _sp_kve

from . import special as sf
from .engine import BoundCoefficients, IterationScheme, NormSymbol
from .errors import ValidityError

__all__ = [
    "DistributionSpec",
    "make_spec",
    "FAMILIES",
    "numeric_cdf",
    "quantile",
    "beta_median",
    "beta_lipschitz_constant",
    "vg_scale_constant",
    "vg_base_constants",
    "bessel_tail_constant",
    "quartic_normalizer",
    "quartic_a_coeffs",
    "refined_small_case_constants",
    "langevin_exponents",
    "catalog_json",
]


def _constf(c: float):
    def fn(x):
        arr = np.asarray(x, dtype=float)
        out = np.full(arr.shape, c)
        return out if arr.ndim else float(c)

    return fn


@dataclass(frozen=True)
class DistributionSpec:
    """Catalog entry: parameters, support, operators, iteration scheme.

    coupling_kind says how the level-coupling operator acts on the
    solution: "value" (c*f), "deriv" (c*f'), "mixed" (c0*f + c1*f') or
    "custom" (outside the three generic chains).  operator_order is the
    differential order of every level operator.
    """

    family: str
    params: dict
    support: tuple[float, float]
    operator_order: int
    coupling_kind: str
    delicate_points: tuple[float, ...] = ()
    # filled by the family constructors
    _impl: dict = field(default_factory=dict, repr=False)

    # -- distribution ------------------------------------------------------
    def density(self, x):
        return self._impl["density"](x)

    def weight_s(self, x):
        """Leading-coefficient weight s(x) of the order-0 operator."""
        a2, a1, a0 = self.op_coeffs(0)
        return a1(x) if self.operator_order == 1 else a2(x)

    # -- operators ---------------------------------------------------------
    def op_coeffs(self, k: int):
        """Coefficient callables (a2, a1, a0) of the level-k operator."""
        return self._impl["op_coeffs"](k)

    def t_coeffs(self, k: int):
        """Coupling-operator coefficients (t0, t1): T_k f = t0 f + t1 f'."""
        return self._impl["t_coeffs"](k)

    def level_rhs(self, k: int):
        """Extra right-hand-side terms of the level-k equation.

        Returns [(offset, coeff_fn), ...] meaning the level-k right-hand
        side is h^(k) + sum coeff_fn(x) * f^(k+offset); empty at k = 0.
        """
        return self._impl["level_rhs"](k) if k >= 1 else []

    # -- bounding scheme ----------------------------------------------------
    def scheme(self) -> IterationScheme:
        return self._impl["scheme"]

    @property
    def engine_modes(self) -> tuple[str, ...]:
        return self._impl.get("engine_modes", ())

    @property
    def default_mode(self) -> str:
        return self._impl["default_mode"]

    def max_order(self, mode: str) -> int | None:
        """Largest valid derivative order for this mode (None = unlimited)."""
        fn = self._impl.get("max_order")
        return fn(mode) if fn else None

    def propagation_cap(self) -> int | None:
        """Largest derivative order any supported mode can bound (None =
        unlimited); propagation past it is a validity error."""
        fn = self._impl.get("max_order")
        if fn is None:
            return None
        caps = []
        for mode in ("lemma23i", "lemma23ii", "lemma23iii", "lemma24i", "lemma24ii", "lemma25"):
            cap = fn(mode)
            if cap is None:
                return None
            caps.append(cap)
        return max(caps) if caps else None

    def check_order(self, n: int, mode: str) -> None:
        cap = self.max_order(mode)
        if cap is not None and n > cap:
            raise ValidityError(
                f"{self.family}{self.params}: order {n} exceeds the validity "
                f"window for mode {mode!r} (max {cap})"
            )

    @property
    def solvable(self) -> bool:
        return "density" in self._impl and self.family != "mvn"

    def param_string(self) -> str:
        return ",".join(f"{k}={v:g}" for k, v in self.params.items())


# ---------------------------------------------------------------------------
# Numeric CDF / quantiles (bisection on the quadrature CDF).
# ---------------------------------------------------------------------------


def numeric_cdf(spec: DistributionSpec, x: float) -> float:
    lo, hi = spec.support
    if x <= lo:
        return 0.0
    if x >= hi:
        return 1.0
    pts = [p for p in spec.delicate_points if lo < p < x]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        val, _ = _integrate.quad(
            lambda t: float(spec.density(t)), lo, x,
            points=pts if pts and np.isfinite(lo) and np.isfinite(x) else None,
            limit=400,
        )
    return min(max(val, 0.0), 1.0)


def _bracket(spec: DistributionSpec, p: float) -> tuple[float, float]:
    lo, hi = spec.support
    if np.isfinite(lo) and np.isfinite(hi):
        return lo, hi
    left = lo if np.isfinite(lo) else -1.0
    right = hi if np.isfinite(hi) else 1.0
    if not np.isfinite(lo):
        while numeric_cdf(spec, left) > p:
            left *= 2.0
            if left < -1e12:
                break
    else:
        left = lo
    if not np.isfinite(hi):
        while numeric_cdf(spec, right) < p:
            right *= 2.0
            if right > 1e12:
                break
    else:
        right = hi
    return left, right


def quantile(spec: DistributionSpec, p: float, tol: float = 1e-10) -> float:
    """p-quantile by bisection on the numeric CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile requires 0 < p < 1")
    lo, hi = _bracket(spec, p)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if numeric_cdf(spec, mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Normal distribution.
# ---------------------------------------------------------------------------


def _normal_spec() -> DistributionSpec:
    root = math.sqrt(math.pi / 2.0)

    def density(x):
        return sf.norm_pdf(x)

    def op_coeffs(k):
        return (None, _constf(1.0), lambda x: -np.asarray(x, dtype=float))

    def t_coeffs(k):
        return (_constf(1.0), _constf(0.0))

    def level_rhs(k):
        return [(-1, _constf(float(k)))]

    scheme = IterationScheme(
        a=lambda j: float(j + 1),
        c_level=lambda l: root,
        d_level=lambda l: 2.0,
        base_substitutions={
            NormSymbol.solution(): BoundCoefficients({NormSymbol.centered(): root})
        },
    )
    return DistributionSpec(
        family="normal",
        params={},
        support=(-math.inf, math.inf),
        operator_order=1,
        coupling_kind="value",
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": ("i", "ii"),
            "default_mode": "lemma23ii",
            "max_order": lambda mode: None,
        },
    )


# ---------------------------------------------------------------------------
# Gamma / exponential.
# ---------------------------------------------------------------------------


def gamma_solution_constant(r: float) -> float:
    """Sharp order-0 constant e^r Gamma(r) / r^r, evaluated in log space."""
    return math.exp(r + sf.log_gamma(r) - r * math.log(r))


def _gamma_spec(r: float, lam: float, family: str = "gamma") -> DistributionSpec:
    if r <= 0 or lam <= 0:
        raise ValueError("gamma requires r > 0 and lambda > 0")
    log_norm = r * math.log(lam) - sf.log_gamma(r)

    def density(x):
        arr = np.asarray(x, dtype=float)
        out = np.zeros(arr.shape)
        pos = arr > 0
        xa = arr[pos] if arr.ndim else (arr if arr > 0 else None)
        if arr.ndim:
            out[pos] = np.exp(log_norm + (r - 1.0) * np.log(arr[pos]) - lam * arr[pos])
            return out
        return 0.0 if xa is None else float(np.exp(log_norm + (r - 1.0) * np.log(xa) - lam * xa))

    def op_coeffs(k):
        return (
            None,
            lambda x: np.asarray(x, dtype=float),
            lambda x: (r + k) - lam * np.asarray(x, dtype=float),
        )

    def t_coeffs(k):
        return (_constf(lam), _constf(0.0))

    def level_rhs(k):
        return [(-1, _constf(float(k) * lam))]

    scheme = IterationScheme(
        a=lambda j: lam * (j + 1),
        c_level=lambda l: gamma_solution_constant(r + l),
    )
    return DistributionSpec(
        family=family,
        params={"r": r, "lam": lam} if family == "gamma" else {"lam": lam},
        support=(0.0, math.inf),
        operator_order=1,
        coupling_kind="value",
        delicate_points=(0.0,),
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": ("i",),
            "default_mode": "lemma23i",
            "max_order": lambda mode: None,
        },
    )


def _exponential_spec(lam: float) -> DistributionSpec:
    return _gamma_spec(1.0, lam, family="exponential")


# ---------------------------------------------------------------------------
# Beta / arcsine.
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def beta_median(alpha: float, beta: float, tol: float = 1e-10) -> float:
    """Median of the beta(alpha, beta) law by bisection on the numeric CDF."""
    from scipy.special import betainc

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if betainc(alpha, beta, mid) < 0.5:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def _beta_density_value(alpha: float, beta: float, x: float) -> float:
    log_b = sf.log_gamma(alpha) + sf.log_gamma(beta) - sf.log_gamma(alpha + beta)
    if not 0.0 < x < 1.0:
        return 0.0
    return math.exp((alpha - 1.0) * math.log(x) + (beta - 1.0) * math.log1p(-x) - log_b)


@functools.lru_cache(maxsize=None)
def beta_solution_constant(alpha: float, beta: float) -> float:
    """Order-0 constant 1 / (2 m (1 - m) p(m)) at the median m."""
    m = beta_median(alpha, beta)
    return 1.0 / (2.0 * m * (1.0 - m) * _beta_density_value(alpha, beta, m))


def beta_lipschitz_constant(alpha: float, beta: float) -> float:
    """The four-branch first-derivative constant for Lipschitz test functions."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("beta parameters must be positive")
    if alpha == beta:
        if alpha < 1.0:
            return 4.0
        return 2.0 * alpha * math.sqrt(math.pi) * math.exp(sf.log_gamma(alpha) - sf.log_gamma(alpha + 0.5))
    b_fn = math.exp(sf.log_gamma(alpha) + sf.log_gamma(beta) - sf.log_gamma(alpha + beta))
    if alpha <= 1.0 and beta <= 1.0:
        branch = b_fn
    elif alpha <= 1.0 < beta:
        branch = 1.0 / alpha
    elif beta <= 1.0 < alpha:
        branch = 1.0 / beta
    else:
        branch = 1.0 / (alpha * beta * b_fn)
    return 2.0 * (alpha + beta) * branch


def _beta_spec(alpha: float, beta: float, family: str = "beta") -> DistributionSpec:
    if alpha <= 0 or beta <= 0:
        raise ValueError("beta requires alpha > 0 and beta > 0")
    log_b = sf.log_gamma(alpha) + sf.log_gamma(beta) - sf.log_gamma(alpha + beta)

    def density(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim:
            out = np.zeros(arr.shape)
            inside = (arr > 0) & (arr < 1)
            xi = arr[inside]
            out[inside] = np.exp((alpha - 1.0) * np.log(xi) + (beta - 1.0) * np.log1p(-xi) - log_b)
            return out
        return _beta_density_value(alpha, beta, float(arr))

    def op_coeffs(k):
        return (
            None,
            lambda x: np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float)),
            lambda x: (alpha + k) - (alpha + beta + 2 * k) * np.asarray(x, dtype=float),
        )

    def t_coeffs(k):
        return (_constf(alpha + beta + 2 * k), _constf(0.0))

    def level_rhs(k):
        return [(-1, _constf(k * (alpha + beta + k - 1.0)))]

    scheme = IterationScheme(
        a=lambda j: (j + 1) * (alpha + beta + j),
        c_level=lambda l: beta_solution_constant(alpha + l, beta + l),
        e_level=lambda l: beta_lipschitz_constant(alpha + l, beta + l),
    )
    return DistributionSpec(
        family=family,
        params={"alpha": alpha, "beta": beta} if family == "beta" else {},
        support=(0.0, 1.0),
        operator_order=1,
        coupling_kind="value",
        delicate_points=(0.0, 1.0),
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": ("i", "iii"),
            "default_mode": "lemma23i",
            "max_order": lambda mode: None,
        },
    )


def _arcsine_spec() -> DistributionSpec:
    return _beta_spec(0.5, 0.5, family="arcsine")


# ---------------------------------------------------------------------------
# Student's t.
# ---------------------------------------------------------------------------


def student_t_solution_constant(d: float, delta: float) -> float:
    if d <= 0:
        raise ValidityError(f"student-t order-0 constant needs d > 0, got d={d}")
    return math.sqrt(math.pi) * math.exp(sf.log_gamma(d / 2.0) - sf.log_gamma((d + 1.0) / 2.0)) / (2.0 * delta)


def _student_t_spec(d: float, delta: float) -> DistributionSpec:
    if d <= 0 or delta <= 0:
        raise ValueError("student-t requires d > 0 and delta > 0")
    log_norm = sf.log_gamma((d + 1.0) / 2.0) - sf.log_gamma(d / 2.0) - 0.5 * math.log(math.pi * delta * delta)

    def density(x):
        arr = np.asarray(x, dtype=float)
        out = np.exp(log_norm - 0.5 * (d + 1.0) * np.log1p((arr / delta) ** 2))
        return out if arr.ndim else float(out)

    def op_coeffs(k):
        return (
            None,
            lambda x: delta * delta + np.asarray(x, dtype=float) ** 2,
            lambda x: -(d - 2 * k - 1.0) * np.asarray(x, dtype=float),
        )

    def t_coeffs(k):
        return (_constf(d - 2 * k - 1.0), _constf(0.0))

    def level_rhs(k):
        return [(-1, _constf(k * (d - k)))]

    def c_level(l):
        if d - 2 * l <= 0:
            raise ValidityError(f"student-t level constant undefined: d - 2l = {d - 2 * l} <= 0")
        return student_t_solution_constant(d - 2 * l, delta)

    def d_level(l):
        if d - 2 * l <= 0:
            raise ValidityError(f"student-t level constant undefined: d - 2l = {d - 2 * l} <= 0")
        return 2.0 / (delta * delta)

    def max_order(mode):
        cap = int(math.floor((d - 1e-9) / 2.0))  # largest n with d - 2n > 0
        if mode in ("lemma23ii", "ii"):
            return cap + 1  # the f'-chain only needs d - 2(n-1) > 0
        return cap

    scheme = IterationScheme(
        a=lambda j: abs((j + 1) * (d - j - 1.0)),
        c_level=c_level,
        d_level=d_level,
        base_substitutions={
            NormSymbol.solution(): BoundCoefficients(
                {NormSymbol.centered(): student_t_solution_constant(d, delta)}
            )
        },
    )
    return DistributionSpec(
        family="student_t",
        params={"d": d, "delta": delta},
        support=(-math.inf, math.inf),
        operator_order=1,
        coupling_kind="value",
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": ("i", "ii"),
            "default_mode": "lemma23i",
            "max_order": max_order,
        },
    )


# ---------------------------------------------------------------------------
# Inverse-gamma.
# ---------------------------------------------------------------------------


def inverse_gamma_solution_constant(alpha: float, beta: float) -> float:
    if alpha <= 1:
        raise ValidityError(f"inverse-gamma order-0 constant needs alpha > 1, got {alpha}")
    return math.exp(
        sf.log_gamma(alpha) - math.log(beta) + (alpha - 1.0) * (1.0 - math.log(alpha - 1.0))
    )


def _inverse_gamma_spec(alpha: float, beta: float) -> DistributionSpec:
    if alpha <= 0 or beta <= 0:
        raise ValueError("inverse-gamma requires alpha > 0 and beta > 0")
    log_norm = alpha * math.log(beta) - sf.log_gamma(alpha)

    def density(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim:
            out = np.zeros(arr.shape)
            pos = arr > 0
            xi = arr[pos]
            out[pos] = np.exp(log_norm - (alpha + 1.0) * np.log(xi) - beta / xi)
            return out
        return 0.0 if arr <= 0 else float(np.exp(log_norm - (alpha + 1.0) * np.log(arr) - beta / arr))

    def op_coeffs(k):
        return (
            None,
            lambda x: np.asarray(x, dtype=float) ** 2,
            lambda x: beta - (alpha - 2 * k - 1.0) * np.asarray(x, dtype=float),
        )

    def t_coeffs(k):
        return (_constf(alpha - 2 * k - 1.0), _constf(0.0))

    def level_rhs(k):
        return [(-1, _constf(k * (alpha - k)))]

    def c_level(l):
        if alpha - 2 * l <= 1:
            raise ValidityError(f"inverse-gamma level constant undefined at level {l} (alpha={alpha})")
        return inverse_gamma_solution_constant(alpha - 2 * l, beta)

    scheme = IterationScheme(
        a=lambda j: abs((j + 1) * (alpha - j - 1.0)),
        c_level=c_level,
    )
    return DistributionSpec(
        family="inverse_gamma",
        params={"alpha": alpha, "beta": beta},
        support=(0.0, math.inf),
        operator_order=1,
        coupling_kind="value",
        delicate_points=(0.0,),
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": ("i",),
            "default_mode": "lemma23i",
            # alpha > 2n + 1
            "max_order": lambda mode: int(math.floor((alpha - 1.0 - 1e-9) / 2.0)),
        },
    )


# ---------------------------------------------------------------------------
# PRR distribution (second-order operator, derivative coupling).
# ---------------------------------------------------------------------------


def prr_second_derivative_constant(s: float) -> float:
    """Base constant of the second-derivative bound: 4 at s = 1/2,
    2(pi sqrt(s) + 1/s) for s >= 1."""
    if s == 0.5:
        return 4.0
    if s >= 1.0:
        return 2.0 * (math.pi * math.sqrt(s) + 1.0 / s)
    raise ValidityError(f"prr constants defined for s = 1/2 or s >= 1, got {s}")


@functools.lru_cache(maxsize=16)
def _prr_u_table(s: float):
    """Quintic-spline table of x -> U(s-1, 1/2, x^2/(2s)) on the solver range.

    The underlying hypergeometric evaluation costs ~1.5 ms per point for
    non-trivial first parameters; the table reduces the million-point
    solver workloads to a few thousand evaluations.  Spline error is
    ~1e-12 relative, well inside the 1e-8 kernel contract.
    """
    from scipy.interpolate import make_interp_spline

    x_hi = 1.6 * math.sqrt(50.0 * s) + 6.0
    xs = np.linspace(0.0, x_hi, 3001)
    z = np.maximum(xs * xs / (2.0 * s), 1e-300)
    vals = np.asarray(sf.hyp_u(s - 1.0, 0.5, z))
    return make_interp_spline(xs, vals, k=5), x_hi


def _prr_u_function(s: float, x):
    """Tabled evaluation of U(s-1, 1/2, x^2/(2s)); direct fallback beyond
    the table range (deep tail, where the density is ~1e-16 of peak)."""
    arr = np.abs(np.asarray(x, dtype=float))
    spline, x_hi = _prr_u_table(s)
    out = np.asarray(spline(np.minimum(arr, x_hi)))
    far = arr > x_hi
    if np.any(far):
        out = np.where(far, sf.hyp_u(s - 1.0, 0.5, np.maximum(arr * arr / (2.0 * s), 1e-300)), out)
    return out if np.ndim(x) else float(out)


def _prr_spec(s: float) -> DistributionSpec:
    if not (s == 0.5 or 1.0 <= s <= 20.0):
        raise ValueError("prr requires s = 1/2 or 1 <= s <= 20 (validated U-function slice)")
    norm = sf.gamma_fn(s) * math.sqrt(2.0 / (s * math.pi))

    def density(x):
        arr = np.asarray(x, dtype=float)
        z = np.maximum(arr * arr / (2.0 * s), 1e-300)
        out = norm * np.exp(-z) * np.asarray(_prr_u_function(s, arr))
        out = np.where(arr > 0, out, 0.0)
        return out if arr.ndim else float(out)

    def kernel_v(x):
        """Homogeneous-solution factor in the double-integral representation."""
        arr = np.asarray(x, dtype=float)
        out = np.asarray(_prr_u_function(s, arr))
        return out if arr.ndim else float(out)

    def op_coeffs(k):
        return (
            _constf(s),
            lambda x: -np.asarray(x, dtype=float),
            _constf(-2.0 * (s - 1.0)),
        )

    def t_coeffs(k):
        return (_constf(0.0), _constf(1.0))

    def level_rhs(k):
        return [(0, _constf(float(k)))]

    subs = {}
    if s >= 1.0:
        subs[NormSymbol.solution_deriv()] = BoundCoefficients(
            {NormSymbol.plain(): math.sqrt(2.0 * math.pi)}
        )

    def c_level(l):
        if s < 1.0:
            raise ValidityError("prr first-derivative base constant available for s >= 1 only")
        return math.sqrt(2.0 * math.pi)

    scheme = IterationScheme(
        a=lambda j: float(j + 1),
        c_level=c_level,
        d_level=lambda l: prr_second_derivative_constant(s),
        base_substitutions=subs,
    )
    return DistributionSpec(
        family="prr",
        params={"s": s},
        support=(0.0, math.inf),
        operator_order=2,
        coupling_kind="deriv",
        delicate_points=(0.0,),
        _impl={
            "density": density,
            "kernel_v": kernel_v,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": ("i", "ii") if s >= 1.0 else ("ii",),
            "default_mode": "lemma24i" if s >= 1.0 else "lemma24ii",
            "max_order": lambda mode: None,
        },
    )


# ---------------------------------------------------------------------------
# Variance-gamma (second-order operator; value or mixed coupling).
# ---------------------------------------------------------------------------


def vg_scale_constant(r: float, theta: float, sigma: float) -> float:
    """The tail constant entering both order-0 and order-1 base bounds.

    Branch split at r = 2; the theta -> 0 limit of the upper branch is
    sqrt(pi) Gamma(r/2) / Gamma((r+1)/2).
    """
    if r <= 0 or sigma <= 0:
        raise ValueError("vg requires r > 0 and sigma > 0")
    if r >= 2.0:
        return (
            math.sqrt(math.pi)
            * math.exp(sf.log_gamma(r / 2.0) - sf.log_gamma((r + 1.0) / 2.0))
            * (1.0 + (theta / sigma) ** 2) ** (r / 2.0)
        )
    if theta == 0.0:
        return 6.0 * sf.gamma_fn(r / 2.0)
    return 6.0 * sf.gamma_fn(r / 2.0) * (1.0 - 1.0 / math.sqrt(1.0 + (sigma / theta) ** 2)) ** (-r / 2.0)


def vg_base_constants(r: float, theta: float, sigma: float) -> tuple[float, float]:
    """(solution-norm coefficient, first-derivative coefficient) on ||h~||."""
    c = vg_scale_constant(r, theta, sigma)
    body = 2.0 / r + c
    return body / math.sqrt(theta * theta + sigma * sigma), body / (sigma * sigma)


def vg_symmetric_solution_constant(r: float, sigma: float) -> float:
    """Sharp order-0 constant of the theta = 0 family."""
    return (1.0 / sigma) * (
        1.0 / r + math.pi * math.exp(sf.log_gamma(r / 2.0) - sf.log_gamma((r + 1.0) / 2.0)) / 2.0
    )


def bessel_tail_constant(nu: float, gamma: float) -> float:
    """Uniform constant bounding the Bessel-kernel tail integrals.

    Requires nu > -1/2 and |gamma| < 1; branch split at nu = 1/2.
    """
    if nu <= -0.5 or abs(gamma) >= 1.0:
        raise ValueError("need nu > -1/2 and |gamma| < 1")
    if nu >= 0.5:
        return (
            math.sqrt(math.pi)
            * math.exp(sf.log_gamma(nu + 0.5) - sf.log_gamma(nu + 1.0))
            / (1.0 - gamma * gamma) ** (nu + 0.5)
        )
    return 6.0 * sf.gamma_fn(nu + 0.5) / (1.0 - abs(gamma))


def _vg_spec(r: float, theta: float, sigma: float) -> DistributionSpec:
    if r <= 0 or sigma <= 0:
        raise ValueError("vg requires r > 0 and sigma > 0")
    nu = (r - 1.0) / 2.0
    alpha = math.sqrt(theta * theta + sigma * sigma) / (sigma * sigma)
    beta = theta / (sigma * sigma)
    log_norm = -(math.log(sigma) + 0.5 * math.log(math.pi) + sf.log_gamma(r / 2.0))
    half_scale = 2.0 * math.sqrt(theta * theta + sigma * sigma)

    def density(x):
        # scaled Bessel form: the exponent beta*x - alpha*|x| is <= 0, so the
        # tails underflow cleanly instead of overflowing
        arr = np.asarray(x, dtype=float)
        ax = np.maximum(np.abs(arr), 1e-12)
        out = np.exp(log_norm + beta * arr - alpha * ax + nu * np.log(ax / half_scale)) * np.asarray(
            _sp_kve(nu, alpha * ax)
        )
        return out if arr.ndim else float(out)

    def op_coeffs(k):
        s2 = sigma * sigma
        return (
            lambda x: s2 * np.asarray(x, dtype=float),
            lambda x: s2 * (r + k) + 2.0 * theta * np.asarray(x, dtype=float),
            lambda x: (r + k) * theta - np.asarray(x, dtype=float),
        )

    # The level equations carry -k theta f^(k): the coupling operator that
    # the operator algebra actually produces is I - theta D.  Only the
    # cumulative magnitudes a_j = j, b_j = j|theta| enter the bounds.
    def t_coeffs(k):
        return (_constf(1.0), _constf(-theta))

    def level_rhs(k):
        return [(-1, _constf(float(k))), (0, _constf(-float(k) * theta))]

    b0_over_root, _ = vg_base_constants(r, theta, sigma)
    subs = {
        NormSymbol.solution(): BoundCoefficients(
            {NormSymbol.centered(): vg_symmetric_solution_constant(r, sigma) if theta == 0.0 else b0_over_root}
        )
    }

    def d_level(l):
        if theta == 0.0:
            return 2.0 / (sigma * sigma * (r + l))
        return vg_base_constants(r + l, theta, sigma)[1]

    def k_level(l):
        if theta == 0.0:
            return vg_symmetric_solution_constant(r + l, sigma)
        return vg_base_constants(r + l, theta, sigma)[0]

    scheme = IterationScheme(
        a=(lambda j: float(j + 1)) if theta == 0.0 else (lambda j: float(j)),
        b=None if theta == 0.0 else (lambda j: float(j) * abs(theta)),
        d_level=d_level,
        k_level=k_level,
        base_substitutions=subs,
    )
    modes = ("ii", "mixed") if theta == 0.0 else ("mixed",)
    return DistributionSpec(
        family="vg",
        params={"r": r, "theta": theta, "sigma": sigma},
        support=(-math.inf, math.inf),
        operator_order=2,
        coupling_kind="value" if theta == 0.0 else "mixed",
        delicate_points=(0.0,),
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": scheme,
            "engine_modes": modes,
            "default_mode": "lemma23ii" if theta == 0.0 else "lemma25",
            "max_order": lambda mode: None,
        },
    )


# ---------------------------------------------------------------------------
# Quartic-tail density (exp(-x^4/12), Curie-Weiss magnetization limit).
# ---------------------------------------------------------------------------


def quartic_normalizer() -> float:
    """Normalizing constant sqrt(2) / (3^(1/4) Gamma(1/4))."""
    return math.sqrt(2.0) / (3.0 ** 0.25 * sf.gamma_fn(0.25))


@functools.lru_cache(maxsize=None)
def _quartic_a_table(n: int) -> tuple[tuple[float, ...], ...]:
    """Rows 0..n of the quartic chain coefficients a_j^(m)."""
    c1 = quartic_normalizer()
    u1 = (6.0 * c1) ** (1.0 / 3.0)
    u2 = (6.0 * c1) ** (2.0 / 3.0)
    u3 = 6.0 * c1
    rows: list[tuple[float, ...]] = []
    for m in range(n + 1):
        row = [0.0] * (m + 1)
        row[m] = 1.0
        if m >= 1:
            row[m - 1] = 3.0 * m / u1
        if m >= 2:
            row[m - 2] = 12.0 * m * (m - 1) / u2
        for k in range(3, m + 1):
            j = m - k
            row[j] = (
                3.0 * m / u1 * rows[m - 1][j]
                + 3.0 * m * (m - 1) / u2 * rows[m - 2][j]
                + m * (m - 1) * (m - 2) / u3 * rows[m - 3][j]
            )
        rows.append(tuple(row))
    return tuple(rows)


def quartic_a_coeffs(n: int) -> tuple[float, ...]:
    """Chain coefficients (a_0^(n), ..., a_n^(n)) of the quartic family."""
    if n < 0:
        raise ValueError("order must be >= 0")
    return _quartic_a_table(n)[n]


def _quartic_spec() -> DistributionSpec:
    c1 = quartic_normalizer()

    def density(x):
        arr = np.asarray(x, dtype=float)
        out = c1 * np.exp(-(arr ** 4) / 12.0)
        return out if arr.ndim else float(out)

    def op_coeffs(k):
        return (None, _constf(1.0), lambda x: -np.asarray(x, dtype=float) ** 3 / 3.0)

    def t_coeffs(k):
        return (lambda x: np.asarray(x, dtype=float) ** 2, _constf(0.0))

    def level_rhs(k):
        terms = [(-1, lambda x: k * np.asarray(x, dtype=float) ** 2)]
        if k >= 2:
            terms.append((-2, lambda x: k * (k - 1.0) * np.asarray(x, dtype=float)))
        if k >= 3:
            terms.append((-3, _constf(k * (k - 1.0) * (k - 2.0) / 3.0)))
        return terms

    return DistributionSpec(
        family="quartic",
        params={},
        support=(-math.inf, math.inf),
        operator_order=1,
        coupling_kind="custom",
        _impl={
            "density": density,
            "op_coeffs": op_coeffs,
            "t_coeffs": t_coeffs,
            "level_rhs": level_rhs,
            "scheme": IterationScheme(a=lambda j: float(j)),
            "engine_modes": (),
            "default_mode": "iterated",
            "max_order": lambda mode: None,
        },
    )


# ---------------------------------------------------------------------------
# Multivariate normal (bounds only; no 1-D solver support).
# ---------------------------------------------------------------------------


def _mvn_spec(dim: int, row_norms: tuple[float, ...] | None = None) -> DistributionSpec:
    dim = int(dim)
    if dim < 1:
        raise ValueError("mvn requires dim >= 1")
    if row_norms is None:
        row_norms = tuple(1.0 for _ in range(dim))
    row_norms = tuple(float(v) for v in row_norms)
    if len(row_norms) != dim or any(v < 0 for v in row_norms):
        raise ValueError("row_norms must be dim nonnegative reals")
    return DistributionSpec(
        family="mvn",
        params={"dim": dim},
        support=(-math.inf, math.inf),
        operator_order=2,
        coupling_kind="custom",
        _impl={
            "row_norms": row_norms,
            "scheme": IterationScheme(a=lambda j: float(j)),
            "engine_modes": (),
            "default_mode": "partial",
            "max_order": lambda mode: None,
        },
    )


# ---------------------------------------------------------------------------
# Small-case refined constants, exponent arithmetic, registry.
# ---------------------------------------------------------------------------


def refined_small_case_constants(family: str, **params) -> dict:
    """Verbatim special-case constants for exponential, beta and arcsine.

    Keys are the bounded quantity ("f", "f'", "f''"); values are
    BoundCoefficients.  The arcsine entry carries an extra "as_printed"
    field holding the unresolved min-form alternatives exactly as listed.
    """
    from .engine import coefficients

    if family == "exponential":
        lam = float(params["lam"])
        return {
            "f": coefficients(h1=1.0 / lam),
            "f'": coefficients(h1=1.0),
            "f''": coefficients(h1=2.0 * lam / 3.0, h2=2.0 / 3.0),
        }
    if family == "beta":
        alpha, beta = float(params["alpha"]), float(params["beta"])
        return {
            "f": coefficients(**{"h~": beta_solution_constant(alpha, beta)}),
            "f_lipschitz": coefficients(h1=1.0 / (alpha + beta)),
            "f'": coefficients(h1=beta_lipschitz_constant(alpha, beta)),
        }
    if family == "arcsine":
        return {
            "f'": coefficients(h1=4.0),
            "f''": coefficients(h1=6.0 * math.pi, h2=1.5 * math.pi),
            # Listed as a bound on f' alongside the 4||h'|| bound; most
            # likely a bound on f.  Stored unresolved.
            "as_printed": {
                "f'_min": [coefficients(h1=1.0), coefficients(**{"h~": 1.0 / math.pi})]
            },
        }
    raise ValueError(f"no refined constants table for family {family!r}")


def langevin_exponents(eps: float, b1: float, b2: float, b3: float) -> tuple[float, float, float, float, float]:
    """Polynomial growth exponents for the first four derivative levels of
    an overdamped-Langevin Poisson-equation solution, given drift-growth
    exponents (b1, b2, b3) and any eps > 0."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    f0 = eps
    f1 = eps
    f2 = max(eps, b1 / 2.0)
    f3 = max(eps, b1, b2 / 2.0)
    f4 = max(eps, 0.5 * max(3.0 * b1, b1 + b2, b3))
    return (f0, f1, f2, f3, f4)


_CONSTRUCTORS = {
    "normal": lambda **p: _normal_spec(),
    "gamma": lambda r, lam, **p: _gamma_spec(float(r), float(lam)),
    "exponential": lambda lam, **p: _exponential_spec(float(lam)),
    "beta": lambda alpha, beta, **p: _beta_spec(float(alpha), float(beta)),
    "arcsine": lambda **p: _arcsine_spec(),
    "student_t": lambda d, delta, **p: _student_t_spec(float(d), float(delta)),
    "inverse_gamma": lambda alpha, beta, **p: _inverse_gamma_spec(float(alpha), float(beta)),
    "prr": lambda s, **p: _prr_spec(float(s)),
    "vg": lambda r, theta, sigma, **p: _vg_spec(float(r), float(theta), float(sigma)),
    "quartic": lambda **p: _quartic_spec(),
    "mvn": lambda dim, row_norms=None, **p: _mvn_spec(int(dim), row_norms),
}

FAMILIES = tuple(sorted(_CONSTRUCTORS))

_PARAM_NAMES = {
    "normal": (),
    "gamma": ("r", "lam"),
    "exponential": ("lam",),
    "beta": ("alpha", "beta"),
    "arcsine": (),
    "student_t": ("d", "delta"),
    "inverse_gamma": ("alpha", "beta"),
    "prr": ("s",),
    "vg": ("r", "theta", "sigma"),
    "quartic": (),
    "mvn": ("dim",),
}


def make_spec(family: str, **params) -> DistributionSpec:
    """Build a catalog entry; unknown families or parameters are rejected."""
    if family not in _CONSTRUCTORS:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    allowed = set(_PARAM_NAMES[family]) | ({"row_norms"} if family == "mvn" else set())
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"{family} does not take parameters {sorted(unknown)}")
    missing = set(_PARAM_NAMES[family]) - set(params)
    if missing:
        raise ValueError(f"{family} requires parameters {sorted(missing)}")
    return _CONSTRUCTORS[family](**params)


def catalog_json(spec: DistributionSpec, levels: int = 5) -> dict:
    """Serializable description: family, params, support, scheme constants,
    validity window."""
    sch = spec.scheme()

    def sample(fn):
        if fn is None:
            return None
        out = []
        for l in range(levels):
            try:
                out.append(fn(l))
            except ValidityError:
                break
        return out

    def edge(v):
        # keep the document strict-JSON parseable
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v

    doc = {
        "family": spec.family,
        "params": dict(spec.params),
        "support": [edge(spec.support[0]), edge(spec.support[1])],
        "operator_order": spec.operator_order,
        "coupling_kind": spec.coupling_kind,
        "default_mode": spec.default_mode,
        "engine_modes": list(spec.engine_modes),
        "a_seq": [sch.a(j) for j in range(levels)],
        "b_seq": [sch.b(j) for j in range(levels)] if sch.b else None,
        "level_constants": {
            "C": sample(sch.c_level),
            "D": sample(sch.d_level),
            "E": sample(sch.e_level),
            "K": sample(sch.k_level),
        },
        "max_order": spec.max_order(spec.default_mode),
    }
    if spec.family == "quartic":
        doc["c1"] = quartic_normalizer()
    if spec.family == "vg":
        r, theta, sigma = spec.params["r"], spec.params["theta"], spec.params["sigma"]
        f_coef, fp_coef = vg_base_constants(r, theta, sigma)
        doc["base_bounds"] = {"f": f_coef, "f'": fp_coef}
    if spec.family == "mvn":
        doc["row_norms"] = list(spec._impl["row_norms"])
    return doc

"""Moment envelopes g(L) for normed sums and the moment-to-tail conversion.

An envelope is a uniform-in-n bound (E |sum|^L)^(1/L) <= g(L) on a domain
(domain_low, L0).  Tails follow by the Chebyshev-Markov step optimized over
the moment order:

    h(z) = min(1, inf_L (g(L)/z)^L),

computed by a grid scan over the envelope's evaluation grid followed by
golden-section refinement in log L.  The same conversion serves the plain,
mixed-norm and entropy-functional envelopes; only the construction of g
differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .constants import doob_factor, rosenthal_upper
from .grid_spaces import GridFunction, GridMeasureSpace, mixed_norm

__all__ = [
    "MomentEnvelope",
    "envelope_from_field",
    "envelope_from_moments",
    "mixed_envelope_from_field",
    "tail_from_envelope",
    "tail_argmin",
    "TailClass",
    "classify_tail",
    "envelope_to_json",
    "envelope_from_json",
]

_DEFAULT_GRID_POINTS = 257
_DEFAULT_GRID_TOP = 1e8
_GOLDEN_ITERS = 64
_GOLDEN_REL_WIDTH = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _doob_multiplier(L: float, sharp: bool) -> float:
    """Factor covering the maximal inequality inside g: the ceiling 2 by default.

    With sharp=True the exact L/(L-1) is used instead; either way the factor
    lives inside g and the tail-sum argument stays u*v(A(k))/w, so the factor
    is applied exactly once.
    """
    return doob_factor(L) if sharp else 2.0


@dataclass(eq=False)
class MomentEnvelope:
    """L -> g(L) on (domain_low, L0), with a cached evaluation grid.

    Analytic envelopes carry a callable and use it everywhere; grid-backed
    envelopes interpolate log g linearly in log L between grid points and are
    only evaluated inside the grid span.
    """

    L_grid: np.ndarray
    g_values: np.ndarray
    domain_low: float
    L0: float = math.inf
    kind: str = "analytic"
    p: Optional[float] = None
    p_vec: Optional[tuple[float, ...]] = None
    label: str = ""
    _g_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)
    _log_g_grid: np.ndarray = field(init=False, repr=False)
    _log_L_grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = np.asarray(self.L_grid, dtype=float)
        g = np.asarray(self.g_values, dtype=float)
        if L.ndim != 1 or L.size < 1 or g.shape != L.shape:
            raise ValueError("L_grid and g_values must be matching 1-d arrays")
        if np.any(np.diff(L) <= 0.0):
            raise ValueError("evaluation grid must be strictly increasing")
        if not self.L0 > self.domain_low:
            raise ValueError("envelope domain requires L0 > domain_low")
        if L[0] < self.domain_low or L[-1] > self.L0:
            raise ValueError("evaluation grid must lie inside [domain_low, L0]")
        if np.any(~np.isfinite(g)) or np.any(g < 0.0):
            raise ValueError("g must be finite and nonnegative on the grid")
        self.L_grid = L
        self.g_values = g
        with np.errstate(divide="ignore"):
            self._log_g_grid = np.log(g)
        self._log_L_grid = np.log(L)

    @classmethod
    def from_callable(
        cls,
        g_fn: Callable[[float], float],
        domain_low: float,
        L0: float = math.inf,
        L_grid=None,
        **kwargs,
    ) -> "MomentEnvelope":
        if L_grid is None:
            lo = float(domain_low)
            if lo <= 0.0:
                raise ValueError("default grids need domain_low > 0")
            hi = _DEFAULT_GRID_TOP if math.isinf(L0) else lo + (L0 - lo) * (1.0 - 1e-9)
            L_grid = np.geomspace(lo, hi, _DEFAULT_GRID_POINTS)
        L_grid = np.asarray(L_grid, dtype=float)
        g_values = np.array([float(g_fn(L)) for L in L_grid])
        return cls(L_grid, g_values, float(domain_low), float(L0), _g_fn=g_fn, **kwargs)

    @classmethod
    def from_grid(cls, L_grid, g_values, domain_low, L0=math.inf, **kwargs) -> "MomentEnvelope":
        kwargs.setdefault("kind", "grid")
        return cls(
            np.asarray(L_grid, dtype=float),
            np.asarray(g_values, dtype=float),
            float(domain_low),
            float(L0),
            **kwargs,
        )

    def g(self, L: float) -> float:
        lg = self.log_g(L)
        return math.exp(lg) if lg > -math.inf else 0.0

    def log_g(self, L: float) -> float:
        """log g(L); -inf where g vanishes."""
        if self._g_fn is not None:
            val = float(self._g_fn(L))
            if val < 0.0:
                raise ValueError("envelope callable returned a negative value")
            return math.log(val) if val > 0.0 else -math.inf
        # grid-backed: log-linear interpolation in log L inside the span
        lo, hi = self.L_grid[0], self.L_grid[-1]
        if not lo <= L <= hi:
            raise ValueError(f"grid envelope evaluated at L={L} outside its span [{lo}, {hi}]")
        return float(np.interp(math.log(L), self._log_L_grid, self._log_g_grid))

    @property
    def search_top(self) -> float:
        """Upper end of the usable L range for the tail optimizer."""
        return float(self.L_grid[-1])


def envelope_from_field(
    xi: GridFunction,
    p: float,
    L_grid,
    *,
    sharp_doob: bool = False,
    symmetric: bool = False,
    label: str = "",
) -> MomentEnvelope:
    """Envelope for a field sampled on X x Omega (Omega = last axis, probability grid).

    g(L) = (Doob factor) * K_R(L) * ( integral_X E|xi(x)|^L mu(dx) )^(1/L),
    with every integral an exact weighted sum.  All moments of a finite field
    are finite, so L0 = +inf.
    """
    if xi.n_factors != 2:
        raise ValueError("envelope_from_field expects a two-factor function on X x Omega")
    if p < 2.0:
        raise ValueError("the bound machinery assumes p >= 2")
    L_grid = np.asarray(L_grid, dtype=float)
    if np.any(L_grid < p):
        raise ValueError("all envelope grid points must satisfy L >= p")
    omega = xi.axes[1]
    if not omega.is_probability:
        raise ValueError("Omega factor must be a probability grid")
    with np.errstate(divide="ignore"):
        log_xw = np.log(xi.axes[0].weights)
        log_ow = np.log(omega.weights)
        log_abs = np.log(np.abs(xi.values))

    def root_moment(L: float) -> float:
        # ( integral_X E|xi|^L dmu )^(1/L) in log space: |xi|^L overflows
        # directly for |xi| > 1 once L is large, the root never does
        per_x = logsumexp(L * log_abs + log_ow[None, :], axis=1)
        return float(np.exp(logsumexp(log_xw + per_x) / L))

    g_values = np.array(
        [
            _doob_multiplier(L, sharp_doob) * rosenthal_upper(L, symmetric) * root_moment(L)
            for L in L_grid
        ]
    )
    return MomentEnvelope(L_grid, g_values, domain_low=float(p), kind="grid", p=float(p), label=label)


def envelope_from_moments(
    moment_fn: Callable[[float], float],
    p: float,
    L0: float = math.inf,
    L_grid=None,
    *,
    sharp_doob: bool = False,
    symmetric: bool = False,
    label: str = "",
) -> MomentEnvelope:
    """Envelope from an analytic moment function: g(L) = 2 K_R(L) moment_fn(L).

    moment_fn(L) plays the role of ( integral_X E|xi(x)|^L mu(dx) )^(1/L) given
    in closed form, e.g. L^(1/beta) for sub-Weibull moment growth.
    """

    def g_fn(L: float) -> float:
        return _doob_multiplier(L, sharp_doob) * rosenthal_upper(L, symmetric) * float(moment_fn(L))

    return MomentEnvelope.from_callable(
        g_fn, domain_low=float(p), L0=L0, L_grid=L_grid, kind="analytic", p=float(p), label=label
    )


def mixed_envelope_from_field(
    xi: GridFunction,
    p_vec,
    L_grid,
    *,
    sharp_doob: bool = False,
    symmetric: bool = False,
    label: str = "",
) -> MomentEnvelope:
    """Mixed-norm envelope: g(L) = 2 K_R(L) * | (E|xi(x)|^L)^(1/L) |_{p_vec}.

    xi lives on X_1 x ... x X_l x Omega with Omega the last axis; the moment
    function x -> (E|xi(x)|^L)^(1/L) is formed pointwise and its mixed norm
    over the X axes taken with exponents p_vec.
    """
    p_vec = tuple(float(q) for q in p_vec)
    if xi.n_factors != len(p_vec) + 1:
        raise ValueError("field must have one more factor (Omega, last axis) than p_vec")
    p_bar = max(p_vec)
    if p_bar < 2.0:
        raise ValueError("the bound machinery assumes max exponent >= 2")
    L_grid = np.asarray(L_grid, dtype=float)
    if np.any(L_grid < p_bar):
        raise ValueError("all envelope grid points must satisfy L >= max exponent")
    omega = xi.axes[-1]
    if not omega.is_probability:
        raise ValueError("Omega factor must be a probability grid")
    x_axes = xi.axes[:-1]
    with np.errstate(divide="ignore"):
        log_ow = np.log(omega.weights)
        log_abs = np.log(np.abs(xi.values))

    def g_at(L: float) -> float:
        # pointwise moment root (E|xi(x)|^L)^(1/L) in log space; bounded by
        # max|xi| for every L, so the mixed norm below never overflows
        psi = np.exp(logsumexp(L * log_abs + log_ow, axis=-1) / L)
        norm = mixed_norm(GridFunction(x_axes, psi), p_vec)
        return _doob_multiplier(L, sharp_doob) * rosenthal_upper(L, symmetric) * norm

    g_values = np.array([g_at(L) for L in L_grid])
    return MomentEnvelope(
        L_grid, g_values, domain_low=p_bar, kind="grid", p_vec=p_vec, label=label
    )


def _golden_min(f, a: float, b: float):
    """Golden-section minimum of f on [a, b]; returns (f(x*), x*)."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(_GOLDEN_ITERS):
        if (b - a) <= _GOLDEN_REL_WIDTH * max(1.0, abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (fc, c) if fc <= fd else (fd, d)


def _bracket_objective(env: MomentEnvelope, i0: int, i1: int, i2: int, log_z: float):
    """Objective lam -> L (log g(L) - log z), L = e^lam, on the bracket [i0, i2].

    Grid envelopes are log-log piecewise linear, so inside the bracket the
    interpolation reduces to two straight segments around the knot at i1;
    analytic envelopes (and brackets touching a g = 0 grid point) call log_g.
    """
    if env._g_fn is None:
        lamg, lg = env._log_L_grid, env._log_g_grid
        if math.isfinite(lg[i0]) and math.isfinite(lg[i1]) and math.isfinite(lg[i2]):
            knot, lg1 = lamg[i1], lg[i1]
            sl_left = (lg1 - lg[i0]) / (knot - lamg[i0]) if i0 < i1 else 0.0
            sl_right = (lg[i2] - lg1) / (lamg[i2] - knot) if i2 > i1 else 0.0

            def f(lam: float) -> float:
                slope = sl_left if lam <= knot else sl_right
                return math.exp(lam) * (lg1 + slope * (lam - knot) - log_z)

            return f

    def f(lam: float) -> float:
        L = math.exp(lam)
        return L * (env.log_g(L) - log_z)

    return f


def tail_argmin(env: MomentEnvelope, z: float) -> tuple[float, float]:
    """min(1, inf_L (g(L)/z)^L) together with the optimizing L.

    Grid scan first, then golden-section refinement in log L inside the best
    bracketing triple.  The value is clamped to [0, 1] since it bounds a
    probability; a vacuous result is 1.0, never an error.  The interesting
    range is z > 1, but any positive z is accepted (block sums feed in
    arguments u v(A(k))/w that start below 1 when w > u).
    """
    if not z > 0.0:
        raise ValueError("tail conversion requires z > 0")
    log_z = math.log(z)
    with np.errstate(invalid="ignore"):
        objective = env.L_grid * (env._log_g_grid - log_z)
    i = int(np.argmin(objective))
    best_val = float(objective[i])
    best_L = float(env.L_grid[i])
    if best_val > -math.inf:
        i0 = max(i - 1, 0)
        i2 = min(i + 1, env.L_grid.size - 1)
        lam_lo = math.log(env.L_grid[i0])
        lam_hi = math.log(env.L_grid[i2])
        if lam_hi > lam_lo:
            f = _bracket_objective(env, i0, i, i2, log_z)
            ref_val, ref_lam = _golden_min(f, lam_lo, lam_hi)
            if ref_val < best_val:
                best_val, best_L = ref_val, math.exp(ref_lam)
    if best_val >= 0.0:
        return 1.0, best_L
    return math.exp(best_val), best_L


def tail_from_envelope(env: MomentEnvelope, z: float) -> float:
    return tail_argmin(env, z)[0]


@dataclass(frozen=True)
class TailClass:
    """Tail-shape descriptors for moment growth of order L^(1/beta1) (log factor beta2).

    r0 is the norming power paired with the class; the resulting bound decays
    like exp(-C u^u_power log^log_power u).
    """

    beta1: float
    beta2: float
    r0: float
    u_power: float
    log_power: float


def classify_tail(beta1: float, beta2: float = 0.0) -> TailClass:
    """Norming power and bound exponents for a tail class.

    beta1 = inf is the bounded case: r0 = 1 and the bound shape is exp(-C u).
    """
    if math.isinf(beta1):
        return TailClass(beta1=math.inf, beta2=float(beta2), r0=1.0, u_power=1.0, log_power=0.0)
    if not beta1 > 0.0:
        raise ValueError("beta1 must be positive (or infinite)")
    r0 = (beta1 + 1.0) / beta1
    u_power = beta1 / (beta1 + 1.0)
    log_power = (-beta2 - beta1 * (beta1 - 1.0)) / (beta1 + 1.0)
    return TailClass(float(beta1), float(beta2), r0, u_power, log_power)


def envelope_to_json(env: MomentEnvelope) -> dict:
    doc = {
        "kind": env.kind,
        "L0": None if math.isinf(env.L0) else env.L0,
        "L_grid": env.L_grid.tolist(),
        "g_values": env.g_values.tolist(),
    }
    if env.p_vec is not None:
        doc["p_vec"] = list(env.p_vec)
    else:
        doc["p"] = env.domain_low if env.p is None else env.p
    return doc


def envelope_from_json(doc: dict) -> MomentEnvelope:
    """Rebuild an envelope from its JSON form.

    Deserialized envelopes are grid-backed (log-linear in log L between grid
    points) regardless of origin; the optimizer then searches the grid span.
    """
    try:
        if "p_vec" in doc:
            p_vec = tuple(float(q) for q in doc["p_vec"])
            domain_low = max(p_vec)
            extra = {"p_vec": p_vec}
        else:
            domain_low = float(doc["p"])
            extra = {"p": domain_low}
        L0 = math.inf if doc.get("L0") is None else float(doc["L0"])
        env = MomentEnvelope.from_grid(
            doc["L_grid"], doc["g_values"], domain_low=domain_low, L0=L0,
            kind=doc.get("kind", "grid"), **extra,
        )
    except KeyError as exc:
        raise ValueError(f"envelope JSON is missing field {exc}") from exc
    return env

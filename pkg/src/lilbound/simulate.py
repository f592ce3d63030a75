"""Monte Carlo harness for normed partial-sum trajectories.

Generates trajectories n -> ||S(n)|| / (sqrt(n) v_r(n)) for i.i.d. or
martingale-difference fields on finite grid spaces, estimates the tail
Q(u) = P(sup_n ... > u) empirically with exact binomial confidence limits,
and checks dominance against computed bound curves.

Reproducibility contract: each trial owns a counter-based substream keyed by
(seed, trial index) with a fixed in-trial draw order, so results are
bit-identical for any worker count and any chunking of the trial range.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp
from scipy.stats import beta as _beta_dist

from .constants import doob_factor, rosenthal_upper
from .envelopes import MomentEnvelope
from .grid_spaces import GridFunction, GridMeasureSpace, mixed_norm
from .lil_bounds import TailBoundCurve
from .partitions import NormingSequence

__all__ = [
    "FieldSpec",
    "TrajectoryEnsemble",
    "EmpiricalCurve",
    "DominanceReport",
    "simulate",
    "simulate_many",
    "empirical_Q",
    "clopper_pearson_upper",
    "dominance_report",
    "envelope_for_field_spec",
    "horizon_growth",
    "resolve_threads",
]

_FAMILIES = ("rademacher", "uniform", "gaussian", "weibull")
_CHUNK = 64


@dataclass(frozen=True)
class FieldSpec:
    """Distribution, dependence, space, and norm of one simulated field.

    family: rademacher | uniform (on (-a, a)) | gaussian (std sigma, scalar
    or per grid point) | weibull (symmetrized, P(|xi| > z) = exp(-z^beta)).
    norm_kind: lp (single-factor space), mixed (one exponent per factor,
    first factor innermost), or cl (sup over t_size parameter slots of the
    lp norm, entries drawn independently per slot).
    dependence: iid, or martingale for the sign-flip coupling
    xi_j = s_j |y_j| (1 + kappa tanh(mean S_{j-1})) with a shared symmetric
    sign s_j, which is conditionally centered by construction.
    """

    family: str
    spaces: tuple
    norm_kind: str = "lp"
    p: Union[float, tuple] = 2.0
    a: float = 1.0
    sigma: Union[float, np.ndarray] = 1.0
    beta: float = 1.0
    dependence: str = "iid"
    kappa: float = 0.5
    t_size: int = 1

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; pick one of {_FAMILIES}")
        if self.dependence not in ("iid", "martingale"):
            raise ValueError("dependence must be 'iid' or 'martingale'")
        if not 0.0 <= self.kappa < 1.0:
            raise ValueError("kappa must lie in [0, 1)")
        spaces = tuple(self.spaces)
        if not spaces or not all(isinstance(s, GridMeasureSpace) for s in spaces):
            raise ValueError("spaces must be a nonempty tuple of GridMeasureSpace")
        if self.norm_kind == "lp" or self.norm_kind == "cl":
            if len(spaces) != 1:
                raise ValueError(f"{self.norm_kind} norm takes exactly one space factor")
            p = float(self.p)
            if p < 1.0:
                raise ValueError("norm exponent p must be >= 1")
            object.__setattr__(self, "p", p)
        elif self.norm_kind == "mixed":
            p = tuple(float(q) for q in np.atleast_1d(self.p))
            if len(p) != len(spaces):
                raise ValueError("mixed norm needs one exponent per space factor")
            if any(q < 1.0 for q in p):
                raise ValueError("norm exponents must be >= 1")
            object.__setattr__(self, "p", p)
        else:
            raise ValueError("norm_kind must be 'lp', 'mixed' or 'cl'")
        if self.norm_kind != "cl" and self.t_size != 1:
            raise ValueError("t_size is only meaningful for the cl norm")
        if self.t_size < 1:
            raise ValueError("t_size must be >= 1")
        if self.family == "uniform" and self.a < 0.0:
            raise ValueError("uniform half-width a must be nonnegative")
        if self.family == "weibull" and self.beta <= 0.0:
            raise ValueError("weibull shape beta must be positive")
        if self.family == "gaussian":
            sig = np.asarray(self.sigma, dtype=float)
            if np.any(sig < 0.0):
                raise ValueError("gaussian sigma must be nonnegative")
            if sig.ndim == 0:
                sig = np.full(self.x_size_of(spaces), float(sig))
            elif sig.shape != (self.x_size_of(spaces),):
                raise ValueError("per-point sigma must have one entry per grid point")
            object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "spaces", spaces)

    @staticmethod
    def x_size_of(spaces) -> int:
        return int(np.prod([s.size for s in spaces]))

    @property
    def x_size(self) -> int:
        return self.x_size_of(self.spaces)

    @property
    def draw_dim(self) -> int:
        return self.x_size * self.t_size

    def flat_weights(self) -> np.ndarray:
        """Product weights in flat order with the first factor innermost."""
        w = self.spaces[0].weights
        for sp in self.spaces[1:]:
            w = np.multiply.outer(sp.weights, w).ravel()
        return w

    def to_json(self) -> dict:
        data = {
            "family": self.family,
            "dependence": self.dependence,
            "norm": {"kind": self.norm_kind, "p": list(self.p) if isinstance(self.p, tuple) else self.p},
            "spaces": [{"weights": [float(x) for x in s.weights]} for s in self.spaces],
        }
        if self.family == "uniform":
            data["a"] = self.a
        if self.family == "gaussian":
            data["sigma"] = [float(x) for x in np.atleast_1d(self.sigma)]
        if self.family == "weibull":
            data["beta"] = self.beta
        if self.dependence == "martingale":
            data["kappa"] = self.kappa
        if self.norm_kind == "cl":
            data["t_size"] = self.t_size
        return data

    @classmethod
    def from_json(cls, data: dict) -> "FieldSpec":
        try:
            norm = data["norm"]
            kind = norm["kind"]
            p = norm["p"]
            spaces = tuple(
                GridMeasureSpace(np.asarray(s["weights"], dtype=float)) for s in data["spaces"]
            )
            kwargs = {}
            for key in ("a", "beta", "kappa", "t_size"):
                if key in data:
                    kwargs[key] = data[key]
            if "sigma" in data:
                sig = np.asarray(data["sigma"], dtype=float)
                kwargs["sigma"] = float(sig) if sig.ndim == 0 or sig.size == 1 else sig
            return cls(
                family=data["family"],
                spaces=spaces,
                norm_kind=kind,
                p=tuple(p) if isinstance(p, list) else float(p),
                dependence=data.get("dependence", "iid"),
                **kwargs,
            )
        except KeyError as exc:
            raise ValueError(f"field spec JSON is missing field {exc}") from exc

    @classmethod
    def from_json_str(cls, text: str) -> "FieldSpec":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class TrajectoryEnsemble:
    spec: FieldSpec
    n_max: int
    trials: int
    seed: int
    norming_r: float
    sup_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        sups = np.asarray(self.sup_values, dtype=float)
        if sups.shape != (self.trials,) or np.any(sups < 0.0):
            raise ValueError("sup_values must be one nonnegative entry per trial")
        object.__setattr__(self, "sup_values", sups)


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, else LIL_THREADS (0 or unset = auto)."""
    if threads is None:
        raw = os.environ.get("LIL_THREADS", "0")
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ValueError(f"LIL_THREADS must be an integer, got {raw!r}") from exc
    if threads < 0:
        raise ValueError("thread count must be nonnegative")
    if threads == 0:
        threads = min(8, os.cpu_count() or 1)
    return threads


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, trial], dtype=np.uint64)))


def _draw_magnitudes_and_signs(spec: FieldSpec, rng: np.random.Generator, n: int):
    """Fixed in-trial draw order: magnitudes (or symmetric values), then extra signs."""
    dim = spec.draw_dim
    if spec.family == "rademacher":
        vals = rng.integers(0, 2, size=(n, dim)).astype(np.float64) * 2.0 - 1.0
        return vals
    if spec.family == "uniform":
        return rng.uniform(-spec.a, spec.a, size=(n, dim))
    if spec.family == "gaussian":
        scale = np.tile(np.atleast_1d(spec.sigma), spec.t_size)
        return rng.standard_normal(size=(n, dim)) * scale
    u = rng.random(size=(n, dim))
    mags = (-np.log1p(-u)) ** (1.0 / spec.beta)
    signs = rng.integers(0, 2, size=(n, dim)).astype(np.float64) * 2.0 - 1.0
    return mags * signs


def _norm_trajectory(spec: FieldSpec, S: np.ndarray) -> np.ndarray:
    """||S(n)|| for a (trials, n, dim) stack of partial sums -> (trials, n)."""

    def _pow(x, q):
        return x * x if q == 2.0 else x**q

    if spec.norm_kind == "lp":
        w = spec.spaces[0].weights
        return (_pow(np.abs(S), spec.p) @ w) ** (1.0 / spec.p)
    if spec.norm_kind == "cl":
        w = spec.spaces[0].weights
        shaped = S.reshape(S.shape[0], S.shape[1], spec.t_size, spec.spaces[0].size)
        return ((_pow(np.abs(shaped), spec.p) @ w) ** (1.0 / spec.p)).max(axis=2)
    sizes = [sp.size for sp in spec.spaces]
    arr = S.reshape(S.shape[0], S.shape[1], *reversed(sizes))
    arr = np.abs(arr)
    for sp, q in zip(spec.spaces, spec.p):
        arr = (_pow(arr, q) @ sp.weights) ** (1.0 / q)
    return arr


def _chunk_sups(spec: FieldSpec, seed: int, lo: int, hi: int, n_max: int, divisors: np.ndarray) -> np.ndarray:
    count = hi - lo
    dim = spec.draw_dim
    draws = np.empty((count, n_max, dim))
    signs = np.empty((count, n_max)) if spec.dependence == "martingale" else None
    for i in range(count):
        rng = _trial_rng(seed, lo + i)
        draws[i] = _draw_magnitudes_and_signs(spec, rng, n_max)
        if signs is not None:
            signs[i] = rng.integers(0, 2, size=n_max).astype(np.float64) * 2.0 - 1.0
    if spec.dependence == "iid":
        S = np.cumsum(draws, axis=1)
    else:
        np.abs(draws, out=draws)
        S = np.empty_like(draws)
        running = np.zeros((count, dim))
        kappa = spec.kappa
        for j in range(n_max):
            mult = 1.0 + kappa * np.tanh(running.mean(axis=1))
            running += signs[:, j, None] * draws[:, j, :] * mult[:, None]
            S[:, j, :] = running
    norms = _norm_trajectory(spec, S)
    return np.stack([(norms / d).max(axis=1) for d in divisors])


def simulate_many(
    spec: FieldSpec,
    n_max: int,
    trials: int,
    seed: int,
    *,
    rs,
    threads: Optional[int] = None,
) -> tuple[TrajectoryEnsemble, ...]:
    """One ensemble per norming power in rs, sharing a single trajectory pass.

    The trajectories depend only on (seed, trial), not on r, so evaluating
    several norming powers costs one divide-and-max each instead of a full
    re-simulation.  Every returned ensemble is identical to a separate
    simulate() call with that r.
    """
    if n_max < 1 or trials < 1:
        raise ValueError("n_max and trials must be >= 1")
    rs = tuple(float(r) for r in rs)
    if not rs:
        raise ValueError("need at least one norming power")
    for r in rs:
        NormingSequence.iterated_log(r)  # validates r >= 1/2
    ns = np.arange(1, n_max + 1, dtype=float)
    loglog = np.log(np.log(ns + (math.exp(math.e) - 1.0)))
    divisors = np.stack([np.sqrt(ns) * loglog**r for r in rs])
    divisors[:, 0] = 1.0  # sqrt(1) * v(1), exactly
    workers = resolve_threads(threads)
    bounds = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]
    sups = np.empty((len(rs), trials))
    if workers <= 1 or len(bounds) == 1:
        for lo, hi in bounds:
            sups[:, lo:hi] = _chunk_sups(spec, seed, lo, hi, n_max, divisors)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_chunk_sups, spec, seed, lo, hi, n_max, divisors) for lo, hi in bounds]
            for (lo, hi), fut in zip(bounds, futures):
                sups[:, lo:hi] = fut.result()
    return tuple(
        TrajectoryEnsemble(spec, n_max, trials, seed, r, sups[i]) for i, r in enumerate(rs)
    )


def simulate(
    spec: FieldSpec,
    n_max: int,
    trials: int,
    seed: int,
    *,
    r: float = 0.5,
    threads: Optional[int] = None,
) -> TrajectoryEnsemble:
    """Per-trial sup of ||S(n)||/(sqrt(n) v_r(n)) over n <= n_max.

    Trials run in deterministic chunks over a thread pool; each trial's
    substream is keyed by (seed, trial), so the output is independent of the
    worker count.
    """
    return simulate_many(spec, n_max, trials, seed, rs=(r,), threads=threads)[0]


@dataclass(frozen=True)
class EmpiricalCurve:
    u_grid: np.ndarray
    q_hat: np.ndarray
    cp_upper_99: np.ndarray
    trials: int


def clopper_pearson_upper(k: int, n: int, confidence: float = 0.99) -> float:
    """Exact binomial upper confidence limit for k successes in n trials."""
    if not 0 <= k <= n or n < 1:
        raise ValueError("need 0 <= k <= n with n >= 1")
    alpha = 1.0 - confidence
    if k == n:
        return 1.0
    if k == 0:
        return 1.0 - alpha ** (1.0 / n)
    return float(_beta_dist.ppf(confidence, k + 1, n - k))


def empirical_Q(ens: TrajectoryEnsemble, u_grid) -> EmpiricalCurve:
    """Empirical tail Q_hat(u) = #(sup > u)/trials with 99% upper confidence limits."""
    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.ndim != 1 or np.any(np.diff(u_grid) <= 0.0):
        raise ValueError("u grid must be 1-d strictly increasing")
    sups = np.sort(ens.sup_values)
    n = ens.trials
    exceed = n - np.searchsorted(sups, u_grid, side="right")
    q_hat = exceed / n
    cp = np.array([clopper_pearson_upper(int(k), n) for k in exceed])
    return EmpiricalCurve(u_grid, q_hat, cp, n)


@dataclass(frozen=True)
class DominanceReport:
    u_grid: np.ndarray
    cp_upper: np.ndarray
    bound: np.ndarray
    passed: np.ndarray

    @property
    def all_pass(self) -> bool:
        return bool(self.passed.all())

    @property
    def failures(self) -> list:
        return [
            (float(u), float(c), float(b))
            for u, c, b, ok in zip(self.u_grid, self.cp_upper, self.bound, self.passed)
            if not ok
        ]


def dominance_report(curve: EmpiricalCurve, bound: TailBoundCurve) -> DominanceReport:
    """Per-u PASS iff the 99% upper confidence limit is <= the bound, or the bound is vacuous.

    A failure indicates a bug somewhere: the bound is proved for the
    all-horizon sup, which stochastically dominates the simulated one.
    """
    if curve.u_grid.shape != bound.u_grid.shape or not np.allclose(
        curve.u_grid, bound.u_grid, rtol=1e-12, atol=0.0
    ):
        raise ValueError("empirical and bound curves must share the same u grid")
    ok = (curve.cp_upper_99 <= bound.values + 1e-12) | (bound.values >= 1.0)
    return DominanceReport(curve.u_grid, curve.cp_upper_99, bound.values, ok)


def _log_abs_moment(spec: FieldSpec, L: float) -> np.ndarray:
    """log E|xi(x)|^L per grid point, in flat order."""
    nx = spec.x_size
    if spec.family == "rademacher":
        out = np.zeros(nx)
    elif spec.family == "uniform":
        if spec.a == 0.0:
            return np.full(nx, -math.inf)
        out = np.full(nx, L * math.log(spec.a) - math.log(L + 1.0))
    elif spec.family == "gaussian":
        sig = np.atleast_1d(np.asarray(spec.sigma, dtype=float))
        with np.errstate(divide="ignore"):
            out = L * np.log(sig)
        out += 0.5 * L * math.log(2.0) + math.lgamma((L + 1.0) / 2.0) - 0.5 * math.log(math.pi)
    else:
        out = np.full(nx, math.lgamma(L / spec.beta + 1.0))
    if spec.dependence == "martingale":
        out = out + L * math.log1p(spec.kappa)
    return out


def envelope_for_field_spec(
    spec: FieldSpec,
    L_grid=None,
    *,
    sharp_doob: bool = False,
    label: str = "",
) -> MomentEnvelope:
    """Moment envelope g(L) for a field spec, matching its norm.

    lp: g(L) = mult * K_R(L) * (int_X E|xi(x)|^L mu(dx))^(1/L); mixed: the
    integral is replaced by the mixed norm of x -> (E|xi(x)|^L)^(1/L).  The
    martingale mode only inflates moments by its amplitude cap (1 + kappa);
    the Rosenthal constant used is the independent-summand one, so treat
    martingale envelopes as exploratory.  cl norms need the chaining
    machinery instead and are rejected here.
    """
    if spec.norm_kind == "cl":
        raise ValueError("cl-norm envelopes come from the chaining machinery, not from moments")
    p_low = spec.p if spec.norm_kind == "lp" else max(spec.p)
    if p_low < 2.0:
        raise ValueError("envelopes need every norm exponent >= 2")
    if L_grid is None:
        L_grid = np.geomspace(p_low, 1e8, 257)
    L_grid = np.asarray(L_grid, dtype=float)
    mult = 2.0 if not sharp_doob else None

    if spec.norm_kind == "lp":
        w = spec.spaces[0].weights
        logw = np.log(w)

        def moment_root(L: float) -> float:
            lm = _log_abs_moment(spec, L)
            if np.all(np.isinf(lm)):
                return 0.0
            return float(math.exp(logsumexp(lm + logw) / L))

    else:
        shape = tuple(sp.size for sp in spec.spaces)

        def moment_root(L: float) -> float:
            lm = _log_abs_moment(spec, L)
            roots = np.exp(lm / L).reshape(shape, order="F")
            f = GridFunction(axes=spec.spaces, values=roots)
            return float(mixed_norm(f, spec.p))

    def g_fn(L: float) -> float:
        m = doob_factor(L) if sharp_doob else mult
        return m * rosenthal_upper(L) * moment_root(L)

    kwargs = {"p": spec.p} if spec.norm_kind == "lp" else {"p_vec": spec.p}
    return MomentEnvelope.from_callable(
        g_fn,
        domain_low=p_low,
        L_grid=L_grid,
        label=label or f"{spec.family}-{spec.norm_kind}",
        **kwargs,
    )


def horizon_growth(
    spec: FieldSpec, n_max: int, trials: int, seed: int, *, r: float = 0.5, threads: Optional[int] = None
) -> dict:
    """Diagnostic: how much the per-trial sups grow when the horizon doubles.

    The infinite-horizon sup is out of any finite experiment's reach; a large
    growth fraction signals that n_max materially undercounts it.
    """
    short = simulate(spec, n_max, trials, seed, r=r, threads=threads)
    long = simulate(spec, 2 * n_max, trials, seed, r=r, threads=threads)
    grew = long.sup_values > short.sup_values
    rel = np.zeros(trials)
    nonzero = short.sup_values > 0.0
    rel[nonzero] = long.sup_values[nonzero] / short.sup_values[nonzero] - 1.0
    return {
        "grew_fraction": float(grew.mean()),
        "max_relative_increase": float(rel.max(initial=0.0)),
        "n_max": n_max,
    }

"""Temporal CHSH combinations and parameter sweeps.

``bell_operator`` combines four two-time correlators,

    B = E(a, b) + E(a, b') + E(a', b) - E(a', b'),

whose legs share states, so sweeps first collect the unique correlator
evaluations (a node's four legs reduce to at most four distinct parameter
keys, and neighbouring nodes share most of them), run those once each,
then assemble nodes in index order. That makes sweep output deterministic
and independent of the worker count.

Per-node failures (degenerate kernels under a forced method,
non-convergent quadratic forms) become NaN entries with a flag string;
they never abort a sweep.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import SqueezeBellError
from .evaluators import (
    CorrelatorResult,
    EvaluationSettings,
    correlator_auto,
    correlator_equal_time,
    correlator_large_ell,
    correlator_large_ell_large_squeeze,
    correlator_numeric,
    correlator_small_ell,
    is_coincident,
)
from .state import SqueezeParams, TransitionSpec

__all__ = [
    "BellConfig",
    "SweepGrid",
    "SweepResult",
    "MaxResult",
    "bell_operator",
    "sweep_map",
    "find_max",
    "AXIS_SELECTORS",
    "CIRELSON_BOUND",
]

CIRELSON_BOUND = 2.0 * math.sqrt(2.0)

_SIDES = ("a", "a_prime", "b", "b_prime")
_SIDE_KEYS = {"a": "a", "ap": "a_prime", "b": "b", "bp": "b_prime"}

# selector -> (rank, handler); ranks order the application so derived
# angle-difference selectors see the absolute angles they depend on.
AXIS_SELECTORS: dict[str, int] = {}
for _short in _SIDE_KEYS:
    AXIS_SELECTORS[f"r_{_short}"] = 0
    AXIS_SELECTORS[f"phi_{_short}"] = 0
    AXIS_SELECTORS[f"theta_{_short}"] = 0
AXIS_SELECTORS["r"] = 0
AXIS_SELECTORS["phi"] = 0
AXIS_SELECTORS["ell"] = 0
AXIS_SELECTORS["dtheta"] = 1
AXIS_SELECTORS["dtheta_ab"] = 1
AXIS_SELECTORS["dtheta_apb"] = 1
AXIS_SELECTORS["dtheta_abp"] = 2
AXIS_SELECTORS["dtheta_apbp"] = 2


@dataclass(frozen=True)
class BellConfig:
    """Four measurement settings plus evaluation policy for one CHSH value."""

    a: SqueezeParams
    a_prime: SqueezeParams
    b: SqueezeParams
    b_prime: SqueezeParams
    settings: EvaluationSettings
    method: str = "auto"

    def __post_init__(self) -> None:
        # The alternating sum of the four leg angle differences telescopes
        # to zero for any four absolute angles; a finite residual means a
        # config was assembled from inconsistent differences.
        residual = (
            (self.a.theta - self.b.theta)
            - (self.a.theta - self.b_prime.theta)
            + (self.a_prime.theta - self.b_prime.theta)
            - (self.a_prime.theta - self.b.theta)
        )
        if abs(residual) > 1e-12:
            raise ValueError(
                f"angle differences violate the four-time closure identity "
                f"(residual {residual:.3e})"
            )


@dataclass(frozen=True)
class SweepGrid:
    """A rectangular scan: two axis selectors applied over a fixed config.

    Each axis is (selector, lo, hi, n) with n uniformly spaced values,
    endpoints included. ``quantity`` is "bell" (CHSH over the four
    settings) or "correlator" (E over the (a, b) pair only).
    """

    fixed: BellConfig
    axis1: tuple[str, float, float, int]
    axis2: tuple[str, float, float, int]
    quantity: str = "bell"

    def __post_init__(self) -> None:
        if self.quantity not in ("bell", "correlator"):
            raise ValueError(f"quantity must be 'bell' or 'correlator', got {self.quantity!r}")
        for axis in (self.axis1, self.axis2):
            sel, lo, hi, n = axis
            if sel not in AXIS_SELECTORS:
                raise ValueError(
                    f"unknown axis selector {sel!r}; valid: {sorted(AXIS_SELECTORS)}"
                )
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValueError(f"axis range must be finite with hi > lo, got {axis}")
            if n < 2:
                raise ValueError(f"axis needs >= 2 points, got {axis}")
        if self.axis1[0] == self.axis2[0]:
            raise ValueError("axis selectors must reference distinct parameters")

    def axis_values(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.axis1[1], self.axis1[2], self.axis1[3]),
            np.linspace(self.axis2[1], self.axis2[2], self.axis2[3]),
        )


@dataclass(frozen=True)
class SweepResult:
    """Dense sweep output; failed nodes are NaN with a non-empty flag."""

    grid: SweepGrid
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    methods: np.ndarray
    flags: np.ndarray

    def max_node(self) -> tuple[float, int, int]:
        finite = np.where(np.isfinite(self.values), self.values, -np.inf)
        flat = int(np.argmax(finite))
        i, j = np.unravel_index(flat, self.values.shape)
        return float(self.values[i, j]), int(i), int(j)


@dataclass(frozen=True)
class MaxResult:
    """Refined maximum: always >= the best grid node it started from."""

    value: float
    x: float
    y: float
    grid_value: float
    grid_index: tuple[int, int]
    n_evaluations: int


def _apply_selector(state: dict, selector: str, value: float) -> None:
    if selector == "ell":
        state["ell"] = value
        return
    if selector in ("r", "phi"):
        field = "r" if selector == "r" else "varphi"
        for side in _SIDES:
            state[side] = replace(state[side], **{field: value})
        return
    if selector == "dtheta" or selector == "dtheta_ab":
        state["a"] = replace(state["a"], theta=state["b"].theta + value)
        return
    if selector == "dtheta_apb":
        state["a_prime"] = replace(state["a_prime"], theta=state["b"].theta + value)
        return
    if selector == "dtheta_abp":
        state["b_prime"] = replace(state["b_prime"], theta=state["a"].theta - value)
        return
    if selector == "dtheta_apbp":
        state["b_prime"] = replace(state["b_prime"], theta=state["a_prime"].theta - value)
        return
    stem, _, short = selector.partition("_")
    side = _SIDE_KEYS[short]
    field = {"r": "r", "phi": "varphi", "theta": "theta"}[stem]
    state[side] = replace(state[side], **{field: value})


def _node_config(grid: SweepGrid, xv: float, yv: float) -> tuple[BellConfig, EvaluationSettings]:
    state = {side: getattr(grid.fixed, side) for side in _SIDES}
    state["ell"] = grid.fixed.settings.ell
    pairs = sorted(
        [(grid.axis1[0], xv), (grid.axis2[0], yv)],
        key=lambda p: AXIS_SELECTORS[p[0]],
    )
    for sel, val in pairs:
        _apply_selector(state, sel, val)
    settings = replace(grid.fixed.settings, ell=state["ell"])
    cfg = replace(
        grid.fixed,
        a=state["a"],
        a_prime=state["a_prime"],
        b=state["b"],
        b_prime=state["b_prime"],
        settings=settings,
    )
    return cfg, settings


_Key = tuple[float, float, float, float, float, float]


def _pair_key(pa: SqueezeParams, pb: SqueezeParams, ell: float) -> _Key:
    return (pa.r, pa.varphi, pb.r, pb.varphi, pa.theta - pb.theta, ell)


def _node_keys(grid: SweepGrid, xv: float, yv: float) -> list[_Key]:
    cfg, settings = _node_config(grid, xv, yv)
    if grid.quantity == "correlator":
        return [_pair_key(cfg.a, cfg.b, settings.ell)]
    return [
        _pair_key(cfg.a, cfg.b, settings.ell),
        _pair_key(cfg.a, cfg.b_prime, settings.ell),
        _pair_key(cfg.a_prime, cfg.b, settings.ell),
        _pair_key(cfg.a_prime, cfg.b_prime, settings.ell),
    ]


def _evaluate_pair(
    spec: TransitionSpec, settings: EvaluationSettings, method: str
) -> CorrelatorResult:
    if method == "auto":
        return correlator_auto(spec, settings)
    if method == "numeric":
        return correlator_numeric(spec, settings)
    if method == "small-ell":
        return correlator_small_ell(spec, settings.ell)
    if method == "large-ell":
        return correlator_large_ell(spec)
    if method == "large-squeeze":
        return correlator_large_ell_large_squeeze(
            spec.a.varphi, spec.b.varphi, spec.delta_theta
        )
    if method == "equal-time":
        if not is_coincident(spec):
            raise SqueezeBellError(
                "equal-time method requires a coincident transition pair"
            )
        return correlator_equal_time(spec.a, settings.ell)
    if method == "oracle":
        from .oracle import correlator_quadrature

        value = correlator_quadrature(spec, settings.ell)
        return CorrelatorResult(value=value, method="oracle")
    raise ValueError(f"unknown method {method!r}")


def evaluate_key(key: _Key, method: str, settings: EvaluationSettings) -> tuple[float, str, str]:
    """Evaluate one unique correlator key; errors become (nan, method, flag)."""
    ra, pa, rb, pb, dth, ell = key
    spec = TransitionSpec(
        a=SqueezeParams(r=ra, varphi=pa, theta=dth),
        b=SqueezeParams(r=rb, varphi=pb, theta=0.0),
    )
    local = replace(settings, ell=ell)
    try:
        res = _evaluate_pair(spec, local, method)
    except SqueezeBellError as exc:
        return math.nan, method, f"{type(exc).__name__}: {exc}"
    flag = "; ".join(res.notes) if res.notes else ("degenerate-path" if res.degenerate_path else "")
    return res.value, res.method, flag


def _evaluate_key_task(args: tuple[_Key, str, tuple]) -> tuple[float, str, str]:
    key, method, st = args
    settings = EvaluationSettings(ell=st[0], trunc_rel_tol=st[1], quad_rel_tol=st[2], max_bands=st[3])
    return evaluate_key(key, method, settings)


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("SQUEEZEBELL_WORKERS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _evaluate_unique(
    keys: list[_Key],
    method: str,
    settings: EvaluationSettings,
    workers: int | None,
) -> dict[_Key, tuple[float, str, str]]:
    n_workers = _resolve_workers(workers)
    st = (settings.ell, settings.trunc_rel_tol, settings.quad_rel_tol, settings.max_bands)
    if n_workers <= 1 or len(keys) < 8:
        return {k: evaluate_key(k, method, settings) for k in keys}
    tasks = [(k, method, st) for k in keys]
    chunk = max(1, len(tasks) // (n_workers * 8))
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        out = list(pool.map(_evaluate_key_task, tasks, chunksize=chunk))
    return dict(zip(keys, out))


def bell_operator(config: BellConfig) -> float:
    """CHSH combination B = E(a,b) + E(a,b') + E(a',b) - E(a',b')."""
    ell = config.settings.ell
    legs = [
        _pair_key(config.a, config.b, ell),
        _pair_key(config.a, config.b_prime, ell),
        _pair_key(config.a_prime, config.b, ell),
        _pair_key(config.a_prime, config.b_prime, ell),
    ]
    done: dict[_Key, tuple[float, str, str]] = {}
    for key in legs:
        if key not in done:
            value, _, flag = evaluate_key(key, config.method, config.settings)
            if math.isnan(value):
                raise SqueezeBellError(f"correlator leg failed: {flag}")
            done[key] = (value, "", flag)
    e_ab, e_abp, e_apb, e_apbp = (done[k][0] for k in legs)
    return e_ab + e_abp + e_apb - e_apbp


def sweep_map(grid: SweepGrid, workers: int | None = None) -> SweepResult:
    """Evaluate the grid; unique correlators once each, nodes in index order."""
    xs, ys = grid.axis_values()
    unique: list[_Key] = []
    seen: set[_Key] = set()
    node_keys: list[list[_Key]] = []
    for xv in xs:
        for yv in ys:
            keys = _node_keys(grid, float(xv), float(yv))
            node_keys.append(keys)
            for k in keys:
                if k not in seen:
                    seen.add(k)
                    unique.append(k)
    table = _evaluate_unique(unique, grid.fixed.method, grid.fixed.settings, workers)

    n1, n2 = len(xs), len(ys)
    values = np.full((n1, n2), np.nan)
    methods = np.full((n1, n2), "", dtype=object)
    flags = np.full((n1, n2), "", dtype=object)
    signs = (1.0,) if grid.quantity == "correlator" else (1.0, 1.0, 1.0, -1.0)
    it = iter(node_keys)
    for i in range(n1):
        for j in range(n2):
            keys = next(it)
            total = 0.0
            node_methods: list[str] = []
            node_flags: list[str] = []
            ok = True
            for key, sign in zip(keys, signs):
                val, meth, flag = table[key]
                if math.isnan(val):
                    ok = False
                if flag:
                    node_flags.append(flag)
                node_methods.append(meth)
                total += sign * (val if math.isfinite(val) else 0.0)
            values[i, j] = total if ok else math.nan
            methods[i, j] = node_methods[0] if len(set(node_methods)) == 1 else "|".join(node_methods)
            flags[i, j] = "; ".join(dict.fromkeys(node_flags))
    return SweepResult(grid=grid, x=xs, y=ys, values=values, methods=methods, flags=flags)


def find_max(
    grid: SweepGrid,
    sweep: SweepResult | None = None,
    *,
    workers: int | None = None,
    step_tol: float = 1e-4,
    max_iter: int = 200,
) -> MaxResult:
    """Refine the best grid node by coordinate descent with halving steps.

    Probes the four axis neighbours of the current point; moves to the best
    improving probe, halving the steps whenever no probe improves. The
    refined value can only beat the grid value since moves must improve.
    """
    if sweep is None:
        sweep = sweep_map(grid, workers=workers)
    grid_value, i0, j0 = sweep.max_node()
    if not math.isfinite(grid_value):
        raise SqueezeBellError("no finite node in sweep; cannot refine a maximum")
    x0, y0 = float(sweep.x[i0]), float(sweep.y[j0])
    sx = float(sweep.x[1] - sweep.x[0]) / 2.0
    sy = float(sweep.y[1] - sweep.y[0]) / 2.0
    sx0, sy0 = sx, sy

    cache: dict[tuple[float, float], float] = {}

    def value_at(xv: float, yv: float) -> float:
        pt = (xv, yv)
        if pt not in cache:
            keys = _node_keys(grid, xv, yv)
            total = 0.0
            signs = (1.0,) if grid.quantity == "correlator" else (1.0, 1.0, 1.0, -1.0)
            for key, sign in zip(keys, signs):
                val, _, _ = evaluate_key(key, grid.fixed.method, grid.fixed.settings)
                if math.isnan(val):
                    cache[pt] = -math.inf
                    return -math.inf
                total += sign * val
            cache[pt] = total
        return cache[pt]

    best = grid_value
    bx, by = x0, y0
    n_iter = 0
    while (sx > step_tol * sx0 or sy > step_tol * sy0) and n_iter < max_iter:
        n_iter += 1
        probes = [(bx + sx, by), (bx - sx, by), (bx, by + sy), (bx, by - sy)]
        cand = [(value_at(px, py), px, py) for px, py in probes]
        cand.sort(key=lambda t: t[0], reverse=True)
        if cand[0][0] > best:
            best, bx, by = cand[0]
        else:
            sx *= 0.5
            sy *= 0.5
    return MaxResult(
        value=best,
        x=bx,
        y=by,
        grid_value=grid_value,
        grid_index=(i0, j0),
        n_evaluations=len(cache),
    )

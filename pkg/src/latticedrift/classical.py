"""Classical limit of the driven chain: flow, stroboscopic maps, islands.

In the scaled canonical pair x' = 2*pi*alpha*x, p' the Hamiltonian is

    H_cl = -Jx*cos(p') - Jy*cos(x' - F*t),

and Hamilton's equations carry the scale factor of the pair,

    dx'/dt = 2*pi*alpha*Jx*sin(p'),   dp'/dt = -2*pi*alpha*Jy*sin(x' - F*t),

so that small oscillations about (x', p') = (0, 0) run at the cyclotron
frequency 2*pi*alpha*sqrt(Jx*Jy) and a trapped orbit translates in unscaled
x at the drift velocity F/(2*pi*alpha). The drive can trap orbits into a
moving resonance only below the critical field 2*pi*alpha*Jx; the
stroboscopic map samples the co-moving frame once per Bloch period, where
the trapped set appears as a stability island.

Integration is an explicit time-reversible kick-drift splitting (exactly
symplectic per stage), composed to higher order with Yoshida coefficients.
Seed sets are integrated as arrays in lock step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, TWO_PI, derive_constants

# Yoshida composition weights (w0 = 1 - 2*sum(w))
_YOSHIDA4 = (1.3512071919596578, -1.7024143839193155, 1.3512071919596578)
_W6_1 = 0.78451361047755726382
_W6_2 = 0.23557321335935813368
_W6_3 = -1.17767998417887100695
_W6_0 = 1.0 - 2.0 * (_W6_1 + _W6_2 + _W6_3)
_YOSHIDA6 = (_W6_3, _W6_2, _W6_1, _W6_0, _W6_1, _W6_2, _W6_3)


@dataclass(frozen=True)
class ClassicalState:
    """Phase-space point of the scaled pair (x', p')."""

    x: float
    p: float


def _leapfrog(x, p, t, dt, cx, cp, F):
    """One kick-drift-kick step; kicks use the drive at their own times."""
    p = p - 0.5 * dt * cp * np.sin(x - F * t)
    x = x + dt * cx * np.sin(p)
    p = p - 0.5 * dt * cp * np.sin(x - F * (t + dt))
    return x, p


def _step(x, p, t, dt, cx, cp, F, order):
    if order == 2:
        return _leapfrog(x, p, t, dt, cx, cp, F)
    weights = _YOSHIDA4 if order == 4 else _YOSHIDA6
    tau = t
    for w in weights:
        x, p = _leapfrog(x, p, tau, w * dt, cx, cp, F)
        tau += w * dt
    return x, p


def _validate_dt(p: ModelParams, dt: float) -> None:
    cons = derive_constants(p)
    fastest = math.inf
    if cons.omega_c != 0:
        fastest = min(fastest, TWO_PI / abs(cons.omega_c))
    if cons.T_B is not None:
        fastest = min(fastest, abs(cons.T_B))
    if math.isfinite(fastest) and abs(dt) > 0.01 * fastest + 1e-12:
        raise ValueError(
            f"dt={dt} does not resolve the fastest period {fastest:.3g} "
            "(need dt <= 0.01*min(2*pi/omega_c, T_B))"
        )


def _run(
    x: np.ndarray,
    pm: np.ndarray,
    params: ModelParams,
    t0: float,
    t1: float,
    dt: float,
    order: int,
) -> tuple[np.ndarray, np.ndarray]:
    if order not in (2, 4, 6):
        raise ValueError("order must be 2, 4 or 6")
    _validate_dt(params, dt)
    cx = TWO_PI * params.alpha * params.Jx
    cp = TWO_PI * params.alpha * params.Jy
    n = max(1, round((t1 - t0) / dt))
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        x, pm = _step(x, pm, t, h, cx, cp, params.F, order)
        t += h
    return x, pm


def flow(
    s: ClassicalState,
    params: ModelParams,
    t0: float,
    t1: float,
    dt: float,
    order: int = 6,
) -> ClassicalState:
    """Integrate one phase-space point from t0 to t1 (unreduced coordinates)."""
    x = np.array([s.x], dtype=float)
    pm = np.array([s.p], dtype=float)
    x, pm = _run(x, pm, params, t0, t1, dt, order)
    return ClassicalState(float(x[0]), float(pm[0]))


def trajectory(
    s: ClassicalState,
    params: ModelParams,
    t0: float,
    t1: float,
    dt: float,
    sample_stride: int = 1,
    order: int = 6,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sampled (times, x', p') along one orbit, every ``sample_stride`` steps."""
    _validate_dt(params, dt)
    cx = TWO_PI * params.alpha * params.Jx
    cp = TWO_PI * params.alpha * params.Jy
    n = max(1, round((t1 - t0) / dt))
    h = (t1 - t0) / n
    x, pm = s.x, s.p
    ts, xs, ps = [t0], [x], [pm]
    t = t0
    for k in range(n):
        x, pm = _step(x, pm, t, h, cx, cp, params.F, order)
        t = t0 + (k + 1) * h
        if (k + 1) % sample_stride == 0 or k + 1 == n:
            ts.append(t)
            xs.append(float(x))
            ps.append(float(pm))
    return np.array(ts), np.array(xs), np.array(ps)


def energy(s: ClassicalState, params: ModelParams, t: float = 0.0) -> float:
    return -params.Jx * math.cos(s.p) - params.Jy * math.cos(s.x - params.F * t)


def _as_seed_array(initials) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(initials, int):
        n = initials
        edges = np.arange(n) * TWO_PI / n + TWO_PI / (2 * n)
        xg, pg = np.meshgrid(edges, edges, indexing="ij")
        return xg.ravel().copy(), pg.ravel().copy()
    arr = np.asarray(
        [(s.x, s.p) if isinstance(s, ClassicalState) else tuple(s) for s in initials],
        dtype=float,
    )
    return arr[:, 0].copy(), arr[:, 1].copy()


def strobe_map(
    initials,
    params: ModelParams,
    n_periods: int,
    strobe_period: float | None = None,
    dt: float | None = None,
    order: int = 2,
) -> np.ndarray:
    """Co-moving stroboscopic sections, shape (n_seeds, n_periods + 1, 2).

    Samples (x' - F*t mod 2*pi, p' mod 2*pi) once per Bloch period. For
    F = 0 a ``strobe_period`` must be supplied. ``initials`` is a seed
    count (uniform grid over the torus) or an iterable of states/pairs.
    """
    cons = derive_constants(params)
    if cons.T_B is None:
        if strobe_period is None:
            raise ValueError("F = 0 requires an explicit strobe_period")
        period = strobe_period
    else:
        period = abs(cons.T_B) if strobe_period is None else strobe_period
    x, pm = _as_seed_array(initials)
    if dt is None:
        fastest = period
        if cons.omega_c > 0:
            fastest = min(fastest, TWO_PI / cons.omega_c)
        dt = 0.01 * fastest
    n_sub = max(1, math.ceil(period / dt - 1e-12))
    h = period / n_sub
    _validate_dt(params, h)
    cx = TWO_PI * params.alpha * params.Jx
    cp = TWO_PI * params.alpha * params.Jy
    out = np.empty((x.size, n_periods + 1, 2))
    t = 0.0
    out[:, 0, 0] = x % TWO_PI
    out[:, 0, 1] = pm % TWO_PI
    for k in range(n_periods):
        for _ in range(n_sub):
            x, pm = _step(x, pm, t, h, cx, cp, params.F, order)
            t += h
        out[:, k + 1, 0] = (x - params.F * t) % TWO_PI
        out[:, k + 1, 1] = pm % TWO_PI
    return out


@dataclass(frozen=True)
class IslandReport:
    """Outcome of the trapped-set probe."""

    exists: bool
    trapped_fraction: float
    n_seeds: int
    n_periods: int


def island_exists(
    params: ModelParams,
    seed_grid: int = 32,
    n_periods: int = 1000,
    strobe_period: float | None = None,
    dt: float | None = None,
) -> IslandReport:
    """Probe for a transporting island: seeds whose co-moving excursion
    in x' stays below pi for the whole run count as trapped.

    ``seed_grid`` seeds per axis on a uniform torus grid. The trapped
    fraction is the island-measure proxy; excursions are checked at strobe
    times.
    """
    if params.alpha == 0.0 or params.Jx == 0.0:
        return IslandReport(False, 0.0, seed_grid**2, n_periods)
    cons = derive_constants(params)
    if cons.T_B is None:
        period = strobe_period if strobe_period is not None else TWO_PI / cons.omega_c
    else:
        period = abs(cons.T_B)
    x, pm = _as_seed_array(seed_grid)
    x0 = x.copy()
    if dt is None:
        fastest = period
        if cons.omega_c > 0:
            fastest = min(fastest, TWO_PI / cons.omega_c)
        dt = 0.01 * fastest
    n_sub = max(1, math.ceil(period / dt - 1e-12))
    h = period / n_sub
    _validate_dt(params, h)
    cx = TWO_PI * params.alpha * params.Jx
    cp = TWO_PI * params.alpha * params.Jy
    alive = np.ones(x.size, dtype=bool)
    t = 0.0
    for _ in range(n_periods):
        for _ in range(n_sub):
            x, pm = _step(x, pm, t, h, cx, cp, params.F, order=2)
            t += h
        excursion = np.abs((x - params.F * t) - x0)
        alive &= excursion < math.pi
        if not alive.any():
            break
    frac = float(np.count_nonzero(alive)) / x.size
    return IslandReport(frac > 0.0, frac, x.size, n_periods)

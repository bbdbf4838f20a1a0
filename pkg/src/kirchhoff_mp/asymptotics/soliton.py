"""Radial ground state of ``-b Delta U + U = U^(p-1)`` on the whole space.

The profile is computed once for ``b = 1`` by shooting on ``U(0)`` and then
stretched: the solution for general ``b`` is ``U(r / sqrt(b))``. Past the
point where ``U`` has dropped to ``MATCH_LEVEL * U(0)`` the shooting
trajectory is blended into the decaying solution of the linearized equation,
``r^(1 - d/2) K_{d/2 - 1}(r)``, so the sampled profile has no unstable tail.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import CubicSpline

from ..energy import check_exponent
from ..errors import ConvergenceError

logger = logging.getLogger(__name__)

SHOOT_RTOL = 1e-13
SHOOT_ATOL = 1e-15
R_START = 1e-4
R_LIMIT = 80.0
MATCH_LEVEL = 1e-4
CUTOFF_LEVEL = 1e-7
BLEND_WIDTH = 1.0
DEFAULT_DR = 1e-2
MAX_BRACKET_DOUBLINGS = 60
MAX_BISECTIONS = 200

# sixth-order central stencils, offsets -3..3
D1 = np.array([-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60])
D2 = np.array([1.0 / 90, -3.0 / 20, 3.0 / 2, -49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90])


def closed_form_1d(b: float, p: float, x: np.ndarray | float) -> np.ndarray:
    """``(p/2)^(1/(p-2)) sech^(2/(p-2))((p-2) x / (2 sqrt(b)))``."""
    if b <= 0:
        raise ValueError("b must be positive")
    x = np.asarray(x, dtype=float)
    peak = (p / 2.0) ** (1.0 / (p - 2.0))
    with np.errstate(over="ignore"):
        return peak / np.cosh((p - 2.0) * x / (2.0 * math.sqrt(b))) ** (2.0 / (p - 2.0))


def _linear_tail(dim: int, r: np.ndarray | float) -> np.ndarray:
    order = dim / 2.0 - 1.0
    r = np.asarray(r, dtype=float)
    return r**-order * special.kv(order, r)


def _smoothstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


class _Shooter:
    """Integrates the b = 1 radial equation from the origin for a given U(0)."""

    def __init__(self, p: float, dim: int):
        self.p = p
        self.dim = dim

        def crossing(r, y):
            return y[0]

        def turning(r, y):
            return y[1]

        crossing.terminal, crossing.direction = True, -1
        turning.terminal, turning.direction = True, 1
        self.events = [crossing, turning]

    def rhs(self, r: float, y: np.ndarray) -> list[float]:
        u, du = y
        return [du, -(self.dim - 1) / r * du + u - abs(u) ** (self.p - 2) * u]

    def curvature(self, u0: float) -> float:
        return (u0 - u0 ** (self.p - 1)) / self.dim

    def start(self, u0: float) -> list[float]:
        k = self.curvature(u0)
        return [u0 + 0.5 * k * R_START**2, k * R_START]

    def shoot(self, u0: float, dense: bool = False):
        sol = integrate.solve_ivp(
            self.rhs,
            (R_START, R_LIMIT),
            self.start(u0),
            method="DOP853",
            rtol=SHOOT_RTOL,
            atol=SHOOT_ATOL,
            events=self.events,
            dense_output=dense,
        )
        if sol.status == -1:
            raise ConvergenceError(f"radial integration failed at U(0)={u0!r}: {sol.message}")
        outcome = "over" if len(sol.t_events[0]) else "under"
        return outcome, sol


@dataclass(frozen=True)
class _UnitProfile:
    r: np.ndarray
    U: np.ndarray
    U0: float
    tail_amplitude: float
    match_radius: float
    bisections: int


@functools.lru_cache(maxsize=32)
def _unit_profile(p: float, dim: int, dr: float) -> _UnitProfile:
    shooter = _Shooter(p, dim)
    lo = 1.0
    hi = max(2.0, 2.0 * (p / 2.0) ** (1.0 / (p - 2.0)))
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if shooter.shoot(hi)[0] == "over":
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"shooting failed to bracket U(0) on [{lo!r}, {hi!r}] for p={p}, dim={dim}")

    steps = 0
    while hi - lo > 4.0 * np.finfo(float).eps * hi and steps < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if shooter.shoot(mid)[0] == "over":
            hi = mid
        else:
            lo = mid
        steps += 1
    u0 = lo
    _, sol = shooter.shoot(u0, dense=True)
    r_stop = float(sol.t[-1])

    level = MATCH_LEVEL * u0
    below = np.nonzero(sol.y[0] <= level)[0]
    if not len(below):
        raise ConvergenceError(f"shooting trajectory never decayed to {MATCH_LEVEL:g} U(0) (stopped at r={r_stop:.3g})")
    i = int(below[0])
    r_match = optimize.brentq(lambda r: sol.sol(r)[0] - level, sol.t[i - 1], sol.t[i], xtol=1e-14)
    if r_match + BLEND_WIDTH > r_stop:
        raise ConvergenceError(f"shooting trajectory left the ground state at r={r_stop:.3g} before the tail match")
    amplitude = level / float(_linear_tail(dim, r_match))

    cutoff = CUTOFF_LEVEL * u0
    r_cut = optimize.brentq(lambda r: amplitude * float(_linear_tail(dim, r)) - cutoff, r_match, r_match + 60.0)
    r = np.arange(0.0, r_cut + dr, dr)

    U = np.empty_like(r)
    near = r < R_START
    U[near] = u0 + 0.5 * shooter.curvature(u0) * r[near] ** 2
    inner = (~near) & (r <= r_match + BLEND_WIDTH)
    U[inner] = sol.sol(r[inner])[0]
    blend = (r > r_match) & inner
    w = _smoothstep((r[blend] - r_match) / BLEND_WIDTH)
    U[blend] = (1.0 - w) * U[blend] + w * amplitude * _linear_tail(dim, r[blend])
    far = ~(near | inner)
    U[far] = amplitude * _linear_tail(dim, r[far])

    for arr in (r, U):
        arr.setflags(write=False)
    logger.debug("soliton p=%g dim=%d: U(0)=%.15g match r=%.4g cutoff r=%.4g", p, dim, u0, r_match, r_cut)
    return _UnitProfile(r=r, U=U, U0=u0, tail_amplitude=amplitude, match_radius=r_match, bisections=steps)


@dataclass(slots=True)
class SolitonProfile:
    """Sampled radial profile ``r -> U(r)`` for one ``b``."""

    b: float
    p: float
    dim: int
    r: np.ndarray
    U: np.ndarray
    U0: float
    tail_amplitude: float
    match_radius: float
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._spline = CubicSpline(self.r, self.U, bc_type=((1, 0.0), "not-a-knot"))

    @property
    def length(self) -> float:
        return math.sqrt(self.b)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def __call__(self, r: np.ndarray | float) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        flat = np.abs(np.atleast_1d(r)).ravel()
        out = np.empty_like(flat)
        inside = flat <= self.r_max
        out[inside] = self._spline(flat[inside])
        out[~inside] = self.tail_amplitude * _linear_tail(self.dim, flat[~inside] / self.length)
        return out.reshape(r.shape)

    def with_b(self, b: float) -> "SolitonProfile":
        if b <= 0:
            raise ValueError("b must be positive")
        stretch = math.sqrt(b / self.b)
        return dataclasses.replace(self, b=b, r=self.r * stretch, match_radius=self.match_radius * stretch)

    def residual(self) -> float:
        """Max of ``|-b U'' - b (d-1) U'/r + U - U^(p-1)|`` over the samples."""
        h = float(self.r[1] - self.r[0])
        U = self.U
        ext = np.concatenate([U[3:0:-1], U])
        n = len(U) - 3
        d1 = sum(c * ext[3 + k : 3 + k + n] for k, c in zip(range(-3, 4), D1)) / h
        d2 = sum(c * ext[3 + k : 3 + k + n] for k, c in zip(range(-3, 4), D2)) / h**2
        r = self.r[:n]
        radial = np.empty(n)
        radial[0] = (self.dim - 1) * d2[0]
        radial[1:] = (self.dim - 1) * d1[1:] / r[1:]
        res = -self.b * d2 - self.b * radial + U[:n] - U[:n] ** (self.p - 1)
        return float(np.max(np.abs(res)))

    def ball_integral(self, radius: float, q: float = 2.0, points: int = 4001) -> float:
        """``int_{|y| <= radius} U^q dy``."""
        r = np.linspace(0.0, radius, points)
        surface = 2.0 * math.pi ** (self.dim / 2.0) / special.gamma(self.dim / 2.0)
        return float(surface * integrate.simpson(self(r) ** q * r ** (self.dim - 1), x=r))

    def rows(self) -> tuple[list[str], list[list[float]]]:
        return ["r", "U"], [[float(a), float(b)] for a, b in zip(self.r, self.U)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "b": self.b,
            "p": self.p,
            "dim": self.dim,
            "U0": self.U0,
            "r_max": self.r_max,
            "match_radius": self.match_radius,
            "samples": int(len(self.r)),
        }


def solve_soliton(b: float, p: float, dim: int, *, dr: float = DEFAULT_DR) -> SolitonProfile:
    if b <= 0:
        raise ValueError(f"soliton needs b > 0, got {b}")
    if dim not in (1, 2, 3):
        raise ValueError(f"soliton dim must be 1, 2 or 3, got {dim}")
    check_exponent(p, dim)
    unit = _unit_profile(float(p), int(dim), float(dr))
    profile = SolitonProfile(
        b=1.0,
        p=float(p),
        dim=int(dim),
        r=unit.r,
        U=unit.U,
        U0=unit.U0,
        tail_amplitude=unit.tail_amplitude,
        match_radius=unit.match_radius,
    )
    if b != 1.0:
        profile = profile.with_b(float(b))
    logger.info("soliton b=%g p=%g dim=%d: U(0)=%.15g after %d bisections", b, p, dim, unit.U0, unit.bisections)
    return profile

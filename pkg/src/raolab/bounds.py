"""Chernoff-based guarantee for the threshold reader and its numerical optimisation.

For a cut fraction ``g`` and two auxiliary knapsack sizes ``beta`` and
``gamma`` the reader sees every article of the beta-packing fully with
probability at least ``p = p'/2`` where ``p' >= 1 - tail1 - tail2``.
The resulting competitive ratio is ``C / (g * beta * p)``; this module
reports the multiplier ``1 / (g * beta * p)`` and maximises ``g * beta * p``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

MARGIN = 1e-9
CLOSED_SLACK = 1e-12


class InfeasibleParams(ValueError):
    """Parameters outside the region where both Chernoff deviations are positive."""


def chernoff_tail(mu_h: float, z_max: float, delta: float) -> float:
    """Upper bound on P[Z >= (1 + delta) mu_h] for independent summands in [0, z_max]."""
    if mu_h <= 0 or z_max <= 0 or delta <= 0:
        raise ValueError("chernoff_tail needs positive mu_h, z_max and delta")
    return math.exp(-(mu_h / z_max) * ((1 + delta) * math.log1p(delta) - delta))


def tail_z1(g: float, beta: float) -> float:
    """Bound on the chance that sample weight of the beta-packing reaches 1/2 - g."""
    if not 0 < g < 0.5:
        raise InfeasibleParams(f"g={g} outside (0, 0.5)")
    if beta <= 0 or (1 - 2 * g) / beta - 1 <= 0:
        raise InfeasibleParams(f"need 0 < beta < 1 - 2g (g={g}, beta={beta})")
    return math.exp((1 - 1 / (2 * g)) * math.log((1 - 2 * g) / beta) - 1 + (1 - beta) / (2 * g))


def tail_z2(g: float, gamma: float) -> float:
    """Bound on the chance that post-sample weight of the gamma-packing reaches 1 - 2g."""
    if not 0 < g < 0.5:
        raise InfeasibleParams(f"g={g} outside (0, 0.5)")
    if gamma <= 0 or (2 - 4 * g) / gamma - 1 <= 0:
        raise InfeasibleParams(f"need 0 < gamma < 2 - 4g (g={g}, gamma={gamma})")
    return math.exp((2 - 1 / g) * math.log((2 - 4 * g) / gamma) - 2 + (1 - gamma / 2) / g)


@dataclass(frozen=True)
class BoundParams:
    g: float
    beta: float
    gamma: float

    def violations(self, margin: float = 0.0, closed: bool = False) -> list[str]:
        """Names of violated constraints.

        ``closed`` accepts equality in ``gamma > 1`` and ``gamma + g > 1.5``
        (up to float slack); the tails stay finite there, and reported optima
        sit on that edge. The two constraints keeping the Chernoff deviations
        positive are always strict.
        """
        g, b, c = self.g, self.beta, self.gamma
        edge = -CLOSED_SLACK if closed else margin
        checks = {
            "0 < g < 0.5": margin < g < 0.5 - margin,
            "0 < beta < 1": margin < b < 1 - margin,
            "gamma > 1": c > 1 + edge,
            "gamma + g > 1.5": c + g > 1.5 + edge,
            "2g + beta < 1": 2 * g + b < 1 - margin,
            "4g + gamma < 2": 4 * g + c < 2 - margin,
        }
        return [name for name, ok in checks.items() if not ok]

    @property
    def feasible(self) -> bool:
        return not self.violations()


@dataclass(frozen=True)
class BoundEvaluation:
    params: BoundParams
    tail1: float
    tail2: float
    p_prime_lb: float
    p: float
    objective: float
    ratio_multiplier: float

    @property
    def bounded(self) -> bool:
        return self.p_prime_lb > 0

    def to_dict(self) -> dict:
        return {
            "g": self.params.g,
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "tail1": self.tail1,
            "tail2": self.tail2,
            "p_prime": self.p_prime_lb,
            "ratio": self.ratio_multiplier,
        }


def evaluate_bound(params: BoundParams) -> BoundEvaluation:
    bad = params.violations(closed=True)
    if bad:
        raise InfeasibleParams(f"{params} violates {', '.join(bad)}")
    t1 = tail_z1(params.g, params.beta)
    t2 = tail_z2(params.g, params.gamma)
    pp = 1 - t1 - t2
    objective = params.g * params.beta * pp / 2
    ratio = 2 / (params.g * params.beta * pp) if pp > 0 else math.inf
    return BoundEvaluation(params, t1, t2, pp, pp / 2, objective, ratio)


def _objective_array(g, beta, gamma):
    """Vectorised objective; NaN outside the feasible region."""
    g, beta, gamma = np.broadcast_arrays(g, beta, gamma)
    ok = ((g > MARGIN) & (g < 0.5 - MARGIN) & (beta > MARGIN) & (beta < 1 - MARGIN)
          & (gamma > 1 + MARGIN) & (gamma + g > 1.5 + MARGIN)
          & (2 * g + beta < 1 - MARGIN) & (4 * g + gamma < 2 - MARGIN))
    out = np.full(g.shape, np.nan)
    gg, bb, cc = g[ok], beta[ok], gamma[ok]
    t1 = np.exp((1 - 1 / (2 * gg)) * np.log((1 - 2 * gg) / bb) - 1 + (1 - bb) / (2 * gg))
    t2 = np.exp((2 - 1 / gg) * np.log((2 - 4 * gg) / cc) - 2 + (1 - cc / 2) / gg)
    out[ok] = gg * bb * (1 - t1 - t2) / 2
    return out


@dataclass(frozen=True)
class SearchConfig:
    g_step: float = 1e-3
    beta_step: float = 1e-2
    gamma_step: float = 1e-2
    fixed_g: float | None = None
    xatol: float = 1e-10
    fatol: float = 1e-14
    max_iter: int = 20_000

    def to_dict(self):
        return asdict(self)


def objective_grid(config: SearchConfig = SearchConfig()):
    """Grid of feasible (g, beta, gamma, objective) samples, as an (m, 4) array."""
    if config.fixed_g is not None:
        gs = np.array([config.fixed_g])
    else:
        gs = np.arange(config.g_step, 0.5, config.g_step)
    bs = np.arange(config.beta_step, 1.0, config.beta_step)
    cs = np.arange(1.0 + config.gamma_step, 2.0, config.gamma_step)
    G, B, Cg = np.meshgrid(gs, bs, cs, indexing="ij")
    obj = _objective_array(G, B, Cg)
    keep = np.isfinite(obj)
    return np.column_stack([G[keep], B[keep], Cg[keep], obj[keep]])


# The optimiser works in unconstrained coordinates: g, then beta and gamma
# squeezed into the open intervals the constraints leave for them given g.
_G_MAX = 1 / 6  # gamma needs 1.5 - g < 2 - 4g


def _gamma_interval(g):
    return max(1.0, 1.5 - g) + MARGIN, 2 - 4 * g - MARGIN


def _to_params(u, fixed_g):
    g = fixed_g if fixed_g is not None else _G_MAX * float(expit(u[0]))
    beta = MARGIN + (1 - 2 * g - 2 * MARGIN) * float(expit(u[1]))
    lo, hi = _gamma_interval(g)
    gamma = lo + (hi - lo) * float(expit(u[2]))
    return BoundParams(g, beta, gamma)


def _to_coords(p: BoundParams):
    lo, hi = _gamma_interval(p.g)
    frac = lambda x: float(np.clip(x, 1e-12, 1 - 1e-12))
    return np.array([
        logit(frac(p.g / _G_MAX)),
        logit(frac((p.beta - MARGIN) / (1 - 2 * p.g - 2 * MARGIN))),
        logit(frac((p.gamma - lo) / (hi - lo))),
    ])


def maximize_bound(config: SearchConfig = SearchConfig()) -> tuple[BoundParams, BoundEvaluation]:
    """Grid scan, then Nelder-Mead from the best grid point."""
    grid = objective_grid(config)
    if not len(grid):
        raise InfeasibleParams("search grid has no feasible point")
    g0, b0, c0, _ = grid[int(np.argmax(grid[:, 3]))]
    start = BoundParams(float(g0), float(b0), float(c0))

    def neg(u):
        p = _to_params(u, config.fixed_g)
        if not p.feasible:
            return math.inf
        return -evaluate_bound(p).objective

    res = minimize(neg, _to_coords(start), method="Nelder-Mead",
                   options={"xatol": config.xatol, "fatol": config.fatol,
                            "maxiter": config.max_iter, "maxfev": config.max_iter})
    best = _to_params(res.x, config.fixed_g)
    if not best.feasible or evaluate_bound(best).objective < evaluate_bound(start).objective:
        best = start
    return best, evaluate_bound(best)

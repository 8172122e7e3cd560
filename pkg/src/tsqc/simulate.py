"""Simulation of the correlated volatility-intensity model.

Spot variance and trade intensity follow square-root (CIR) diffusions driven
by correlated Brownian motions ``Z`` and ``B``; the efficient log-price is
``X_t = int sigma dW``. Observation times are the points of a Cox process with
intensity ``lambda_{n,t}`` and observed prices carry additive Gaussian noise.

All randomness flows from one root seed. Each component (drivers, initial
states, arrival exponentials, noise) draws from its own sub-stream so any one
of them can be changed without disturbing the others.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from numba import njit

__all__ = [
    "ModelParams",
    "LatentPaths",
    "TickSeries",
    "substream",
    "draw_drivers",
    "simulate_cir",
    "draw_initial_states",
    "simulate_price",
    "sample_times",
    "add_noise",
    "simulate_latent",
    "simulate_day",
]

# fixed offsets naming the independent sub-streams of a root seed
STREAM_DRIVERS = 0
STREAM_INITIAL = 1
STREAM_ARRIVALS = 2
STREAM_NOISE = 3


def substream(seed, stream: int, *extra: int) -> np.random.Generator:
    """Generator for sub-stream ``stream`` of ``seed`` (an int or SeedSequence)."""
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        key = tuple(seed.spawn_key)
    else:
        entropy, key = int(seed), ()
    return np.random.default_rng(
        np.random.SeedSequence(entropy, spawn_key=key + (stream,) + tuple(extra))
    )


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the volatility-intensity model.

    The intensity coefficients grow with the frequency index ``n`` as
    ``xi_n = n * xi``, ``nu_n = sqrt(n) * nu`` and
    ``beta_n = n**beta_exponent * beta0``. ``leverage_rho`` is the correlation
    between the price driver ``W`` and the variance driver ``Z``.
    """

    kappa: float = 2.345
    alpha_cir: float = 2.172
    gamma_vol: float = 1.0
    xi: float = 8.912
    beta0: float = 0.169
    beta_exponent: float = 0.25
    nu: float = 1.0
    rho: float = 0.912
    n: int = 40_000
    noise_sd: float = 0.0005
    T: float = 1.0
    sim_steps: int = 2**20
    leverage_rho: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "alpha_cir", "gamma_vol", "xi", "beta0", "nu", "T"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be nonnegative, got {self.noise_sd}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.sim_steps) != self.sim_steps or self.sim_steps < 1:
            raise ValueError(f"sim_steps must be a positive integer, got {self.sim_steps}")
        if abs(self.rho) > 1 or abs(self.leverage_rho) > 1:
            raise ValueError("correlations must lie in [-1, 1]")
        if self.leverage_rho and abs(self.rho) == 1:
            raise ValueError("leverage_rho requires |rho| < 1")
        if 2 * self.kappa * self.alpha_cir < self.gamma_vol**2:
            raise ValueError("Feller condition 2*kappa*alpha >= gamma^2 fails for the variance")
        if 2 * self.beta_n * self.xi_n < self.nu_n**2:
            raise ValueError("Feller condition 2*beta_n*xi_n >= nu_n^2 fails for the intensity")

    @property
    def xi_n(self) -> float:
        return self.n * self.xi

    @property
    def nu_n(self) -> float:
        return np.sqrt(self.n) * self.nu

    @property
    def beta_n(self) -> float:
        return self.n**self.beta_exponent * self.beta0

    @property
    def dt(self) -> float:
        return self.T / self.sim_steps

    @classmethod
    def paper(cls) -> "ModelParams":
        """The published simulation design (about 3.6e5 expected ticks per unit time)."""
        return cls()

    @classmethod
    def desk(cls) -> "ModelParams":
        """Cheaper variant with ``n = 20 000`` used for Monte Carlo runs."""
        return cls(n=20_000)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown model parameters: {sorted(unknown)}")
        return cls(**d)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class LatentPaths:
    """Fine-grid sample paths; increments have one element fewer than paths."""

    times: np.ndarray
    sigma2: np.ndarray
    lambda_n: np.ndarray
    X: np.ndarray
    W_inc: np.ndarray
    Z_inc: np.ndarray
    B_inc: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class TickSeries:
    """Observed prices at strictly increasing times."""

    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        if times.shape != prices.shape or times.ndim != 1:
            raise ValueError("times and prices must be 1-d arrays of equal length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("tick times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return self.times.size


def draw_drivers(rho: float, M: int, dt: float, seed, leverage_rho: float = 0.0):
    """Brownian increments ``(Z_inc, B_inc, W_inc)`` over ``M`` steps of size ``dt``.

    ``B`` has correlation ``rho`` with ``Z``. ``W`` is independent of both
    unless ``leverage_rho`` is nonzero, in which case ``corr(W, Z) =
    leverage_rho`` and ``W`` stays orthogonal to the part of ``B`` not
    explained by ``Z``.
    """
    if abs(rho) > 1 or abs(leverage_rho) > 1:
        raise ValueError("correlations must lie in [-1, 1]")
    rng = substream(seed, STREAM_DRIVERS)
    sd = np.sqrt(dt)
    Z = rng.standard_normal(M) * sd
    Z_perp = rng.standard_normal(M) * sd
    W = rng.standard_normal(M) * sd
    B = rho * Z + np.sqrt(1.0 - rho * rho) * Z_perp
    if leverage_rho:
        W = leverage_rho * Z + np.sqrt(1.0 - leverage_rho**2) * W
    return Z, B, W


@njit(cache=True)
def _full_truncation(x0, speed, mean, diffusion, increments, dt, sqrt_form):
    out = np.empty(increments.size + 1)
    x = x0
    out[0] = x0
    for k in range(increments.size):
        xp = x if x > 0.0 else 0.0
        scale = np.sqrt(xp) if sqrt_form else 1.0
        x = x + speed * (mean - xp) * dt + diffusion * scale * increments[k]
        out[k + 1] = x if x > 0.0 else 0.0
    return out


def simulate_cir(x0, speed, mean, diffusion_coeff, drivers, dt, sqrt_form=True):
    """Full-truncation Euler path of ``dx = speed (mean - x) dt + c sqrt(x) dB``.

    The recursion runs on the untruncated state and uses ``max(x, 0)`` in
    drift and diffusion; the returned path is ``max(x, 0)``. With
    ``sqrt_form=False`` the diffusion term is additive, ``c dB``.
    """
    if x0 < 0 or speed < 0 or mean < 0 or diffusion_coeff < 0 or dt <= 0:
        raise ValueError("CIR parameters and initial value must be nonnegative, dt positive")
    increments = np.ascontiguousarray(drivers, dtype=float)
    return _full_truncation(
        float(x0), float(speed), float(mean), float(diffusion_coeff),
        increments, float(dt), bool(sqrt_form),
    )


def draw_initial_states(params: ModelParams, seed):
    """Draw ``(sigma2_0, lambda_0)`` from the stationary Gamma laws of both CIR processes."""
    rng = substream(seed, STREAM_INITIAL)
    k, a, g = params.kappa, params.alpha_cir, params.gamma_vol
    shape_v, rate_v = 2 * k * a / g**2, 2 * k / g**2
    b, x, v = params.beta_n, params.xi_n, params.nu_n
    shape_l, rate_l = 2 * b * x / v**2, 2 * b / v**2
    sigma2_0 = rng.gamma(shape_v, 1.0 / rate_v)
    lambda_0 = rng.gamma(shape_l, 1.0 / rate_l)
    return float(sigma2_0), float(lambda_0)


def simulate_price(sigma2, W_inc, dt=None):
    """Euler path ``X_{k+1} = X_k + sqrt(sigma2_k) dW_k`` from ``X_0 = 0``.

    ``dt`` is accepted for signature symmetry; the increments already carry it.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    W_inc = np.asarray(W_inc, dtype=float)
    if sigma2.size != W_inc.size + 1:
        raise ValueError(
            f"sigma2 has {sigma2.size} points but W_inc has {W_inc.size} increments"
        )
    X = np.empty_like(sigma2)
    X[0] = 0.0
    np.cumsum(np.sqrt(sigma2[:-1]) * W_inc, out=X[1:])
    return X


def sample_times(lambda_n, dt, seed, T=None):
    """Event times of a Cox process with intensity path ``lambda_n``.

    The compensator is cumulated by the trapezoid rule on the fine grid and
    unit-rate exponential partial sums are mapped through its piecewise-linear
    inverse. Returns strictly increasing times in ``(0, T]``.
    """
    lam = np.asarray(lambda_n, dtype=float)
    if np.any(lam < 0):
        raise ValueError("intensity must be nonnegative")
    grid = np.arange(lam.size) * dt
    comp = np.empty_like(lam)
    comp[0] = 0.0
    np.cumsum(0.5 * (lam[1:] + lam[:-1]) * dt, out=comp[1:])
    total = comp[-1]
    if total <= 0:
        return np.empty(0)

    rng = substream(seed, STREAM_ARRIVALS)
    arrivals = []
    reached = 0.0
    chunk = int(total + 6 * np.sqrt(total) + 16)
    while reached <= total:
        partial = reached + np.cumsum(rng.standard_exponential(chunk))
        arrivals.append(partial)
        reached = partial[-1]
    targets = np.concatenate(arrivals)
    targets = targets[targets <= total]

    # comp[j-1] < target <= comp[j], so the segment has positive slope
    j = np.searchsorted(comp, targets, side="left")
    j = np.clip(j, 1, comp.size - 1)
    lo, hi = comp[j - 1], comp[j]
    frac = (targets - lo) / (hi - lo)
    times = grid[j - 1] + frac * dt
    if T is not None:
        times = np.minimum(times, T)
    times = times[times > 0]
    keep = np.concatenate(([True], np.diff(times) > 0)) if times.size else times.astype(bool)
    return times[keep]


def add_noise(X, path_times, times, noise_sd, seed) -> TickSeries:
    """Observe ``X`` at ``times`` with i.i.d. ``N(0, noise_sd^2)`` errors.

    ``X`` is read at the last fine-grid point at or before each tick time.
    """
    X = np.asarray(X, dtype=float)
    path_times = np.asarray(path_times, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < path_times[0] or times[-1] > path_times[-1] + 1e-12):
        raise ValueError("tick times fall outside the simulated path")
    idx = np.searchsorted(path_times, times, side="right") - 1
    idx = np.clip(idx, 0, X.size - 1)
    rng = substream(seed, STREAM_NOISE)
    noise = rng.standard_normal(times.size) * noise_sd
    return TickSeries(times.copy(), X[idx] + noise)


def simulate_latent(params: ModelParams, seed) -> LatentPaths:
    """Simulate ``sigma^2``, ``lambda_n`` and ``X`` on the fine grid."""
    M, dt = params.sim_steps, params.dt
    Z, B, W = draw_drivers(params.rho, M, dt, seed, params.leverage_rho)
    sigma2_0, lambda_0 = draw_initial_states(params, seed)
    sigma2 = simulate_cir(sigma2_0, params.kappa, params.alpha_cir, params.gamma_vol, Z, dt)
    lam = simulate_cir(lambda_0, params.beta_n, params.xi_n, params.nu_n, B, dt)
    X = simulate_price(sigma2, W, dt)
    times = np.arange(M + 1) * dt
    return LatentPaths(times, sigma2, lam, X, W, Z, B)


def simulate_day(params: ModelParams, seed):
    """Latent paths plus the noisy tick series they generate."""
    paths = simulate_latent(params, seed)
    times = sample_times(paths.lambda_n, paths.dt, seed, T=params.T)
    ticks = add_noise(paths.X, paths.times, times, params.noise_sd, seed)
    return paths, ticks

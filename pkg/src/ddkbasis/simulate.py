"""Stochastic generators for functional data.

All generators are pure functions of their parameters and a 64-bit seed and
draw through :class:`ddkbasis.rng.Stream`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .bases import KnotSet, OrthoBasis, build_splinet
from .errors import ContractViolation, NotPSDError, ResolutionError, UnsupportedGridError
from .fcore import FunctionalDataset, Grid, SampledFunction
from .rng import Stream

# Mixing matrix and eigenvalues of the sparse four-component example.
_R2, _R3 = 2.0**-0.5, 3.0**-0.5
EXAMPLE_A = np.array(
    [
        [_R2, 0, 0, 0, _R2, 0, 0, 0, 0],
        [0, _R2, 0, 0, 0, _R2, 0, 0, 0],
        [0, 0, _R2, 0, 0, 0, _R2, 0, 0],
        [0, 0, 0, _R3, 0, 0, 0, _R3, _R3],
    ]
)
EXAMPLE_LAMBDA = np.array([1.0, 0.5, 0.3, 0.01])
# five irregular, geometrically widening interior knots -> nine clamped
# cubic splinet elements: narrow bumps on the left, broad ones on the right
EXAMPLE_KNOTS = (0.047, 0.103, 0.207, 0.41, 0.713)


def _require_uniform(grid: Grid, what: str):
    if grid.uniform_step is None and grid.size > 1:
        raise UnsupportedGridError(f"{what} needs a uniform grid")


@dataclass(frozen=True, eq=False)
class KlModel:
    """``X = sum_k sqrt(lambda_k) Z_k e_k + sigma0 dB`` with
    ``e_k = sum_i A[k, i] f_i`` for an orthonormal basis ``f``."""

    A: np.ndarray
    lam: np.ndarray
    basis: OrthoBasis
    sigma0: float = 0.0

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        lam = np.asarray(self.lam, dtype=float)
        if a.shape != (lam.size, self.basis.size):
            raise ContractViolation(f"A must be {lam.size} x {self.basis.size}")
        if np.max(np.abs(a @ a.T - np.eye(lam.size))) > 1e-9:
            raise ContractViolation("rows of A must be orthonormal")
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ContractViolation("lambda must be positive and nonincreasing")
        if self.sigma0 < 0:
            raise ContractViolation("sigma0 must be nonnegative")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "lam", lam)

    @property
    def coefficient_covariance(self) -> np.ndarray:
        """``A^T diag(lambda) A + sigma0^2 I``."""
        return self.A.T @ (self.lam[:, None] * self.A) + self.sigma0**2 * np.eye(self.basis.size)

    @property
    def expected_sq_norm(self) -> float:
        """Mean squared L2 norm of the noiseless part, ``sum lambda_k``."""
        return float(self.lam.sum())

    @property
    def sum_sq_eigenvalues(self) -> float:
        return float(np.sum(self.lam**2))


def example_kl_model(sigma0: float = 0.0, knots: Sequence[float] = EXAMPLE_KNOTS) -> KlModel:
    """The sparse nine-element, four-component example model."""
    return KlModel(EXAMPLE_A, EXAMPLE_LAMBDA, build_splinet(KnotSet(np.asarray(knots)), 3), sigma0)


def sample_kl(model: KlModel, n: int, grid: Grid, seed: int, z: Optional[np.ndarray] = None) -> FunctionalDataset:
    """Draw ``n`` curves on a uniform grid.

    The white-noise term gets variance ``sigma0^2 / dt`` per grid point, so
    its Riemann inner product with any unit-norm function has variance close
    to ``sigma0^2``.  ``z`` may fix the ``n x K`` component scores.
    """
    _require_uniform(grid, "sample_kl")
    stream = Stream(seed)
    k = model.lam.size
    if z is None:
        z = stream.normal((n, k))
    else:
        z = np.asarray(z, dtype=float).reshape(n, k)
    eig = model.A @ model.basis.evaluate(grid.points).T  # K x m
    values = (z * np.sqrt(model.lam)) @ eig
    if model.sigma0 > 0:
        dt = grid.weights[0]
        values = values + stream.normal((n, grid.size)) * (model.sigma0 / math.sqrt(dt))
    return FunctionalDataset(grid, values)


# ---------------------------------------------------------------- bridges


def _bridge_paths(points: np.ndarray, n: int, stream: Stream) -> np.ndarray:
    """Brownian bridges on [0, 1] sampled at ``points``; returns ``n x m``.

    A Gaussian walk ``W`` is built on the points together with 0 and 1, and
    ``B = W - t W(1)``.
    """
    tt = np.unique(np.concatenate([[0.0], points, [1.0]]))
    steps = np.diff(tt)
    dw = stream.normal((n, steps.size)) * np.sqrt(steps)
    w = np.concatenate([np.zeros((n, 1)), np.cumsum(dw, axis=1)], axis=1)
    b = w - tt[None, :] * w[:, -1:]
    b[:, 0] = 0.0
    b[:, -1] = 0.0
    idx = np.searchsorted(tt, points)
    return b[:, idx]


def brownian_bridges(grid: Grid, n: int, seed: int) -> FunctionalDataset:
    """``n`` independent standard Brownian bridges on ``grid``."""
    return FunctionalDataset(grid, _bridge_paths(grid.points, n, Stream(seed)))


def brownian_bridge(grid: Grid, seed: int) -> SampledFunction:
    return brownian_bridges(grid, 1, seed).curve(0)


def _bridge_increments(grid: Grid, n: int, stream: Stream) -> np.ndarray:
    """Forward increments ``B(t_{j+1}) - B(t_j)``, with ``B(1)`` closing the
    last cell."""
    ends = np.concatenate([grid.points, [1.0]]) if grid.points[-1] < 1.0 else grid.points
    b = _bridge_paths(ends, n, stream)
    d = np.diff(b, axis=1)
    if d.shape[1] < grid.size:
        d = np.concatenate([d, np.zeros((n, 1))], axis=1)
    return d


def _check_step(kernel: SampledFunction, grid: Grid, what: str) -> float:
    _require_uniform(grid, what)
    h = grid.uniform_step
    hk = kernel.grid.uniform_step if kernel.grid.size > 1 else h
    if h is None or hk is None or abs(hk - h) > 1e-9 * h:
        raise ResolutionError(f"{what}: kernel step {hk} differs from grid step {h}")
    return h


def _causal_convolve(kernel: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``out[:, j] = sum_l kernel[l] x[:, j - l]`` with zero padding."""
    m = x.shape[1]
    out = np.zeros_like(x)
    for l, c in enumerate(kernel[:m]):
        if c != 0.0:
            out[:, l:] += c * x[:, : m - l]
    return out


def filtered_bridges(kernel: SampledFunction, grid: Grid, n: int, seed: int) -> FunctionalDataset:
    """``R_j = dt * sum_l r_l dB_{j-l}``: a Riemann version of ``r * dB``."""
    h = _check_step(kernel, grid, "filtered_bridge")
    db = _bridge_increments(grid, n, Stream(seed))
    return FunctionalDataset(grid, h * _causal_convolve(kernel.values, db))


def filtered_bridge(kernel: SampledFunction, grid: Grid, seed: int) -> SampledFunction:
    return filtered_bridges(kernel, grid, 1, seed).curve(0)


def exponential_kernel(grid: Grid, tau: float, cutoff: float = 8.0) -> SampledFunction:
    """``exp(-s / tau) / tau`` sampled on ``[0, cutoff * tau)`` with the step
    of ``grid``; a first-order low-pass filter of unit mass."""
    _require_uniform(grid, "exponential_kernel")
    h = grid.uniform_step
    count = max(1, min(grid.size, int(math.ceil(cutoff * tau / h))))
    s = np.arange(count) * h
    kgrid = Grid(s) if count > 1 else Grid([0.0])
    return SampledFunction(kgrid, np.exp(-s / tau) / tau)


# ---------------------------------------------------------------- vehicle


@dataclass(frozen=True)
class VehicleParams:
    """Quarter-vehicle parameters in SI units.

    ``track_length`` (metres) is the road length that the unit interval of
    the sampling grid represents; with speed ``v`` it fixes the time step.
    """

    m_s: float = 3400.0
    k_s: float = 270000.0
    c_s: float = 6000.0
    m_t: float = 350.0
    k_t: float = 950000.0
    c_t: float = 300.0
    v: float = 20.0
    track_length: float = 50.0

    def __post_init__(self):
        for name in ("m_s", "k_s", "c_s", "m_t", "k_t", "c_t", "v", "track_length"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be strictly positive")

    @property
    def omega_t(self) -> float:
        return math.sqrt(self.k_t / self.m_t)

    @property
    def omega_s(self) -> float:
        return math.sqrt(self.k_s / self.m_s)

    @property
    def omega_max(self) -> float:
        return max(self.omega_t, self.omega_s)

    @property
    def duration(self) -> float:
        return self.track_length / self.v


@dataclass(frozen=True)
class VehicleResponse:
    X: SampledFunction
    U: SampledFunction
    Y: SampledFunction
    time_step: float


def time_step(params: VehicleParams, grid: Grid) -> float:
    _require_uniform(grid, "vehicle_response")
    return grid.uniform_step * params.duration


def vehicle_response(params: VehicleParams, road: SampledFunction, grid: Grid) -> VehicleResponse:
    """Tire and suspension oscillators driven by a road profile.

    Integrates ``m_t U'' + c_t U' + k_t U = dR/dt`` and
    ``m_s X'' + c_s X' + k_s X = U'`` from rest with classical RK4 on the
    state ``(U, U', X, X')``.  The road derivative is the forward difference
    over each step, held constant within the step.  ``Y = m_s U''`` is read
    off the tire equation at every grid point.
    """
    if not road.grid.same_as(grid):
        raise ContractViolation("road must be sampled on the response grid")
    h = time_step(params, grid)
    if params.omega_max * h > 0.1:
        raise ResolutionError(
            f"time step {h:.3g} s too coarse: need at most {0.1 / params.omega_max:.3g} s "
            f"(omega_max = {params.omega_max:.4g} rad/s)"
        )
    r = road.values
    m = r.size
    force = np.diff(r) / h
    force = np.concatenate([force, force[-1:]]) if m > 1 else np.zeros(1)
    p = params

    def deriv(state, f):
        u, du, x, dx = state
        ddu = (f - p.c_t * du - p.k_t * u) / p.m_t
        ddx = (du - p.c_s * dx - p.k_s * x) / p.m_s
        return np.array([du, ddu, dx, ddx])

    states = np.zeros((m, 4))
    y = np.zeros(4)
    for j in range(m - 1):
        f = force[j]
        k1 = deriv(y, f)
        k2 = deriv(y + 0.5 * h * k1, f)
        k3 = deriv(y + 0.5 * h * k2, f)
        k4 = deriv(y + h * k3, f)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[j + 1] = y
    u, du = states[:, 0], states[:, 1]
    ddu = (force - p.c_t * du - p.k_t * u) / p.m_t
    return VehicleResponse(
        X=SampledFunction(grid, states[:, 2]),
        U=SampledFunction(grid, u),
        Y=SampledFunction(grid, p.m_s * ddu),
        time_step=h,
    )


# ---------------------------------------------------------------- Slepian


def _gauss_r(t):
    return np.exp(-0.5 * t * t)


def _gauss_dr(t):
    return -t * np.exp(-0.5 * t * t)


def _gauss_ddr(t):
    return (t * t - 1.0) * np.exp(-0.5 * t * t)


# name -> (r, r', r'') for normalized stationary covariances
COVARIANCES = {"gauss": (_gauss_r, _gauss_dr, _gauss_ddr)}

JITTER_START = 1e-10
JITTER_MAX = 1e-6


@dataclass(frozen=True)
class SlepianGaussModel:
    """Gaussian process seen at an up-crossing of level ``u`` at time 0:
    ``X(t) = u r(t) - R r'(t) + Delta(t)`` with ``R`` standard Rayleigh and
    ``Delta`` centred Gaussian with covariance
    ``r(t - s) - r(t) r(s) - r'(t) r'(s)``.

    Grid points in [0, 1] map affinely onto the time ``window``.
    """

    u: float = 1.0
    covariance: str = "gauss"
    window: Tuple[float, float] = (-5.0, 5.0)

    def __post_init__(self):
        if self.covariance not in COVARIANCES:
            raise ContractViolation(f"unknown covariance {self.covariance!r}")
        if not self.window[1] > self.window[0]:
            raise ContractViolation("window must be an increasing pair")
        r, _, ddr = COVARIANCES[self.covariance]
        if abs(r(0.0) - 1.0) > 1e-6 or abs(-ddr(0.0) - 1.0) > 1e-6:
            raise ContractViolation("covariance must satisfy r(0) = -r''(0) = 1")

    def times(self, grid: Grid) -> np.ndarray:
        a, b = self.window
        return a + (b - a) * grid.points

    def r(self, t):
        return COVARIANCES[self.covariance][0](np.asarray(t, dtype=float))

    def r_prime(self, t):
        return COVARIANCES[self.covariance][1](np.asarray(t, dtype=float))

    def mean(self, grid: Grid) -> np.ndarray:
        """``u r(t) - E[R] r'(t)`` with ``E[R] = sqrt(pi / 2)``."""
        t = self.times(grid)
        return self.u * self.r(t) - math.sqrt(math.pi / 2.0) * self.r_prime(t)

    def residual_covariance(self, grid: Grid) -> np.ndarray:
        t = self.times(grid)
        r, dr = self.r(t), self.r_prime(t)
        c = self.r(t[:, None] - t[None, :]) - np.outer(r, r) - np.outer(dr, dr)
        return 0.5 * (c + c.T)


def jittered_cholesky(c: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of ``c + eps I``; ``eps`` starts at 1e-10 and
    grows tenfold up to 1e-6."""
    eps = JITTER_START
    eye = np.eye(c.shape[0])
    while eps <= JITTER_MAX * (1 + 1e-9):
        try:
            return np.linalg.cholesky(c + eps * eye)
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise NotPSDError(f"matrix not positive semidefinite even with jitter {JITTER_MAX:g}")


def sample_slepian_gauss(model: SlepianGaussModel, n: int, grid: Grid, seed: int) -> FunctionalDataset:
    stream = Stream(seed)
    t = model.times(grid)
    chol = jittered_cholesky(model.residual_covariance(grid))
    rr = stream.rayleigh(n)
    z = stream.normal((n, grid.size))
    values = model.u * model.r(t)[None, :] - rr[:, None] * model.r_prime(t)[None, :] + z @ chol.T
    return FunctionalDataset(grid, values)


# ---------------------------------------------------------------- random functional


@dataclass(frozen=True)
class RandomFunctionalConfig:
    """Bump-plus-noise generator.

    Curve ``i`` is ``a_i exp(-(t - c_i)^2 / (2 w_i^2)) + bridge_scale R_i(t)``
    where ``a_i``, ``c_i``, ``w_i`` are uniform on the given ranges and
    ``R_i`` is a Brownian bridge filtered by an exponential kernel with time
    constant ``kernel_tau``.
    """

    amplitude: Tuple[float, float] = (0.5, 1.5)
    location: Tuple[float, float] = (0.3, 0.7)
    width: Tuple[float, float] = (0.02, 0.08)
    bridge_scale: float = 4.0
    kernel_tau: float = 0.01

    def __post_init__(self):
        for name in ("amplitude", "location", "width"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ContractViolation(f"{name} range must be (low, high)")
        if self.width[0] <= 0:
            raise ContractViolation("bump width must be positive")
        if self.bridge_scale < 0 or self.kernel_tau <= 0:
            raise ContractViolation("bridge_scale >= 0 and kernel_tau > 0 required")


def random_functional_dataset(
    n: int, grid: Grid, seed: int, config: RandomFunctionalConfig = RandomFunctionalConfig()
) -> FunctionalDataset:
    stream = Stream(seed)
    u = stream.uniform((3, n))

    def draw(rng, row):
        lo, hi = rng
        return lo + (hi - lo) * (u[row] - 2.0**-53)  # map (0, 1] onto [lo, hi)

    a = draw(config.amplitude, 0)
    c = draw(config.location, 1)
    w = draw(config.width, 2)
    t = grid.points
    values = a[:, None] * np.exp(-0.5 * ((t[None, :] - c[:, None]) / w[:, None]) ** 2)
    if config.bridge_scale > 0:
        kernel = exponential_kernel(grid, config.kernel_tau)
        db = _bridge_increments(grid, n, stream.spawn(1))
        values = values + config.bridge_scale * grid.uniform_step * _causal_convolve(kernel.values, db)
    return FunctionalDataset(grid, values)

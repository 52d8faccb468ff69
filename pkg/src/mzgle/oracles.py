"""Independent reference computations for validating reduced models.

Nothing here goes through the kernel expansions or the Volterra solver:
autocorrelations and means come from closed forms or dense matrix
exponentials, and projected-operator identities are checked in an explicit
matrix representation of the operator algebra on affine observables.
"""

from dataclasses import dataclass

import numpy as np

from .faber import bessel_j
from .gle import Trajectory
from .kernels import StatsKind, SystemSpec
from .linalg import expm_dense


@dataclass(frozen=True)
class AffineObservableRep:
    """Matrix representation of the operator algebra on affine observables.

    An observable u(x) = c + v.x is the coefficient vector (c, v) of length
    N+1.  L_rep realizes the generator (L u)(x) = (A x).grad u, whose linear
    block is A^T and which annihilates constants.  P_rep realizes the
    projection for the system's statistics; Q_rep = I - P_rep.
    """

    dim: int
    L_rep: np.ndarray
    P_rep: np.ndarray

    @property
    def Q_rep(self):
        return np.eye(self.dim) - self.P_rep

    def observable(self, index):
        """Coefficient vector of the coordinate observable x_index (1-based)."""
        e = np.zeros(self.dim)
        e[index] = 1.0
        return e


def affine_rep(system, observable_index=1):
    """Build the affine-observable representation for one resolved coordinate.

    Under initial-condition statistics the projection is the conditional
    expectation given the observed coordinate: constants and x_obs are
    fixed, every other x_j is replaced by its initial mean.  Under
    equilibrium-quadratic statistics it is the covariance projection onto
    x_obs, which keeps only the x_obs component and kills constants.
    """
    n = system.dim
    if not 1 <= observable_index <= n:
        raise ValueError(f"observable_index must be in 1..{n}")
    o = observable_index    # position in the (c, v) coefficient vector
    lrep = np.zeros((n + 1, n + 1))
    lrep[1:, 1:] = system.A.T
    prep = np.zeros((n + 1, n + 1))
    if system.stats_kind is StatsKind.BERNE_EQUILIBRIUM_QUADRATIC:
        if observable_index > n // 2:
            raise ValueError(
                "equilibrium-quadratic statistics require observing a "
                "momentum coordinate (index within the first block)"
            )
        prep[o, o] = 1.0
    else:
        prep[0, 0] = 1.0
        prep[o, o] = 1.0
        for j in range(1, n + 1):
            if j != o:
                prep[0, j] = system.init_mean[j - 1]
    return AffineObservableRep(dim=n + 1, L_rep=lrep, P_rep=prep)


def operator_oracle(system, word, observable_index=1):
    """Matrix of an operator word over {L, P, Q} on affine observables.

    The word is written in mathematical order: ("P", "L") denotes the
    composition P L, i.e. L acts first.  Apply the result to a coefficient
    vector with `matrix @ vec`.
    """
    rep = affine_rep(system, observable_index)
    table = {"L": rep.L_rep, "P": rep.P_rep, "Q": rep.Q_rep}
    out = np.eye(rep.dim)
    for w in word:
        key = str(w).upper()
        if key not in table:
            raise ValueError(f"unknown operator {w!r}; expected L, P, or Q")
        out = out @ table[key]
    return out


def vacf_analytic_l2(t, omega=1.0):
    """Closed-form tagged-oscillator autocorrelation of the fixed-end chain,
    J_0(2 omega t) - J_4(2 omega t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    x = 2.0 * omega * t
    return bessel_j(0, x) - bessel_j(4, x)


def _require_doubled_shape(system):
    n = system.dim
    if n % 2:
        raise ValueError("system is not a doubled (p, q) system")
    h = n // 2
    a = system.A
    scale = max(float(np.max(np.abs(a))), 1.0)
    if np.max(np.abs(a[:h, :h])) > 1e-12 * scale or np.max(np.abs(a[h:, h:])) > 1e-12 * scale:
        raise ValueError("system is not a doubled (p, q) system: diagonal blocks not zero")
    return h


def vacf_matrix_exp(system, index, grid):
    """Equilibrium autocorrelation of momentum coordinate `index` (1-based).

    With identity momentum covariance and vanishing momentum-position
    cross-correlation, C(t) equals the (index, index) entry of e^{t A}:
    of the sum over states j of [e^{tA}]_{index,j} <x_j p_index>, only the
    j = index term survives.  Evaluated exactly on a uniform grid with a
    single dense exponential of the step matrix.

    Returns a Trajectory.
    """
    h = _require_doubled_shape(system)
    if not 1 <= index <= h:
        raise ValueError(f"index must be a momentum coordinate in 1..{h}")
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.shape[0] < 2:
        raise ValueError("grid needs at least two points")
    dt = grid[1] - grid[0]
    if np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ValueError("grid must be uniform")
    if abs(grid[0]) > 1e-12:
        raise ValueError("grid must start at t = 0")
    # row propagation: w_k^T = e_i^T e^{t_k A}
    step = expm_dense(system.A.T, dt)
    w = np.zeros(system.dim)
    w[index - 1] = 1.0
    vals = np.empty(grid.shape[0])
    for k in range(grid.shape[0]):
        vals[k] = w[index - 1]
        w = step @ w
    return Trajectory(times=grid, values=vals)


def exact_mean(system, index, grid, init_mean=None):
    """Mean of coordinate `index` (1-based) along the exact flow.

    <x_index(t)> = e_index . e^{t A} <x(0)>, evaluated on a uniform grid.
    init_mean overrides the system's initial mean when given.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    m0 = system.init_mean if init_mean is None else np.asarray(init_mean, dtype=float)
    if m0.shape != (system.dim,):
        raise ValueError("init_mean has the wrong length")
    dt = grid[1] - grid[0]
    if np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ValueError("grid must be uniform")
    step = expm_dense(system.A, dt)
    x = m0.copy()
    vals = np.empty(grid.shape[0])
    for k in range(grid.shape[0]):
        vals[k] = x[index - 1]
        x = step @ x
    return Trajectory(times=grid, values=vals)


@dataclass(frozen=True)
class MonteCarloMean:
    """Sample mean of an observable along exact trajectories."""

    trajectory: Trajectory
    stderr: np.ndarray
    n_samples: int
    seed: int


def mc_mean(system, sampler, index, grid, n_samples, seed):
    """Monte Carlo estimate of <x_index(t)> over sampled initial states.

    Each sample is propagated exactly (observable row against dense matrix
    exponentials on the uniform grid), so the only error is statistical.
    sampler(rng, n) must return an (n, dim) array of initial states.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    dt = grid[1] - grid[0]
    if np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ValueError("grid must be uniform")
    rng = np.random.Generator(np.random.PCG64(seed))
    x0 = np.asarray(sampler(rng, n_samples), dtype=float)
    if x0.shape != (n_samples, system.dim):
        raise ValueError("sampler returned the wrong shape")
    # observable rows w_k = (e^{t_k A})^T e_index, assembled once
    step = expm_dense(system.A.T, dt)
    w = np.zeros(system.dim)
    w[index - 1] = 1.0
    rows = np.empty((grid.shape[0], system.dim))
    for k in range(grid.shape[0]):
        rows[k] = w
        w = step @ w
    vals = x0 @ rows.T                        # (n_samples, K)
    mean = vals.mean(axis=0)
    if n_samples > 1:
        se = vals.std(axis=0, ddof=1) / np.sqrt(n_samples)
    else:
        se = np.zeros(grid.shape[0])
    return MonteCarloMean(trajectory=Trajectory(times=grid, values=mean),
                          stderr=se, n_samples=n_samples, seed=seed)

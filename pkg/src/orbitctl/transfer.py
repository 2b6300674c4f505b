"""Discretized transfer operators on a backward-orbit collocation mesh.

The mesh is the full depth-k preimage tree of a repelling fixed point, so
it equidistributes toward the Julia set as the depth grows.  A function on
the mesh is pushed through

    (L_w phi)(x) = sum over f(y) = x of w(y) phi(y)

with the exact preimages y of each node computed once and phi(y) read off
by nearest-node lookup.  With the weight e^{xi (r - alpha)} the leading
eigendata (Perron root and positive eigenvector) normalize L into a
row-stochastic operator; twisting the normalized kernel by
e^{i (b (r - alpha) + k theta)} and watching sup norms decay gives an
empirical spectral-gap probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    BracketError,
    CriticalValueError,
    NonConvergenceError,
    NormalizationError,
)
from .maps import DERIV_FLOOR, RationalMapSpec, derivative_values, evaluate
from .orbits import _fixed_point_seed
from .thermo import DimensionResult

COLLISION_TOL = 1e-9


@dataclass(frozen=True)
class CollocationMesh:
    points: np.ndarray        # (N,) complex mesh nodes
    pre_points: np.ndarray    # (N, d) exact preimages of each node
    pre_index: np.ndarray     # (N, d) nearest mesh node to each preimage
    pre_r: np.ndarray         # (N, d) log|f'| at the preimage
    pre_theta: np.ndarray     # (N, d) arg f' at the preimage, in [0, 2pi)
    depth: int
    seed: complex
    resolution: float         # worst preimage-to-node snap distance

    @property
    def size(self) -> int:
        return int(self.points.size)


def _preimages(map_spec: RationalMapSpec, y: complex) -> np.ndarray:
    """All d solutions of f(z) = y, Newton-polished."""
    d = map_spec.degree
    num = np.zeros(d + 1, dtype=complex)
    num[: len(map_spec.numerator)] = map_spec.numerator
    den = np.zeros(d + 1, dtype=complex)
    den[: len(map_spec.denominator)] = map_spec.denominator
    coeffs = num - y * den              # ascending
    desc = np.trim_zeros(coeffs[::-1], "f")
    if desc.size != d + 1:
        raise CriticalValueError(
            f"a preimage of {y:.6g} escaped to infinity; move the seed"
        )
    z = np.roots(desc)
    for _ in range(4):
        fz = np.array([evaluate(map_spec, complex(v)) for v in z])
        dz = derivative_values(map_spec, z)
        small = np.abs(dz) < DERIV_FLOOR
        if small.any():
            raise CriticalValueError(
                f"{y:.6g} is within roundoff of a critical value"
            )
        z = z - (fz - y) / dz
    gaps = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < COLLISION_TOL:
        raise CriticalValueError(
            f"preimages of {y:.6g} collide within {COLLISION_TOL:.1e}; "
            "the node sits on a critical value"
        )
    return z


def build_mesh(map_spec: RationalMapSpec, depth: int) -> CollocationMesh:
    """Depth-k preimage tree of the strongest repelling fixed point."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    d = map_spec.degree
    seed = _fixed_point_seed(map_spec)
    level = np.asarray([seed], dtype=complex)
    for _ in range(depth):
        nxt = np.empty(level.size * d, dtype=complex)
        for i, y in enumerate(level):
            nxt[i * d : (i + 1) * d] = _preimages(map_spec, complex(y))
        level = nxt
    points = level
    if points.size != d**depth:
        raise CriticalValueError("preimage tree collapsed; mesh is incomplete")

    pre = np.empty((points.size, d), dtype=complex)
    for i, y in enumerate(points):
        pre[i] = _preimages(map_spec, complex(y))
    fp = derivative_values(map_spec, pre.ravel()).reshape(pre.shape)
    mag = np.abs(fp)
    if (mag < DERIV_FLOOR).any():
        raise CriticalValueError("a preimage landed on a critical point")
    pre_r = np.log(mag)
    pre_theta = np.mod(np.arctan2(fp.imag, fp.real), 2.0 * np.pi)

    tree = cKDTree(np.column_stack([points.real, points.imag]))
    dist, idx = tree.query(np.column_stack([pre.real.ravel(), pre.imag.ravel()]), k=1)
    pre_index = idx.reshape(pre.shape).astype(np.int64)
    resolution = float(dist.max())
    return CollocationMesh(
        points=points,
        pre_points=pre,
        pre_index=pre_index,
        pre_r=pre_r,
        pre_theta=pre_theta,
        depth=depth,
        seed=complex(seed),
        resolution=resolution,
    )


def apply_operator(
    mesh: CollocationMesh,
    phi: np.ndarray,
    s: complex,
    k: int = 0,
    alpha: float = 0.0,
    edge_weights: np.ndarray | None = None,
) -> np.ndarray:
    """One application of L with weight e^{s (r - alpha) + i k theta}.

    edge_weights, when given, multiply the kernel entrywise (used by the
    normalized operator).
    """
    w = np.exp(s * (mesh.pre_r - alpha) + 1j * k * mesh.pre_theta)
    if edge_weights is not None:
        w = w * edge_weights
    vals = np.asarray(phi)[mesh.pre_index]
    return np.sum(w * vals, axis=1)


def leading_eigendata(
    mesh: CollocationMesh,
    xi: float,
    alpha: float = 0.0,
    tol: float = 1e-12,
    max_iter: int = 5000,
):
    """(log Perron root, positive eigenvector with sup 1) by power iteration.

    Convergence is certified by the Collatz-Wielandt sandwich: the min and
    max of (L psi)/psi bracket the root at every step.
    """
    weights = np.exp(xi * (mesh.pre_r - alpha))
    psi = np.ones(mesh.size, dtype=float)
    log_shift = 0.0
    lam = None
    for _ in range(max_iter):
        nxt = np.sum(weights * psi[mesh.pre_index], axis=1)
        ratios = nxt / psi
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi <= 0:
            raise NonConvergenceError("positive operator produced a non-positive image")
        if hi - lo <= tol * hi:
            lam = 0.5 * (lo + hi)
            psi = nxt
            break
        top = nxt.max()
        psi = nxt / top
        log_shift += np.log(top)
    if lam is None:
        raise NonConvergenceError(
            f"power iteration did not close the Collatz-Wielandt gap in {max_iter} steps"
        )
    psi = psi / psi.max()
    return float(np.log(lam)), psi


@dataclass(frozen=True)
class NormalizedOperator:
    mesh: CollocationMesh
    xi: float
    alpha: float
    log_lambda: float
    psi: np.ndarray
    u_weights: np.ndarray     # (N, d) row-stochastic kernel
    residual: float           # max |row sum - 1|


def normalize(
    mesh: CollocationMesh,
    xi: float,
    alpha: float = 0.0,
    residual_tol: float = 1e-6,
) -> NormalizedOperator:
    """Doob transform by the leading eigendata; rows must sum to 1."""
    log_lambda, psi = leading_eigendata(mesh, xi, alpha)
    u = (
        np.exp(xi * (mesh.pre_r - alpha) - log_lambda)
        * psi[mesh.pre_index]
        / psi[:, None]
    )
    rows = u.sum(axis=1)
    residual = float(np.abs(rows - 1.0).max())
    if residual > residual_tol:
        raise NormalizationError(
            f"normalized row sums off by {residual:.3e} (tol {residual_tol:.1e})"
        )
    return NormalizedOperator(
        mesh=mesh,
        xi=xi,
        alpha=alpha,
        log_lambda=log_lambda,
        psi=psi,
        u_weights=u,
        residual=residual,
    )


@dataclass(frozen=True)
class DecayResult:
    b: float
    k: int
    rate: float
    sup_norms: np.ndarray
    depth: int
    n_steps: int


def decay_probe(
    normop: NormalizedOperator,
    b: float,
    k: int,
    n_steps: int = 40,
) -> DecayResult:
    """Iterate the twisted normalized operator and fit the sup-norm decay.

    The twist multiplies the kernel by e^{i (b (r - alpha) + k theta)}.  The
    reported rate is exp of the least-squares slope of log sup norms over
    the last half of the trajectory, so transient behavior is discarded.
    """
    mesh = normop.mesh
    phase = np.exp(1j * (b * (mesh.pre_r - normop.alpha) + k * mesh.pre_theta))
    kernel = normop.u_weights * phase
    phi = np.ones(mesh.size, dtype=complex)
    sups = np.empty(n_steps, dtype=float)
    for m in range(n_steps):
        phi = np.sum(kernel * phi[mesh.pre_index], axis=1)
        sups[m] = max(float(np.abs(phi).max()), 1e-300)
    half = n_steps // 2
    steps = np.arange(half, n_steps, dtype=float)
    slope = np.polyfit(steps, np.log(sups[half:]), 1)[0]
    return DecayResult(
        b=b, k=k, rate=float(np.exp(slope)), sup_norms=sups,
        depth=mesh.depth, n_steps=n_steps,
    )


def dimension_from_mesh(
    mesh: CollocationMesh,
    bracket: tuple[float, float] = (1e-9, 2.0),
    residual_tol: float = 1e-9,
) -> DimensionResult:
    """Bisection root of t -> log Perron root of the weight e^{-t r}."""
    lo, hi = bracket

    def press(t: float) -> float:
        return leading_eigendata(mesh, -t, 0.0)[0]

    p_lo, p_hi = press(lo), press(hi)
    if not (p_lo > 0.0 > p_hi):
        raise BracketError(
            f"operator pressure does not change sign on ({lo}, {hi}): "
            f"{p_lo:.4g} vs {p_hi:.4g}"
        )
    iters = 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        iters += 1
        if press(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * (1.0 + abs(mid)):
            break
    value = 0.5 * (lo + hi)
    residual = abs(press(value))
    if residual > residual_tol:
        raise NonConvergenceError(
            f"operator pressure residual {residual:.2e} at t = {value:.12g}"
        )
    return DimensionResult(
        value=value,
        residual=residual,
        iterations=iters,
        n_used=mesh.depth,
        method="transfer-op",
        bracket=bracket,
    )

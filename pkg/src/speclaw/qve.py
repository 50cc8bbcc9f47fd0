"""Self-consistent spectral-density predictions for variance profiles.

Solves the quadratic vector equation

    -1/g_k = z + (S g)_k,      (S g)_k = (1/n) * sum_l s_kl g_l

on the upper half plane, where S is an n x n variance profile, or its
block-weighted reduction

    -1/g_k = z + sum_l alpha_l c_kl g_l

for a d-class profile with class weights alpha.  The weighted average m(z)
of the solution is the Stieltjes transform of a probability density rho
supported in [-2, 2]; rho is recovered as Im m(x + i*eta)/pi for small eta
via geometric eta-continuation with warm starts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidProfile, NonConvergence, OutOfRange

DEFAULT_ETA = 1e-6
CONTINUATION_START = 1.0
CONTINUATION_RATIO = 0.7
DEFAULT_GRID = (-3.0, 3.0, 601)

# fixed-point stall detection: if the residual shrinks by less than
# _STALL_FACTOR over _STALL_WINDOW iterations, try a Newton polish
_STALL_WINDOW = 48
_STALL_FACTOR = 0.5
_OMEGA_MIN = 1.0 / 64.0


@dataclass(frozen=True)
class SpectralPoint:
    """A point z = re + i*im in the open upper half plane."""

    re: float
    im: float

    def __post_init__(self):
        if not (self.im > 0.0 and math.isfinite(self.im) and math.isfinite(self.re)):
            raise ValueError(f"spectral point must have finite re and im > 0, got {self.re}+{self.im}i")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class VarianceProfile:
    """Symmetric n x n matrix of entry variances, bounded in (0, 1]."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64)
        if self.n < 1:
            raise InvalidProfile(f"profile size must be positive, got n={self.n}")
        if entries.shape != (self.n, self.n):
            raise InvalidProfile(f"entries must be {self.n}x{self.n}, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InvalidProfile("profile entries must be finite")
        if not np.array_equal(entries, entries.T):
            raise InvalidProfile("profile must be exactly symmetric")
        if entries.min() <= 0.0:
            raise InvalidProfile("profile entries must be strictly positive (a lower bound c > 0 is assumed)")
        if entries.max() > 1.0:
            raise InvalidProfile("profile entries must be <= 1 (rescale the profile)")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def c(self) -> float:
        """Stored lower bound of the entries."""
        return float(self.entries.min())

    @property
    def dim(self) -> int:
        return self.n

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "VarianceProfile":
        return cls(n=n, entries=np.full((n, n), float(value)))


@dataclass(frozen=True)
class BlockProfile:
    """d-class reduction of a block-constant profile: weights alpha, coefficients c_kl."""

    d: int
    weights: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if self.d < 1:
            raise InvalidProfile(f"block count must be positive, got d={self.d}")
        if weights.shape != (self.d,):
            raise InvalidProfile(f"weights must have length {self.d}")
        if coeffs.shape != (self.d, self.d):
            raise InvalidProfile(f"coeffs must be {self.d}x{self.d}")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(coeffs))):
            raise InvalidProfile("block profile data must be finite")
        if weights.min() <= 0.0:
            raise InvalidProfile("class weights must be strictly positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidProfile(f"class weights must sum to 1, got {weights.sum()!r}")
        if not np.array_equal(coeffs, coeffs.T):
            raise InvalidProfile("block coefficients must be exactly symmetric")
        if coeffs.min() <= 0.0 or coeffs.max() > 1.0:
            raise InvalidProfile("block coefficients must lie in (0, 1]")
        weights.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def c(self) -> float:
        return float(self.coeffs.min())

    @property
    def dim(self) -> int:
        return self.d


Profile = VarianceProfile | BlockProfile


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 10_000
    omega: float = 0.5


@dataclass(frozen=True)
class QveSolution:
    """Converged solution vector g at one spectral point, with its defect."""

    point: SpectralPoint
    g: np.ndarray
    m: complex
    residual: float
    iterations: int


@dataclass(frozen=True)
class DensityCurve:
    """Tabulated predicted density rho(x_i) on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    eta_used: float
    profile_hash: str
    source: Profile | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be a 1-d array with at least two points")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if values.shape != grid.shape:
            raise ValueError("values must match the grid")
        if values.min() < 0:
            raise ValueError("density values must be nonnegative")
        if not self.eta_used > 0:
            raise ValueError("eta_used must be positive")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def mass(self) -> float:
        """Trapezoid mass of the tabulated curve."""
        return float(np.trapezoid(self.values, self.grid))


@dataclass(frozen=True)
class BulkInterval:
    """Grid-aligned interval on which the tabulated density stays >= min_density."""

    lo: float
    hi: float
    min_density: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bulk interval must have lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


# ---------------------------------------------------------------------------
# profile utilities


def profile_fingerprint(profile: Profile) -> str:
    """Stable short identifier of a profile's exact contents."""
    payload = json.dumps(profile_to_dict(profile), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def profile_to_dict(profile: Profile) -> dict:
    if isinstance(profile, VarianceProfile):
        return {"n": profile.n, "entries": profile.entries.tolist()}
    return {"d": profile.d, "weights": profile.weights.tolist(), "coeffs": profile.coeffs.tolist()}


def profile_from_dict(data: dict) -> Profile:
    if "entries" in data:
        return VarianceProfile(n=int(data["n"]), entries=np.asarray(data["entries"]))
    if "coeffs" in data:
        return BlockProfile(
            d=int(data["d"]),
            weights=np.asarray(data["weights"]),
            coeffs=np.asarray(data["coeffs"]),
        )
    raise InvalidProfile("profile dict needs either 'entries' or 'coeffs'")


def save_profile(profile: Profile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile_to_dict(profile), fh, sort_keys=True)
        fh.write("\n")


def load_profile(path) -> Profile:
    with open(path, encoding="utf-8") as fh:
        return profile_from_dict(json.load(fh))


def expand_block_profile(block: BlockProfile, n: int) -> VarianceProfile:
    """Materialize a block profile as a block-constant n x n variance profile.

    Class sizes are alpha_k * n rounded by largest remainder; every class must
    receive at least one row.
    """
    raw = block.weights * n
    sizes = np.floor(raw).astype(int)
    short = n - sizes.sum()
    if short > 0:
        order = np.argsort(-(raw - sizes))
        sizes[order[:short]] += 1
    if sizes.min() < 1:
        raise InvalidProfile(f"n={n} too small to give every class at least one row")
    labels = np.repeat(np.arange(block.d), sizes)
    entries = block.coeffs[labels[:, None], labels[None, :]]
    return VarianceProfile(n=n, entries=entries)


def reduce_profile(profile: Profile) -> Profile:
    """Collapse a block-constant variance profile to its block form.

    Rows are grouped by exact equality; if that yields fewer distinct rows
    than n and the grouping is consistent, the equivalent BlockProfile is
    returned (same predicted density, far cheaper to solve).  Irreducible
    profiles are returned unchanged.
    """
    if isinstance(profile, BlockProfile):
        return profile
    entries = profile.entries
    _, first_idx, labels = np.unique(entries, axis=0, return_index=True, return_inverse=True)
    d = len(first_idx)
    if d >= profile.n:
        return profile
    counts = np.bincount(labels, minlength=d)
    coeffs = np.empty((d, d))
    for k in range(d):
        row = entries[first_idx[k]]
        for l in range(d):
            block_vals = row[labels == l]
            if not np.all(block_vals == block_vals[0]):
                return profile  # identical rows but not block-constant columns
            coeffs[k, l] = block_vals[0]
    coeffs = (coeffs + coeffs.T) / 2.0
    return BlockProfile(d=d, weights=counts / profile.n, coeffs=coeffs)


def _weight_matrix(profile: Profile) -> np.ndarray:
    """Matrix W with (S g)_k = (W g)_k."""
    if isinstance(profile, VarianceProfile):
        return profile.entries / profile.n
    return profile.coeffs * profile.weights[None, :]


# ---------------------------------------------------------------------------
# solver


def _residual(g: np.ndarray, z: complex, sg: np.ndarray) -> float:
    return float(np.abs(1.0 / g + z + sg).max())


def _newton_polish(wmat, z, g, tol, budget):
    """Damped Newton on the defect 1/g + z + Wg; returns (g, res, steps) or None.

    Used when the fixed-point map is marginally contractive (spectral points
    next to a support edge); the Jacobian solve restores fast convergence.
    """
    dim = len(g)
    eye = np.eye(dim)
    steps = 0
    res = _residual(g, z, wmat @ g)
    while steps < budget:
        phi = 1.0 / g + z + wmat @ g
        jac = wmat - eye * (1.0 / g**2)
        try:
            delta = np.linalg.solve(jac, -phi)
        except np.linalg.LinAlgError:
            return None
        scale = 1.0
        for _ in range(12):
            cand = g + scale * delta
            if np.all(cand.imag > 0):
                cand_res = _residual(cand, z, wmat @ cand)
                if cand_res < res:
                    g, res = cand, cand_res
                    break
            scale *= 0.5
        else:
            return None
        steps += 1
        if res <= tol:
            return g, res, steps
    return None


def solve_qve(
    profile: Profile,
    point: SpectralPoint,
    opts: SolverOptions | None = None,
    initial: np.ndarray | None = None,
) -> QveSolution:
    """Solve the quadratic vector equation at one spectral point.

    Damped fixed-point iteration g <- (1-w) g - w/(z + Sg) started from the
    large-|z| limit g = -1/z (or from `initial` for warm starts).  The damping
    factor halves when the residual rises twice in a row; if the iteration
    stalls near a support edge a Newton polish finishes the solve.  Raises
    NonConvergence when the residual never reaches opts.tol.
    """
    opts = opts or SolverOptions()
    z = point.z
    dim = profile.dim
    wmat = _weight_matrix(profile)

    if initial is not None:
        g = np.array(initial, dtype=np.complex128)
        if g.shape != (dim,) or not np.all(g.imag > 0):
            raise ValueError("warm start must be a length-dim vector with positive imaginary parts")
    else:
        g = np.full(dim, -1.0 / z, dtype=np.complex128)

    omega = opts.omega
    prev_res = math.inf
    rises = 0
    checkpoint_res = math.inf
    newton_blocked_until = 0
    best_res = math.inf

    it = 0
    while it <= opts.max_iter:
        sg = wmat @ g
        res = _residual(g, z, sg)
        best_res = min(best_res, res)
        if res <= opts.tol:
            return _finish(profile, point, g, res, it)

        if res > prev_res:
            rises += 1
            if rises >= 2:
                omega = max(omega / 2.0, _OMEGA_MIN)
                rises = 0
        else:
            rises = 0
        prev_res = res

        if it % _STALL_WINDOW == 0:
            stalled = res > _STALL_FACTOR * checkpoint_res
            checkpoint_res = res
            if stalled and it >= newton_blocked_until and it > 0:
                polished = _newton_polish(wmat, z, g, opts.tol, budget=40)
                if polished is not None:
                    g_new, res_new, steps = polished
                    return _finish(profile, point, g_new, res_new, it + steps)
                newton_blocked_until = it + 8 * _STALL_WINDOW

        g = (1.0 - omega) * g - omega / (z + sg)
        it += 1

    raise NonConvergence(
        f"fixed point not below tol={opts.tol:g} after {opts.max_iter} iterations "
        f"at z={point.re:g}+{point.im:g}i (best residual {best_res:.3g}); "
        "eta may be too small for a cold start, use continuation",
        x=point.re,
        eta=point.im,
        residual=best_res,
        iterations=opts.max_iter,
    )


def _finish(profile: Profile, point: SpectralPoint, g, res, iterations) -> QveSolution:
    if not np.all(g.imag > 0):
        raise NonConvergence(
            "solution left the upper half plane", x=point.re, eta=point.im, residual=res
        )
    if isinstance(profile, VarianceProfile):
        m = complex(g.mean())
    else:
        m = complex(profile.weights @ g)
    g = g.copy()
    g.setflags(write=False)
    return QveSolution(point=point, g=g, m=m, residual=res, iterations=iterations)


def continuation_path(
    profile: Profile,
    x: float,
    eta_start: float,
    eta_end: float,
    steps: int,
    opts: SolverOptions | None = None,
) -> list[QveSolution]:
    """Solutions along a geometric eta descent from eta_start to eta_end.

    Each solve warm-starts from the previous one; `steps` counts the
    transitions, so the path holds steps+1 points (one point if the two
    etas coincide).
    """
    if not (eta_start >= eta_end > 0):
        raise ValueError(f"need eta_start >= eta_end > 0, got {eta_start}, {eta_end}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if eta_start == eta_end:
        return [solve_qve(profile, SpectralPoint(x, eta_end), opts)]
    etas = np.geomspace(eta_start, eta_end, steps + 1)
    etas[-1] = eta_end
    path: list[QveSolution] = []
    g = None
    for eta in etas:
        sol = solve_qve(profile, SpectralPoint(x, float(eta)), opts, initial=g)
        g = sol.g
        path.append(sol)
    return path


def solve_qve_continuation(
    profile: Profile,
    x: float,
    eta_start: float,
    eta_end: float,
    steps: int,
    opts: SolverOptions | None = None,
) -> QveSolution:
    """Solution at x + i*eta_end, stabilized by geometric eta-stepping."""
    return continuation_path(profile, x, eta_start, eta_end, steps, opts)[-1]


def _continuation_steps(eta_start: float, eta_end: float) -> int:
    if eta_end >= eta_start:
        return 1
    return max(1, math.ceil(math.log(eta_end / eta_start) / math.log(CONTINUATION_RATIO)))


def _eta_schedule(eta: float) -> np.ndarray:
    start = max(CONTINUATION_START, eta)
    if start == eta:
        return np.array([eta])
    schedule = np.geomspace(start, eta, _continuation_steps(start, eta) + 1)
    schedule[-1] = eta
    return schedule


_BLOCK_ITER_CAP = 400


def _solve_batch(
    profile: Profile,
    xs: np.ndarray,
    eta: float,
    opts: SolverOptions,
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Solution vectors g (dim x len(xs)) at the points xs + i*eta.

    All columns share one geometric eta descent (skipped when a warm start is
    supplied); each damped iteration is a single matrix product over the
    still-unconverged columns.  Columns that stall (support edges at tiny eta)
    fall back to the scalar solver, whose Newton polish finishes them.
    """
    dim = profile.dim
    wmat = _weight_matrix(profile).astype(np.complex128)
    num = xs.size
    if initial is None:
        schedule = _eta_schedule(eta)
        g = np.empty((dim, num), dtype=np.complex128)
        g[:] = -1.0 / (xs + 1j * schedule[0])[None, :]
    else:
        schedule = np.array([eta])
        g = np.array(initial, dtype=np.complex128)

    for eta_k in schedule:
        z = xs + 1j * eta_k
        omega = np.full(num, opts.omega)
        rises = np.zeros(num, dtype=np.int64)
        prev = np.full(num, np.inf)
        active = np.ones(num, dtype=bool)
        for _ in range(_BLOCK_ITER_CAP):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            ga = g[:, idx]
            za = z[idx]
            sg = wmat @ ga
            res = np.abs(1.0 / ga + za[None, :] + sg).max(axis=0)
            done = res <= opts.tol
            rose = res > prev[idx]
            rises[idx] = np.where(rose, rises[idx] + 1, 0)
            halve = rises[idx] >= 2
            omega[idx] = np.where(halve, np.maximum(omega[idx] / 2.0, _OMEGA_MIN), omega[idx])
            rises[idx] = np.where(halve, 0, rises[idx])
            prev[idx] = res
            pending = ~done
            if pending.any():
                j = idx[pending]
                g[:, j] = (1.0 - omega[j])[None, :] * ga[:, pending] - omega[j][None, :] / (
                    za[pending][None, :] + sg[:, pending]
                )
            active[idx[done]] = False

    final_res = np.abs(1.0 / g + (xs + 1j * eta)[None, :] + wmat @ g).max(axis=0)
    for j in np.nonzero(final_res > opts.tol)[0]:
        sol = solve_qve(profile, SpectralPoint(float(xs[j]), eta), opts, initial=g[:, j])
        g[:, j] = sol.g
    if not np.all(g.imag > 0):
        bad = xs[np.nonzero((g.imag <= 0).any(axis=0))[0][0]]
        raise NonConvergence(f"density solve left the upper half plane at x={bad:g}", x=float(bad), eta=eta)
    return g


def _m_of(profile: Profile, g: np.ndarray) -> np.ndarray:
    if isinstance(profile, VarianceProfile):
        return g.mean(axis=0)
    return profile.weights @ g


def density_batch(
    profile: Profile,
    xs: np.ndarray,
    eta: float = DEFAULT_ETA,
    opts: SolverOptions | None = None,
) -> np.ndarray:
    """Im m(x + i*eta)/pi for an array of abscissas, solved simultaneously."""
    opts = opts or SolverOptions()
    solver_profile = reduce_profile(profile)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    if xs.size == 0:
        return np.empty(0)
    if not eta > 0:
        raise ValueError("eta must be positive")
    g = _solve_batch(solver_profile, xs, eta, opts)
    return _m_of(solver_profile, g).imag / math.pi


def density_at(profile: Profile, x: float, eta: float = DEFAULT_ETA, opts: SolverOptions | None = None) -> float:
    """Predicted density Im m(x + i*eta)/pi via continuation from eta=1."""
    return float(density_batch(profile, np.array([x]), eta, opts)[0])


def extract_density(
    profile: Profile,
    grid: np.ndarray,
    eta: float = DEFAULT_ETA,
    opts: SolverOptions | None = None,
) -> DensityCurve:
    """Tabulate the predicted density on a strictly increasing grid.

    Every abscissa is solved by eta-continuation down to `eta`.  Block-constant
    profiles are reduced to their block form first (identical prediction, far
    cheaper).  NonConvergence is re-raised with the offending abscissa attached.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    if not eta > 0:
        raise ValueError("eta must be positive")
    solver_profile = reduce_profile(profile)
    values = density_batch(solver_profile, grid, eta, opts)
    return DensityCurve(
        grid=grid,
        values=values,
        eta_used=eta,
        profile_hash=profile_fingerprint(profile),
        source=solver_profile,
    )


def default_grid() -> np.ndarray:
    lo, hi, count = DEFAULT_GRID
    return np.linspace(lo, hi, count)


def integrate_density(
    curve: DensityCurve,
    lo: float,
    hi: float,
    rel_tol: float = 1e-6,
    opts: SolverOptions | None = None,
) -> float:
    """Adaptive trapezoid integral of the predicted density over [lo, hi].

    Starts from the tabulated points inside the interval and keeps halving
    the mesh (re-solving the equation at new abscissas) until two successive
    refinements agree to rel_tol relative (1e-12 absolute floor).
    """
    if not (curve.grid[0] <= lo and hi <= curve.grid[-1]):
        raise OutOfRange(
            f"[{lo}, {hi}] exceeds the tabulated span [{curve.grid[0]}, {curve.grid[-1]}]"
        )
    if not lo <= hi:
        raise OutOfRange(f"need lo <= hi, got [{lo}, {hi}]")
    if lo == hi:
        return 0.0
    if curve.source is None:
        raise ValueError("curve lacks its source profile; cannot refine")
    profile = reduce_profile(curve.source)
    eta = curve.eta_used
    solver_opts = opts or SolverOptions()

    inner = curve.grid[(curve.grid > lo) & (curve.grid < hi)]
    xs = np.unique(np.concatenate(([lo], inner, [hi])))
    g = _solve_batch(profile, xs, eta, solver_opts)
    vals = _m_of(profile, g).imag / math.pi
    total = float(np.trapezoid(vals, xs))
    for _ in range(24):
        mids = (xs[:-1] + xs[1:]) / 2.0
        # midpoints warm-start from neighbor averages, solved at eta directly
        g_mid = _solve_batch(profile, mids, eta, solver_opts, initial=(g[:, :-1] + g[:, 1:]) / 2.0)
        mid_vals = _m_of(profile, g_mid).imag / math.pi
        xs_new = np.empty(xs.size + mids.size)
        vals_new = np.empty_like(xs_new)
        g_new = np.empty((g.shape[0], xs_new.size), dtype=np.complex128)
        xs_new[0::2], xs_new[1::2] = xs, mids
        vals_new[0::2], vals_new[1::2] = vals, mid_vals
        g_new[:, 0::2], g_new[:, 1::2] = g, g_mid
        refined = float(np.trapezoid(vals_new, xs_new))
        done = abs(refined - total) <= max(rel_tol * abs(refined), 1e-12)
        xs, vals, g, total = xs_new, vals_new, g_new, refined
        if done:
            return total
    raise NonConvergence(f"quadrature over [{lo}, {hi}] did not settle after 24 refinements")


def detect_bulk(curve: DensityCurve, eps: float) -> list[BulkInterval]:
    """Maximal grid-aligned intervals on which the tabulated density >= eps.

    Values below the eta-smoothing noise floor eta_used**(2/3) are treated as
    zero, so leakage of the regularized transform outside the true support
    cannot masquerade as bulk; runs shorter than two grid points are dropped.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    threshold = max(eps, curve.eta_used ** (2.0 / 3.0))
    mask = curve.values >= threshold
    intervals: list[BulkInterval] = []
    start = None
    for i, ok in enumerate(np.append(mask, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start >= 2:
                intervals.append(
                    BulkInterval(lo=float(curve.grid[start]), hi=float(curve.grid[i - 1]), min_density=eps)
                )
            start = None
    return intervals


def density_to_csv(curve: DensityCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "rho"])
        for x, v in zip(curve.grid, curve.values):
            writer.writerow([repr(float(x)), repr(float(v))])

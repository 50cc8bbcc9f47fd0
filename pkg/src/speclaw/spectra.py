"""Symmetric eigen-computation kernels.

Householder tridiagonalization feeds a Sturm-sequence pivot count that
returns exact eigenvalue counts on half-open intervals (lo, hi] without a
full diagonalization; the dense eigensolver stays available as the
cross-checking slow path.  Also: empirical Stieltjes transforms, eigenvector
sup-norms, and the Schur-complement identity for resolvent diagonal entries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .ensembles import SampledMatrix
from .errors import MissingVectors, NoConvergence
from .qve import SpectralPoint


@dataclass(frozen=True)
class TridiagonalForm:
    """Orthogonal reduction of a symmetric matrix to tridiagonal shape."""

    diag: np.ndarray
    offdiag: np.ndarray
    q: np.ndarray | None = None

    def __post_init__(self):
        diag = np.array(self.diag, dtype=np.float64)
        offdiag = np.array(self.offdiag, dtype=np.float64)
        if diag.ndim != 1 or offdiag.shape != (max(diag.size - 1, 0),):
            raise ValueError("need length-n diag and length-(n-1) offdiag")
        diag.setflags(write=False)
        offdiag.setflags(write=False)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def n(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        t = np.diag(self.diag)
        if self.n > 1:
            t += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return t


@dataclass(frozen=True)
class SpectrumSummary:
    """Sorted eigenvalues with optional orthonormal eigenvectors and their sup-norms."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    inf_norms: np.ndarray | None = None

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("eigenvalues must be a nonempty 1-d array")
        if np.any(np.diff(vals) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        vals.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        if self.eigenvectors is not None and self.eigenvectors.shape != (vals.size, vals.size):
            raise ValueError("eigenvectors must be n x n with one column per eigenvalue")

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def _as_array(m: SampledMatrix | np.ndarray) -> np.ndarray:
    a = m.data if isinstance(m, SampledMatrix) else np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    return a


def tridiagonalize(m: SampledMatrix | np.ndarray, accumulate_q: bool = False) -> TridiagonalForm:
    """Householder reduction Q^T A Q = T of a symmetric matrix."""
    a = _as_array(m)
    n = a.shape[0]
    if n == 1:
        return TridiagonalForm(diag=a.diagonal().copy(), offdiag=np.empty(0))
    if accumulate_q:
        # the Hessenberg path exposes the orthogonal factor directly
        h, q = scipy.linalg.hessenberg(a, calc_q=True)
        return TridiagonalForm(diag=np.diag(h).copy(), offdiag=np.diag(h, -1).copy(), q=q)
    _, d, e, _, info = lapack.dsytrd(a)
    if info != 0:
        raise ValueError(f"tridiagonal reduction failed (info={info})")
    return TridiagonalForm(diag=d, offdiag=e)


def _sturm_count_scalar(diag: np.ndarray, off2: np.ndarray, shift: float) -> int:
    """#{eigenvalues < shift}; exact zero pivots nudge the shift 1 ulp toward -inf."""
    n = diag.size
    with np.errstate(over="ignore", divide="ignore"):
        for _ in range(64):
            count = 0
            piv = diag[0] - shift
            hit = piv == 0.0
            i = 1
            while not hit and i < n:
                if piv < 0.0:
                    count += 1
                piv = (diag[i] - shift) - off2[i - 1] / piv
                hit = piv == 0.0
                i += 1
            if not hit:
                if piv < 0.0:
                    count += 1
                return count
            shift = np.nextafter(shift, -np.inf)
    raise ValueError("Sturm shift could not be separated from the spectrum")


def eigenvalue_counts_below(t: TridiagonalForm, shifts: np.ndarray) -> np.ndarray:
    """Vectorized #{eigenvalues < shift} for an array of shifts."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    diag, off = t.diag, t.offdiag
    off2 = off * off
    piv = diag[0] - shifts
    counts = (piv < 0.0).astype(np.int64)
    bad = piv == 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for i in range(1, diag.size):
            piv = (diag[i] - shifts) - off2[i - 1] / piv
            bad |= (piv == 0.0) | ~np.isfinite(piv)
            counts += piv < 0.0
    if bad.any():
        for idx in np.nonzero(bad)[0]:
            counts[idx] = _sturm_count_scalar(diag, off2, float(shifts[idx]))
    return counts


def count_in_interval(t: TridiagonalForm, lo: float, hi: float) -> int:
    """Exact eigenvalue count on the half-open interval (lo, hi].

    Computed as two Sturm pivot counts; an eigenvalue landing exactly on a
    shift is resolved deterministically by nudging the shift toward -inf.
    """
    if not lo <= hi:
        raise ValueError(f"need lo <= hi, got ({lo}, {hi}]")
    if lo == hi:
        return 0
    below = eigenvalue_counts_below(t, np.array([lo, hi]))
    return int(below[1] - below[0])


def eigen_full(m: SampledMatrix | np.ndarray, want_vectors: bool = False) -> SpectrumSummary:
    """Full symmetric eigendecomposition, eigenvalues ascending."""
    a = _as_array(m)
    try:
        if want_vectors:
            vals, vecs = np.linalg.eigh(a)
        else:
            vals, vecs = np.linalg.eigvalsh(a), None
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"dense eigensolver failed: {exc}") from exc
    inf_norms = np.abs(vecs).max(axis=0) if vecs is not None else None
    return SpectrumSummary(eigenvalues=vals, eigenvectors=vecs, inf_norms=inf_norms)


def stieltjes_empirical(s: SpectrumSummary, point: SpectralPoint) -> complex:
    """s_n(z) = (1/n) sum_i 1/(lambda_i - z)."""
    return complex(np.mean(1.0 / (s.eigenvalues - point.z)))


def eigvec_inf_norms(s: SpectrumSummary) -> np.ndarray:
    """Sup-norm of each unit eigenvector; always within [1/sqrt(n), 1]."""
    if s.eigenvectors is None:
        raise MissingVectors("summary holds no eigenvectors")
    return np.abs(s.eigenvectors).max(axis=0)


def schur_resolvent_check(
    m: SampledMatrix | np.ndarray, k: int, point: SpectralPoint
) -> tuple[complex, complex]:
    """k-th resolvent diagonal entry, by direct solve and by Schur complement.

    direct = [(W - z)^{-1}]_{kk};  schur = 1/(W_kk - z - a_k^T (W_k - z)^{-1} a_k)
    with W_k the k-th principal minor and a_k the k-th column without its k-th
    entry.  The two agree to solver accuracy for any z off the real axis.
    """
    a = _as_array(m)
    n = a.shape[0]
    if not 0 <= k < n:
        raise ValueError(f"index k={k} out of range for n={n}")
    z = point.z
    eye = np.eye(n)
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[k] = 1.0
    direct = complex(np.linalg.solve(a - z * eye, rhs)[k])
    keep = np.arange(n) != k
    minor = a[np.ix_(keep, keep)]
    col = a[keep, k].astype(np.complex128)
    if n == 1:
        y = 0.0 + 0.0j
    else:
        y = complex(col @ np.linalg.solve(minor - z * np.eye(n - 1), col))
    schur = 1.0 / (a[k, k] - z - y)
    return direct, schur


def spectrum_to_csv(s: SpectrumSummary, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue", "inf_norm"])
        norms = s.inf_norms if s.inf_norms is not None else [None] * s.n
        for i, (lam, nrm) in enumerate(zip(s.eigenvalues, norms)):
            writer.writerow([i, repr(float(lam)), "" if nrm is None else repr(float(nrm))])


def bulk_indices(s: SpectrumSummary, intervals) -> np.ndarray:
    """Indices of eigenvalues lying inside any of the given bulk intervals."""
    mask = np.zeros(s.n, dtype=bool)
    for itv in intervals:
        mask |= (s.eigenvalues >= itv.lo) & (s.eigenvalues <= itv.hi)
    return np.nonzero(mask)[0]


def normalized_deloc_ratios(
    s: SpectrumSummary, intervals, n: int, bound: float, p_eff: float
) -> np.ndarray:
    """Delocalization ratios ||u_i||_inf * sqrt(n p_eff)/(K sqrt(log n)) over bulk eigenvectors."""
    idx = bulk_indices(s, intervals)
    norms = eigvec_inf_norms(s)[idx]
    return norms * math.sqrt(n * p_eff) / (bound * math.sqrt(math.log(n)))

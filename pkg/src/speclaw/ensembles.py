"""Seedable samplers for random symmetric matrices with variance profiles.

Three ensembles: dense Wigner-type matrices (independent bounded entries,
entry (i,j) scaled to variance s_ij), their Bernoulli sparsifications, and
stochastic-block-model adjacency matrices.  All entries derive from the
counter-based streams in `rng`, so a spec plus a seed pins the matrix bit
for bit.  Matrices are stored raw; the recorded `scaling` is the multiplier
that produces the normalized matrix whose spectrum the predictions address.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.io

from . import rng
from .errors import DegenerateVariance, InvalidProfile, InvalidSpec
from .qve import BlockProfile, Profile, VarianceProfile, profile_from_dict, profile_to_dict

LAW_KINDS = ("rademacher", "uniform_bounded", "scaled_bernoulli_centered")
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class EntryLaw:
    """Mean-zero, unit-variance entry distribution bounded by `bound`.

    rademacher: +/-1 (bound 1).  uniform_bounded: uniform on
    [-sqrt(3), sqrt(3)] (bound sqrt(3)).  scaled_bernoulli_centered: takes
    value K with probability 1/(1+K^2) and -1/K otherwise, so the bound K
    itself parameterizes the law.  The profile later multiplies samples by
    sqrt(s_ij) to give entry variance s_ij.
    """

    kind: str
    bound: float | None = None

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise InvalidSpec(f"unknown entry law {self.kind!r}, expected one of {LAW_KINDS}")
        bound = self.bound
        if bound is None:
            bound = {"rademacher": 1.0, "uniform_bounded": _SQRT3, "scaled_bernoulli_centered": 3.0}[self.kind]
        bound = float(bound)
        if self.kind == "rademacher" and abs(bound - 1.0) > 1e-12:
            raise InvalidSpec("rademacher entries are +/-1; bound must be 1")
        if self.kind == "uniform_bounded" and abs(bound - _SQRT3) > 1e-12:
            raise InvalidSpec("unit-variance bounded uniform requires bound sqrt(3)")
        if self.kind == "scaled_bernoulli_centered" and bound < 1.0:
            raise InvalidSpec("scaled centered Bernoulli needs bound >= 1")
        object.__setattr__(self, "bound", bound)

    def sample(self, key: np.uint64, counters: np.ndarray) -> np.ndarray:
        if self.kind == "rademacher":
            return rng.rademacher(key, counters)
        if self.kind == "uniform_bounded":
            return (2.0 * rng.uniforms(key, counters) - 1.0) * _SQRT3
        k = self.bound
        q = 1.0 / (1.0 + k * k)
        hit = rng.uniforms(key, counters) < q
        return np.where(hit, k, -1.0 / k)


@dataclass(frozen=True)
class WignerSpec:
    n: int
    profile: VarianceProfile
    law: EntryLaw
    seed: int

    def __post_init__(self):
        if not isinstance(self.profile, VarianceProfile):
            raise InvalidSpec("dense ensembles need a full VarianceProfile")
        if self.profile.n != self.n:
            raise InvalidSpec(f"profile is {self.profile.n}x{self.profile.n} but n={self.n}")


@dataclass(frozen=True)
class SparseSpec:
    base: WignerSpec
    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise InvalidSpec(f"keep probability must lie in (0, 1], got p={self.p}")


@dataclass(frozen=True)
class SbmSpec:
    d: int
    sizes: tuple[int, ...]
    probs: np.ndarray
    seed: int

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        probs = np.array(self.probs, dtype=np.float64)
        if self.d < 1 or len(sizes) != self.d:
            raise InvalidSpec(f"need d >= 1 class sizes, got d={self.d}, sizes={sizes}")
        if min(sizes) < 1:
            raise InvalidSpec("every class must be nonempty")
        if probs.shape != (self.d, self.d):
            raise InvalidSpec(f"probs must be {self.d}x{self.d}")
        if not np.array_equal(probs, probs.T):
            raise InvalidSpec("edge probabilities must be exactly symmetric")
        if probs.min() < 0.0 or probs.max() >= 1.0:
            raise InvalidSpec("edge probabilities must lie in [0, 1)")
        probs.setflags(write=False)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)
        n = self.n
        if self.d >= n / math.log(n) and n > 2:
            warnings.warn(
                f"d={self.d} classes at n={n} is in the unbounded-blocks regime; "
                "predictions use the n-dependent block profile",
                stacklevel=2,
            )

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def p_max(self) -> float:
        return float(self.probs.max())

    @property
    def sigma_squared(self) -> float:
        p = self.p_max
        return p * (1.0 - p)

    def block_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.d), self.sizes)


EnsembleSpec = WignerSpec | SparseSpec | SbmSpec


@dataclass(frozen=True)
class SampledMatrix:
    """One sampled symmetric matrix plus the normalization it calls for."""

    n: int
    data: np.ndarray
    scaling: float
    provenance: dict = field(compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.n, self.n):
            raise InvalidSpec(f"matrix must be {self.n}x{self.n}")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def normalized(self) -> np.ndarray:
        """The matrix the spectral predictions refer to (data * scaling)."""
        return self.data * self.scaling


def _symmetric_from_upper(n: int, iu, ju, vals) -> np.ndarray:
    out = np.zeros((n, n))
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def sample_wigner(spec: WignerSpec) -> SampledMatrix:
    """Dense Wigner-type sample; entry (i,j) has mean 0 and variance s_ij."""
    n = spec.n
    iu, ju = np.triu_indices(n)
    counters = rng.pair_counters(iu, ju)
    vals = spec.law.sample(rng.stream_key(spec.seed, rng.TAG_VALUES), counters)
    vals = vals * np.sqrt(spec.profile.entries[iu, ju])
    data = _symmetric_from_upper(n, iu, ju, vals)
    return SampledMatrix(
        n=n,
        data=data,
        scaling=1.0 / math.sqrt(n),
        provenance={"spec": ensemble_to_dict(spec), "normalization": "1/sqrt(n)"},
    )


def sample_sparse(spec: SparseSpec) -> SampledMatrix:
    """Bernoulli(p) sparsification of the base dense sample, rescaled by 1/sqrt(np).

    The mask stream is keyed independently of the value stream, so the kept
    entries equal the dense sample's entries bit for bit.
    """
    base = sample_wigner(spec.base)
    n = spec.base.n
    iu, ju = np.triu_indices(n)
    counters = rng.pair_counters(iu, ju)
    keep = rng.uniforms(rng.stream_key(spec.base.seed, rng.TAG_MASK), counters) < spec.p
    data = _symmetric_from_upper(n, iu, ju, base.data[iu, ju] * keep)
    return SampledMatrix(
        n=n,
        data=data,
        scaling=1.0 / math.sqrt(n * spec.p),
        provenance={"spec": ensemble_to_dict(spec), "normalization": "1/sqrt(n*p)"},
    )


def sample_sbm(spec: SbmSpec) -> SampledMatrix:
    """Adjacency matrix of a stochastic block model: zero diagonal, {0,1} entries."""
    n = spec.n
    labels = spec.block_labels()
    iu, ju = np.triu_indices(n, k=1)
    counters = rng.pair_counters(iu, ju)
    p_edge = spec.probs[labels[iu], labels[ju]]
    edges = (rng.uniforms(rng.stream_key(spec.seed, rng.TAG_EDGES), counters) < p_edge).astype(np.float64)
    data = _symmetric_from_upper(n, iu, ju, edges)
    sigma2 = spec.sigma_squared
    scaling = 1.0 / (math.sqrt(n) * math.sqrt(sigma2)) if sigma2 > 0 else 1.0
    return SampledMatrix(
        n=n,
        data=data,
        scaling=scaling,
        provenance={"spec": ensemble_to_dict(spec), "normalization": "1/(sqrt(n)*sigma)"},
    )


def center_and_scale_sbm(adj: SampledMatrix, spec: SbmSpec) -> SampledMatrix:
    """(A - E A~)/(sqrt(n) sigma): subtract the block-mean matrix, then rescale.

    E A~ carries p_kl on every entry of block (k,l), diagonal included, so the
    rank-d mean structure is removed before normalizing by the largest noise
    scale sigma = sqrt(p(1-p)), p = max p_kl.
    """
    if adj.n != spec.n:
        raise InvalidSpec(f"adjacency is {adj.n}x{adj.n} but spec has n={spec.n}")
    sigma2 = spec.sigma_squared
    if sigma2 == 0.0:
        raise DegenerateVariance("all block probabilities are 0 or 1; sigma vanishes")
    labels = spec.block_labels()
    expected = spec.probs[labels[:, None], labels[None, :]]
    data = (adj.data - expected) / (math.sqrt(spec.n) * math.sqrt(sigma2))
    return SampledMatrix(
        n=spec.n,
        data=data,
        scaling=1.0,
        provenance={"spec": ensemble_to_dict(spec), "normalization": "centered, 1/(sqrt(n)*sigma) applied"},
    )


def effective_profile(spec: EnsembleSpec) -> Profile:
    """The profile whose predicted density matches the normalized ensemble.

    Dense and sparse ensembles keep their stored profile (the 1/sqrt(np)
    rescaling undoes the mask's variance thinning); block models reduce to
    class weights alpha_i = N_i/n and coefficients c_kl = sigma_kl^2/sigma^2.
    """
    if isinstance(spec, WignerSpec):
        return spec.profile
    if isinstance(spec, SparseSpec):
        return spec.base.profile
    sigma2 = spec.sigma_squared
    if sigma2 == 0.0:
        raise DegenerateVariance("all block probabilities are 0 or 1; sigma vanishes")
    sigma2_blocks = spec.probs * (1.0 - spec.probs)
    coeffs = sigma2_blocks / sigma2
    if coeffs.min() <= 0.0:
        raise InvalidProfile("some block has zero variance (p_kl in {0,1}); no valid block profile")
    if coeffs.max() > 1.0 + 1e-12:
        raise InvalidProfile("sigma_kl^2 exceeds sigma^2; block coefficients leave (0, 1]")
    coeffs = np.minimum(coeffs, 1.0)
    sizes = np.asarray(spec.sizes, dtype=np.float64)
    return BlockProfile(d=spec.d, weights=sizes / spec.n, coeffs=coeffs)


def ensemble_parameters(spec: EnsembleSpec) -> tuple[int, float, float]:
    """(n, K, p_eff) for interval-length and delocalization normalizations."""
    if isinstance(spec, WignerSpec):
        return spec.n, spec.law.bound, 1.0
    if isinstance(spec, SparseSpec):
        return spec.base.n, spec.base.law.bound, spec.p
    return spec.n, 1.0, spec.p_max


def boundedness_flag(spec: EnsembleSpec) -> bool:
    """True when K^2 log n/(n p_eff) > 0.1, i.e. the bounded-entry hypothesis is strained."""
    n, k, p_eff = ensemble_parameters(spec)
    return k * k * math.log(n) / (n * p_eff) > 0.1


def with_seed(spec: EnsembleSpec, seed: int) -> EnsembleSpec:
    """Copy of the spec with its sampling seed replaced."""
    if isinstance(spec, SparseSpec):
        return replace(spec, base=replace(spec.base, seed=seed))
    return replace(spec, seed=seed)


def sample(spec: EnsembleSpec) -> SampledMatrix:
    if isinstance(spec, WignerSpec):
        return sample_wigner(spec)
    if isinstance(spec, SparseSpec):
        return sample_sparse(spec)
    return sample_sbm(spec)


def normalized_sample(spec: EnsembleSpec) -> np.ndarray:
    """Sample and normalize: data*scaling, or the centered matrix for block models."""
    if isinstance(spec, SbmSpec):
        return center_and_scale_sbm(sample_sbm(spec), spec).data
    return sample(spec).normalized()


# ---------------------------------------------------------------------------
# serialization


def ensemble_to_dict(spec: EnsembleSpec) -> dict:
    if isinstance(spec, WignerSpec):
        return {
            "kind": "wigner",
            "n": spec.n,
            "profile": profile_to_dict(spec.profile),
            "law": {"kind": spec.law.kind, "bound": spec.law.bound},
            "seed": spec.seed,
        }
    if isinstance(spec, SparseSpec):
        return {"kind": "sparse", "base": ensemble_to_dict(spec.base), "p": spec.p}
    return {
        "kind": "sbm",
        "d": spec.d,
        "sizes": list(spec.sizes),
        "probs": spec.probs.tolist(),
        "seed": spec.seed,
    }


def ensemble_from_dict(data: dict) -> EnsembleSpec:
    kind = data.get("kind")
    if kind == "wigner":
        profile = profile_from_dict(data["profile"])
        if not isinstance(profile, VarianceProfile):
            raise InvalidSpec("dense ensembles need a full variance profile")
        law = EntryLaw(kind=data["law"]["kind"], bound=data["law"].get("bound"))
        return WignerSpec(n=int(data["n"]), profile=profile, law=law, seed=int(data["seed"]))
    if kind == "sparse":
        base = ensemble_from_dict(data["base"])
        if not isinstance(base, WignerSpec):
            raise InvalidSpec("sparse base must be a dense ensemble")
        return SparseSpec(base=base, p=float(data["p"]))
    if kind == "sbm":
        return SbmSpec(
            d=int(data["d"]),
            sizes=tuple(int(s) for s in data["sizes"]),
            probs=np.asarray(data["probs"]),
            seed=int(data["seed"]),
        )
    raise InvalidSpec(f"unknown ensemble kind {kind!r}")


def save_ensemble(spec: EnsembleSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ensemble_to_dict(spec), fh, sort_keys=True)
        fh.write("\n")


def load_ensemble(path) -> EnsembleSpec:
    with open(path, encoding="utf-8") as fh:
        return ensemble_from_dict(json.load(fh))


def save_matrix_binary(matrix: SampledMatrix, path) -> None:
    """Row-major float64 dump with an 8-byte little-endian size header."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", matrix.n))
        fh.write(np.ascontiguousarray(matrix.data, dtype="<f8").tobytes())


def load_matrix_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(n, n)
    return data.astype(np.float64)


def save_matrix_market(matrix: SampledMatrix, path) -> None:
    scipy.io.mmwrite(str(path), matrix.data, symmetry="symmetric")

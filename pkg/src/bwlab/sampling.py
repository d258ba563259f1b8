"""Parameter sampling, synthetic-curve dataset generation, and records IO.

Datasets are written as a single ``records.bin`` plus a ``manifest.json``.
One record is, in order, the ``d`` post-rest curve points as little-endian
float32 channel-interleaved (u, f) pairs followed by the 13 generating
parameters normalized to [0, 1] by the admissible bounds. The constant
rest point (u = 0, f = 0) is dropped, so a record holds exactly
``2 * d + 13`` floats where ``d`` is the discretized step count of the
loading history. Train records (all noise levels, in level order) come
first, then the noise-free test records. Curve values are stored raw;
the channel min-max ranges needed to normalize them are computed over the
train block only and recorded in the manifest.

Reproducibility: every random quantity draws from its own generator seeded
by ``(seed, stream, index)`` so record content does not depend on
generation order or chunking:

* stream 0: parameter set ``i``
* stream 1: curve-scale (u_y) perturbation for set ``i``
* stream 2: per-noise-level train subset selection
* stream 3: force noise for train record ordinal ``r``
* streams 4/5: replacement draws for sets whose simulation blew up
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SamplingError
from .loading import LoadingHistory
from .model import simulate_batch
from .params import (BSC_NAMES, DGD_NAMES, PARAM_BOUNDS, PARAM_NAMES,
                     PCH_NAMES, BwParams, Variant, bounds_arrays)

MANIFEST_SCHEMA = "bwlab-dataset-1"
DIST_SCHEMA = "bwlab-dist-1"
RECORDS_FILE = "records.bin"
MANIFEST_FILE = "manifest.json"
DEFAULT_UY_COV = 0.1
_MAX_REJECTS = 10_000


def minmax_normalize(values, lo, hi):
    """Map values into [0, 1] over [lo, hi]; bounds must satisfy hi > lo."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValueError("normalization needs hi > lo")
    return (np.asarray(values, dtype=float) - lo) / (hi - lo)


def minmax_denormalize(values, lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValueError("normalization needs hi > lo")
    return np.asarray(values, dtype=float) * (hi - lo) + lo


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError("uniform bounds must satisfy lo < hi")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class TruncNormal:
    mean: float
    sd: float
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError("bounds must satisfy lo < hi")
        if self.sd < 0.0:
            raise ValueError("sd must be >= 0")

    def sample(self, rng: np.random.Generator) -> float:
        if self.sd == 0.0:
            if not (self.lo <= self.mean <= self.hi):
                raise SamplingError("degenerate distribution outside bounds")
            return float(self.mean)
        for _ in range(_MAX_REJECTS):
            val = self.mean + self.sd * rng.standard_normal()
            if self.lo <= val <= self.hi:
                return float(val)
        raise SamplingError("rejection sampling exhausted its budget")


@dataclass(frozen=True)
class TruncJointNormal:
    """Multivariate normal restricted to an axis-aligned box."""

    mean: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        k = mean.size
        if cov.shape != (k, k) or lo.shape != (k,) or hi.shape != (k,):
            raise ValueError("inconsistent joint distribution dimensions")
        if np.any(lo >= hi):
            raise ValueError("bounds must satisfy lo < hi")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as err:
            raise ValueError("covariance must be positive definite") from err
        object.__setattr__(self, "mean", tuple(mean.tolist()))
        object.__setattr__(self, "cov", tuple(tuple(r) for r in cov.tolist()))
        object.__setattr__(self, "lo", tuple(lo.tolist()))
        object.__setattr__(self, "hi", tuple(hi.tolist()))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        mean = np.asarray(self.mean)
        cov = np.asarray(self.cov)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        for _ in range(_MAX_REJECTS):
            val = rng.multivariate_normal(mean, cov, method="cholesky")
            if np.all(val >= lo) and np.all(val <= hi):
                return val
        raise SamplingError("rejection sampling exhausted its budget")


def _third(lo: float, hi: float) -> float:
    return lo + (hi - lo) / 3.0


def _quarter(lo: float, hi: float) -> float:
    return (hi - lo) / 4.0


@dataclass(frozen=True)
class ParamDistributions:
    """Sampling distributions for all 13 parameters.

    Bounds are pinned to the admissible ranges; presets may reshape the
    densities (means, spreads, PCH correlations) but not widen or narrow
    the support.
    """

    T: Uniform
    F_y: Uniform
    alpha: TruncNormal
    beta: Uniform
    n: Uniform
    delta_nu: TruncNormal
    delta_eta: TruncNormal
    pch: TruncJointNormal

    def __post_init__(self):
        for name in ("T", "F_y", "beta", "n"):
            d = getattr(self, name)
            if (d.lo, d.hi) != PARAM_BOUNDS[name]:
                raise ValueError(f"{name} bounds must equal the admissible range")
        for name in ("alpha", "delta_nu", "delta_eta"):
            d = getattr(self, name)
            if (d.lo, d.hi) != PARAM_BOUNDS[name]:
                raise ValueError(f"{name} bounds must equal the admissible range")
        lo = tuple(PARAM_BOUNDS[n][0] for n in PCH_NAMES)
        hi = tuple(PARAM_BOUNDS[n][1] for n in PCH_NAMES)
        if self.pch.lo != lo or self.pch.hi != hi:
            raise ValueError("pch bounds must equal the admissible ranges")

    @classmethod
    def default(cls) -> "ParamDistributions":
        """Default preset: uniform where the range is the only knowledge,
        truncated normals peaked in the lower third elsewhere, independent
        PCH components. Spreads are a quarter of the range."""
        def tn(name):
            lo, hi = PARAM_BOUNDS[name]
            return TruncNormal(mean=_third(lo, hi), sd=_quarter(lo, hi), lo=lo, hi=hi)

        lo = tuple(PARAM_BOUNDS[n][0] for n in PCH_NAMES)
        hi = tuple(PARAM_BOUNDS[n][1] for n in PCH_NAMES)
        mean = tuple(_third(a, b) for a, b in zip(lo, hi))
        var = tuple(_quarter(a, b) ** 2 for a, b in zip(lo, hi))
        cov = tuple(tuple(var[i] if i == j else 0.0 for j in range(6)) for i in range(6))
        return cls(
            T=Uniform(*PARAM_BOUNDS["T"]),
            F_y=Uniform(*PARAM_BOUNDS["F_y"]),
            alpha=tn("alpha"),
            beta=Uniform(*PARAM_BOUNDS["beta"]),
            n=Uniform(*PARAM_BOUNDS["n"]),
            delta_nu=tn("delta_nu"),
            delta_eta=tn("delta_eta"),
            pch=TruncJointNormal(mean=mean, cov=cov, lo=lo, hi=hi),
        )

    def to_dict(self) -> dict:
        out = {"schema": DIST_SCHEMA}
        for name in ("T", "F_y", "beta", "n"):
            d = getattr(self, name)
            out[name] = {"kind": "uniform", "lo": d.lo, "hi": d.hi}
        for name in ("alpha", "delta_nu", "delta_eta"):
            d = getattr(self, name)
            out[name] = {"kind": "trunc_normal", "mean": d.mean, "sd": d.sd,
                         "lo": d.lo, "hi": d.hi}
        out["pch"] = {
            "kind": "trunc_joint_normal",
            "names": list(PCH_NAMES),
            "mean": list(self.pch.mean),
            "cov": [list(r) for r in self.pch.cov],
            "lo": list(self.pch.lo),
            "hi": list(self.pch.hi),
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ParamDistributions":
        if data.get("schema") != DIST_SCHEMA:
            raise ValueError(f"unsupported distribution schema: {data.get('schema')!r}")
        known = {"schema", "T", "F_y", "alpha", "beta", "n",
                 "delta_nu", "delta_eta", "pch"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown distribution keys: {sorted(unknown)}")
        def uni(name):
            d = data[name]
            if d.get("kind") != "uniform":
                raise ValueError(f"{name} must be uniform")
            return Uniform(lo=float(d["lo"]), hi=float(d["hi"]))

        def tn(name):
            d = data[name]
            if d.get("kind") != "trunc_normal":
                raise ValueError(f"{name} must be trunc_normal")
            return TruncNormal(mean=float(d["mean"]), sd=float(d["sd"]),
                               lo=float(d["lo"]), hi=float(d["hi"]))

        pd_ = data["pch"]
        if pd_.get("kind") != "trunc_joint_normal":
            raise ValueError("pch must be trunc_joint_normal")
        pch = TruncJointNormal(mean=tuple(pd_["mean"]),
                               cov=tuple(tuple(r) for r in pd_["cov"]),
                               lo=tuple(pd_["lo"]), hi=tuple(pd_["hi"]))
        return cls(T=uni("T"), F_y=uni("F_y"), alpha=tn("alpha"), beta=uni("beta"),
                   n=uni("n"), delta_nu=tn("delta_nu"), delta_eta=tn("delta_eta"),
                   pch=pch)

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "ParamDistributions":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def sample_params(distributions: ParamDistributions, rng: np.random.Generator,
                  variant: Variant | str = Variant.M_BWBN) -> BwParams:
    """Draw one admissible parameter set; masked categories stay neutral."""
    variant = Variant(variant)
    values = {
        "T": distributions.T.sample(rng),
        "F_y": distributions.F_y.sample(rng),
        "alpha": distributions.alpha.sample(rng),
        "beta": distributions.beta.sample(rng),
        "n": distributions.n.sample(rng),
    }
    if set(DGD_NAMES) <= set(variant.active_names):
        values["delta_nu"] = distributions.delta_nu.sample(rng)
        values["delta_eta"] = distributions.delta_eta.sample(rng)
    if set(PCH_NAMES) <= set(variant.active_names):
        pch = distributions.pch.sample(rng)
        values.update(dict(zip(PCH_NAMES, pch.tolist())))
    return BwParams(variant=variant, **values)


def perturb_u_y(u_y: float, rng: np.random.Generator,
                cov: float = DEFAULT_UY_COV) -> float:
    """Multiplicative normal perturbation of a curve scale, rejecting <= 0."""
    if u_y <= 0.0:
        raise ValueError("u_y must be positive")
    if cov == 0.0:
        return float(u_y)
    for _ in range(_MAX_REJECTS):
        val = u_y * (1.0 + cov * rng.standard_normal())
        if val > 0.0:
            return float(val)
    raise SamplingError("u_y perturbation kept drawing non-positive scales")


def apply_noise(f, cov: float, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative force noise f * (1 + e), e ~ N(0, cov). cov=0 copies."""
    f = np.asarray(f, dtype=float)
    if cov < 0.0:
        raise ValueError("noise cov must be >= 0")
    if cov == 0.0:
        return f.copy()
    return f * (1.0 + cov * rng.standard_normal(f.shape))


@dataclass(frozen=True)
class NoiseSpec:
    """Noise levels as (cov, record count) pairs, applied to train sets only."""

    levels: tuple[tuple[float, int], ...]

    def __post_init__(self):
        levels = tuple((float(c), int(n)) for c, n in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("need at least one noise level")
        for cov, count in levels:
            if cov < 0.0 or count < 0:
                raise ValueError("noise levels need cov >= 0 and count >= 0")

    @property
    def total_records(self) -> int:
        return sum(n for _, n in self.levels)

    @classmethod
    def default(cls) -> "NoiseSpec":
        return cls(levels=((0.0, 300_000), (0.002, 300_000),
                           (0.005, 300_000), (0.008, 100_000)))

    def scaled(self, total: int) -> "NoiseSpec":
        """Same covs with counts rescaled proportionally to sum to total."""
        if total < 1:
            raise ValueError("total must be >= 1")
        weights = np.array([n for _, n in self.levels], dtype=float)
        raw = weights * total / weights.sum()
        counts = np.floor(raw).astype(int)
        rem = total - counts.sum()
        # largest remainders win the leftover records
        order = np.argsort(-(raw - counts), kind="stable")
        for k in range(rem):
            counts[order[k]] += 1
        return NoiseSpec(levels=tuple((cov, int(c)) for (cov, _), c
                                      in zip(self.levels, counts)))


def generate_dataset(out_dir: str | Path, distributions: ParamDistributions,
                     history: LoadingHistory, n_param_sets: int, *,
                     variant: Variant | str = Variant.M_BWBN,
                     noise: NoiseSpec | None = None, split: float = 0.9,
                     seed: int = 0, substeps: int = 4,
                     u_y_cov: float = DEFAULT_UY_COV,
                     label: str = "", chunk_size: int = 1000) -> dict:
    """Generate a curve/parameter dataset and write records + manifest.

    The history's own u_y is a placeholder: each sampled set is loaded by
    the normalized amplitudes scaled with its own (perturbed) yield
    displacement. Sets whose simulation blows up are replaced by fresh
    draws so the requested counts are preserved. Returns the manifest dict.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variant = Variant(variant)
    noise = NoiseSpec.default() if noise is None else noise
    if n_param_sets < 2:
        raise ValueError("need at least 2 parameter sets")
    if not (0.0 < split < 1.0):
        raise ValueError("split must be in (0, 1)")
    n_train = int(round(split * n_param_sets))
    n_test = n_param_sets - n_train
    if n_train < 1 or n_test < 1:
        raise ValueError("split leaves an empty partition")
    if noise.total_records < 1:
        raise ValueError("noise spec produces no train records")
    for cov, count in noise.levels:
        if count > n_train:
            raise ValueError(
                f"noise level (cov={cov}) wants {count} records but only "
                f"{n_train} train sets exist")

    base = history.discretize_normalized()
    d = base.size - 1
    lo, hi = bounds_arrays()

    # pass 1: sample and simulate every set, streaming chunk by chunk into
    # a temporary float32 store of the raw (u, f) curves
    tmp_path = out_dir / "_curves.tmp.npy"
    curves = np.lib.format.open_memmap(tmp_path, mode="w+", dtype=np.float32,
                                       shape=(n_param_sets, d, 2))
    theta_all = np.empty((n_param_sets, 13))
    n_resampled = 0
    retry = 0
    for start in range(0, n_param_sets, chunk_size):
        stop = min(start + chunk_size, n_param_sets)
        idx = np.arange(start, stop)
        theta = np.empty((idx.size, 13))
        scale = np.empty(idx.size)
        for k, i in enumerate(idx):
            p = sample_params(distributions, np.random.default_rng([seed, 0, i]),
                              variant)
            theta[k] = p.to_vector()
            scale[k] = perturb_u_y(p.u_y, np.random.default_rng([seed, 1, i]),
                                   cov=u_y_cov)
        disp = scale[:, None] * base[None, :]
        f, _, _, failidx = simulate_batch(theta, disp, substeps=substeps)
        bad = np.flatnonzero(failidx >= 0)
        while bad.size:
            # replace failed sets with fresh draws, preserving counts
            for k in bad:
                if retry >= n_param_sets + _MAX_REJECTS:
                    raise SamplingError("too many simulation failures")
                p = sample_params(distributions,
                                  np.random.default_rng([seed, 4, retry]), variant)
                theta[k] = p.to_vector()
                scale[k] = perturb_u_y(p.u_y,
                                       np.random.default_rng([seed, 5, retry]),
                                       cov=u_y_cov)
                retry += 1
                n_resampled += 1
            disp_bad = scale[bad, None] * base[None, :]
            f_bad, _, _, fail_bad = simulate_batch(theta[bad], disp_bad,
                                                   substeps=substeps)
            f[bad] = f_bad
            failidx[bad] = fail_bad
            bad = bad[fail_bad >= 0]
        theta_all[start:stop] = theta
        curves[start:stop, :, 0] = disp[:, 1:].astype(np.float32)
        curves[start:stop, :, 1] = f[:, 1:].astype(np.float32)
    curves.flush()

    params_norm = minmax_normalize(theta_all, lo, hi).astype(np.float32)

    # per-level train subsets, selection order kept
    selections = []
    for lvl, (cov, count) in enumerate(noise.levels):
        perm = np.random.default_rng([seed, 2, lvl]).permutation(n_train)
        selections.append(perm[:count])

    record_floats = 2 * d + 13
    u_min = np.inf
    u_max = -np.inf
    f_min = np.inf
    f_max = -np.inf
    rec_path = out_dir / RECORDS_FILE
    with open(rec_path, "wb") as fh:
        r = 0
        buf = []
        for (cov, count), chosen in zip(noise.levels, selections):
            for local in chosen:
                i = int(local)  # train sets occupy the leading indices
                rec = np.empty(record_floats, dtype=np.float32)
                u_vals = curves[i, :, 0]
                f_vals = apply_noise(curves[i, :, 1], cov,
                                     np.random.default_rng([seed, 3, r])
                                     ).astype(np.float32)
                rec[0:2 * d:2] = u_vals
                rec[1:2 * d:2] = f_vals
                rec[2 * d:] = params_norm[i]
                u_min = min(u_min, float(u_vals.min()))
                u_max = max(u_max, float(u_vals.max()))
                f_min = min(f_min, float(f_vals.min()))
                f_max = max(f_max, float(f_vals.max()))
                buf.append(rec)
                r += 1
                if len(buf) >= chunk_size:
                    np.concatenate(buf).tofile(fh)
                    buf = []
        if buf:
            np.concatenate(buf).tofile(fh)
            buf = []
        train_bytes = noise.total_records * record_floats * 4
        for i in range(n_train, n_param_sets):
            rec = np.empty(record_floats, dtype=np.float32)
            rec[0:2 * d:2] = curves[i, :, 0]
            rec[1:2 * d:2] = curves[i, :, 1]
            rec[2 * d:] = params_norm[i]
            buf.append(rec)
            if len(buf) >= chunk_size:
                np.concatenate(buf).tofile(fh)
                buf = []
        if buf:
            np.concatenate(buf).tofile(fh)
    del curves
    tmp_path.unlink()

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "label": label,
        "variant": variant.value,
        "history": {
            "label": history.label,
            "amplitudes_uy": list(history.amplitudes),
            "step_size_uy": history.step_size,
        },
        "d": d,
        "seed": seed,
        "split": split,
        "substeps": substeps,
        "u_y_cov": u_y_cov,
        "n_param_sets": n_param_sets,
        "n_train_sets": n_train,
        "n_test_sets": n_test,
        "n_resampled": n_resampled,
        "noise_levels": [{"cov": c, "count": n} for c, n in noise.levels],
        "n_train_records": noise.total_records,
        "n_test_records": n_test,
        "record_floats": record_floats,
        "record_bytes": record_floats * 4,
        "records_file": RECORDS_FILE,
        "train_offset_bytes": 0,
        "test_offset_bytes": train_bytes,
        "dtype": "<f4",
        "layout": "u,f interleaved per step, then 13 bound-normalized parameters",
        "param_names": list(PARAM_NAMES),
        "param_lo": lo.tolist(),
        "param_hi": hi.tolist(),
        "u_range_m": [u_min, u_max],
        "f_range_mps2": [f_min, f_max],
    }
    with open(out_dir / MANIFEST_FILE, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(dataset_dir: str | Path) -> dict:
    with open(Path(dataset_dir) / MANIFEST_FILE) as fh:
        manifest = json.load(fh)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"unsupported dataset schema: {manifest.get('schema')!r}")
    return manifest


def read_records(dataset_dir: str | Path, partition: str = "train",
                 indices=None) -> tuple[np.ndarray, np.ndarray]:
    """Read records back as (curves (R, d, 2) float32, params (R, 13) float32).

    partition is "train" or "test"; indices optionally selects records
    within the partition.
    """
    dataset_dir = Path(dataset_dir)
    manifest = load_manifest(dataset_dir)
    d = manifest["d"]
    rec_floats = manifest["record_floats"]
    n_total = manifest["n_train_records"] + manifest["n_test_records"]
    raw = np.memmap(dataset_dir / manifest["records_file"], dtype="<f4",
                    mode="r", shape=(n_total, rec_floats))
    if partition == "train":
        block = raw[:manifest["n_train_records"]]
    elif partition == "test":
        block = raw[manifest["n_train_records"]:]
    else:
        raise ValueError("partition must be 'train' or 'test'")
    if indices is not None:
        block = block[np.asarray(indices)]
    block = np.array(block)
    curves = block[:, :2 * d].reshape(-1, d, 2)
    params = block[:, 2 * d:]
    return curves, params


def emit_histograms(dataset_dir: str | Path, out_csv: str | Path,
                    bins: int = 50) -> None:
    """Write per-parameter histogram counts over the distinct sampled sets.

    Bin edges span the admissible bounds exactly. Output columns:
    param, bin_lo, bin_hi, count.
    """
    manifest = load_manifest(dataset_dir)
    _, p_train = read_records(dataset_dir, "train")
    _, p_test = read_records(dataset_dir, "test")
    norm = np.unique(np.concatenate([p_train, p_test]), axis=0)
    lo = np.array(manifest["param_lo"])
    hi = np.array(manifest["param_hi"])
    values = minmax_denormalize(norm.astype(float), lo, hi)
    with open(out_csv, "w", newline="") as fh:
        fh.write("param,bin_lo,bin_hi,count\n")
        for j, name in enumerate(manifest["param_names"]):
            edges = np.linspace(lo[j], hi[j], bins + 1)
            counts, _ = np.histogram(values[:, j], bins=edges)
            for b in range(bins):
                fh.write(f"{name},{edges[b]:.9g},{edges[b + 1]:.9g},{counts[b]}\n")

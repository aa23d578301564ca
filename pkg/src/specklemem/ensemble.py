"""Monte Carlo engine for frequency-correlated Gaussian speckle fields.

The transmission amplitude t of one channel pair is modeled as a circular
Gaussian process over optical frequency.  Its covariance on a grid of
normalized offsets is built from the diffusive-slab field correlator

    h(x) = s / sinh(s),   s = (1 - i) sqrt(x) / 2,

whose squared modulus reproduces ``intensity_decay`` identically, so every
Gaussian moment of T = |t|^2 has a closed form to validate against.

Randomness is counter-based: realization r draws from a Philox stream with
counter (r << 128) | (tag << 64) under the master seed, so ensembles and
estimates are bit-identical for a fixed seed no matter how many workers
generate them.  Reductions always run in fixed realization order.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from .correlations import CorrelationCurve, intensity_decay
from .errors import (
    CovarianceModelError,
    DomainError,
    EstimationError,
    UnsupportedSamplingError,
)
from .photons import (
    QuantumState,
    sample_transmitted_counts,
    transmitted_variance_classical,
    transmitted_variance_quantum,
)

# Marker accepted in place of a QuantumState for technical-noise estimates.
CLASSICAL = "classical"

# Substream tags partitioning the Philox counter space per realization.
FIELD_STREAM = 0
COUNT_STREAM = 1
BOOT_STREAM = 2

_MIN_MOMENT_REALIZATIONS = 100
_MIN_RAYLEIGH_REALIZATIONS = 1000


def _checked_seed(seed) -> int:
    s = int(seed)
    if not 0 <= s < 2 ** 64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return s


def substream(seed, realization: int, tag: int = FIELD_STREAM) -> np.random.Generator:
    """Counter-based generator, independent for every (seed, realization, tag)."""
    counter = (int(realization) << 128) | (int(tag) << 64)
    return np.random.Generator(np.random.Philox(key=_checked_seed(seed), counter=counter))


def field_kernel(x) -> complex:
    """Complex field correlation at offset x >= 0; |kernel|^2 is intensity_decay."""
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"kernel offset must be finite and >= 0, got {x}")
    if x == 0.0:
        return 1.0 + 0.0j
    s = (1.0 - 1.0j) * (math.sqrt(x) / 2.0)
    try:
        return s / cmath.sinh(s)
    except OverflowError:
        return 0.0j


def build_field_covariance(grid, mean_t) -> np.ndarray:
    """Hermitian covariance of the transmission amplitudes on an offset grid.

    Entry (j, k) is mean_t * h(x_j - x_k), with the kernel conjugated for
    negative differences so the matrix is exactly Hermitian; the diagonal
    equals mean_t.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty 1-d array of offsets")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0.0):
        raise DomainError("grid offsets must be finite and >= 0")
    if np.any(np.diff(grid) < 0.0):
        raise DomainError("grid offsets must be ordered (non-decreasing)")
    q = float(mean_t)
    if not math.isfinite(q) or not 0.0 < q <= 1.0:
        raise DomainError(f"mean transmission must lie in (0, 1], got {mean_t}")
    k = grid.size
    cov = np.empty((k, k), dtype=complex)
    for j in range(k):
        for i in range(j + 1):
            h = q * field_kernel(grid[j] - grid[i])
            cov[j, i] = h
            cov[i, j] = h.conjugate()
    return cov


def _covariance_factor(cov: np.ndarray, mean_t: float) -> np.ndarray:
    """Lower-triangular factor of cov, clipping round-off indefiniteness."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(cov)
    tol = 1e-10 * mean_t
    if eigvals.min() < -tol:
        raise CovarianceModelError(
            f"covariance is indefinite (min eigenvalue {eigvals.min():.3e} "
            f"< -{tol:.3e}); the kernel is not consistent on this grid"
        )
    fixed = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.conj().T
    fixed[np.diag_indices_from(fixed)] += 1e-12 * mean_t
    fixed = 0.5 * (fixed + fixed.conj().T)
    return np.linalg.cholesky(fixed)


@dataclass
class SpeckleEnsemble:
    """R realizations of complex transmission amplitudes on a frequency grid.

    Row r holds one disorder realization; column k corresponds to grid
    offset x_k, with x_0 the reference frequency of all pair statistics.
    """

    amplitudes: np.ndarray
    grid: np.ndarray
    mean_t: float
    seed: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        self.grid = np.asarray(self.grid, dtype=float)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[1] != self.grid.size:
            raise DomainError("amplitudes must be (realizations, grid points)")

    @property
    def realizations(self) -> int:
        return int(self.amplitudes.shape[0])

    @cached_property
    def transmissions(self) -> np.ndarray:
        """Intensity transmission coefficients T = |t|^2, same shape as amplitudes."""
        return np.abs(self.amplitudes) ** 2

    def pair_offsets(self) -> np.ndarray:
        """Offsets of every grid point relative to the reference x_0."""
        return self.grid - self.grid[0]


def generate_ensemble(
    cov: np.ndarray,
    grid,
    mean_t,
    realizations: int,
    seed,
    workers: int = 1,
) -> SpeckleEnsemble:
    """Draw circular Gaussian amplitude vectors with the given covariance.

    Uses a triangular factorization of cov; numerically indefinite matrices
    (eigenvalues within round-off of zero) are clipped and jittered, anything
    worse raises CovarianceModelError.  The worker count changes only how the
    independent per-realization substreams are scheduled, never the output.
    """
    cov = np.asarray(cov, dtype=complex)
    grid = np.asarray(grid, dtype=float)
    k = grid.size
    if cov.shape != (k, k):
        raise DomainError(f"covariance must be {k}x{k} to match the grid")
    scale = float(np.abs(cov).max()) or 1.0
    if np.abs(cov - cov.conj().T).max() > 1e-12 * scale:
        raise DomainError("covariance must be Hermitian")
    r_total = int(realizations)
    if r_total < 1:
        raise DomainError(f"realizations must be >= 1, got {realizations}")
    seed = _checked_seed(seed)
    workers = max(1, int(workers))

    factor_t = _covariance_factor(cov, float(mean_t)).T.copy()
    root_half = math.sqrt(0.5)

    xi = np.empty((r_total, k), dtype=complex)

    def fill(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            raw = substream(seed, r, FIELD_STREAM).standard_normal(2 * k)
            xi[r] = (raw[:k] + 1j * raw[k:]) * root_half

    if workers == 1 or r_total < 2 * workers:
        fill(0, r_total)
    else:
        chunk = -(-r_total // workers)
        bounds = [(lo, min(lo + chunk, r_total)) for lo in range(0, r_total, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(fill, lo, hi) for lo, hi in bounds]:
                future.result()

    amplitudes = xi @ factor_t
    return SpeckleEnsemble(amplitudes=amplitudes, grid=grid, mean_t=float(mean_t), seed=seed)


def build_ensemble(grid, mean_t, realizations, seed, workers: int = 1) -> SpeckleEnsemble:
    """Covariance construction plus generation in one call."""
    cov = build_field_covariance(grid, mean_t)
    return generate_ensemble(cov, grid, mean_t, realizations, seed, workers=workers)


@dataclass(frozen=True)
class MomentRecord:
    """One empirical moment next to its Gaussian-theory prediction."""

    name: str
    offset: float | None
    empirical: float
    stderr: float
    theory: float

    @property
    def z(self) -> float:
        return (self.empirical - self.theory) / self.stderr

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "x": self.offset,
            "empirical": self.empirical,
            "stderr": self.stderr,
            "theory": self.theory,
            "z": self.z,
        }


@dataclass
class MomentReport:
    """Collection of moment records for one ensemble."""

    records: list[MomentRecord]
    realizations: int
    mean_t: float

    def max_abs_z(self) -> float:
        return max(abs(r.z) for r in self.records)

    def by_name(self, name: str) -> list[MomentRecord]:
        return [r for r in self.records if r.name == name]

    def to_dict(self) -> dict:
        return {
            "realizations": self.realizations,
            "mean_t": self.mean_t,
            "records": [r.to_dict() for r in self.records],
            "max_abs_z": self.max_abs_z(),
        }


def _mean_with_stderr(samples: np.ndarray) -> tuple[float, float]:
    n = samples.size
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n))


def _abs_sq_mean_jackknife(samples: np.ndarray) -> tuple[float, float]:
    """|mean(samples)|^2 with a leave-one-out jackknife standard error."""
    n = samples.size
    total = samples.sum()
    estimate = abs(total / n) ** 2
    loo = np.abs((total - samples) / (n - 1)) ** 2
    stderr = math.sqrt((n - 1) * float(np.var(loo)))
    return float(estimate), stderr


def estimate_moments(ens: SpeckleEnsemble) -> MomentReport:
    """Empirical transmission moments against circular-Gaussian predictions.

    Single-frequency moments <T^n> (reference column, theory n! mean_t^n),
    pair moments <T T'>, <T^2 T'>, <T^2 T'^2> and the field moment
    |<t* t'>|^2 for every grid pair (0, k).  Standard errors are jackknife
    estimates (which for plain means reduce to std / sqrt(R)).
    """
    r_total = ens.realizations
    if r_total < _MIN_MOMENT_REALIZATIONS:
        raise EstimationError(
            f"moment estimation needs >= {_MIN_MOMENT_REALIZATIONS} "
            f"realizations, got {r_total}"
        )
    q = ens.mean_t
    t = ens.transmissions
    t0 = t[:, 0]
    records: list[MomentRecord] = []

    emp, se = _mean_with_stderr(t0)
    records.append(MomentRecord("T_mean", None, emp, se, q))
    for n in (2, 3, 4):
        emp, se = _mean_with_stderr(t0 ** n)
        records.append(
            MomentRecord(f"T{n}", None, emp, se, math.factorial(n) * q ** n)
        )

    offsets = ens.pair_offsets()
    for k in range(ens.grid.size):
        x = float(offsets[k])
        c = intensity_decay(x)
        tk = t[:, k]
        emp, se = _mean_with_stderr(t0 * tk)
        records.append(MomentRecord("TT", x, emp, se, q * q * (1.0 + c)))
        emp, se = _mean_with_stderr(t0 * t0 * tk)
        records.append(MomentRecord("T2T", x, emp, se, 2.0 * q ** 3 * (1.0 + 2.0 * c)))
        emp, se = _mean_with_stderr(t0 * t0 * tk * tk)
        records.append(
            MomentRecord("T2T2", x, emp, se, 4.0 * q ** 4 * (1.0 + 4.0 * c + c * c))
        )
        emp, se = _abs_sq_mean_jackknife(np.conj(ens.amplitudes[:, 0]) * ens.amplitudes[:, k])
        records.append(MomentRecord("field_corr", x, emp, se, q * q * c))

    return MomentReport(records=records, realizations=r_total, mean_t=q)


@dataclass
class NoiseCorrelationEstimate:
    """Monte Carlo estimate of a noise correlation curve."""

    curve: CorrelationCurve
    mode: str
    state: QuantumState | str
    shots_per_realization: int | None
    n_clamped: int
    n_boot: int


def _per_realization_variances(
    ens: SpeckleEnsemble,
    state,
    mode: str,
    shots,
    seed,
    noise_scale: float,
) -> tuple[np.ndarray, int]:
    """Variance proxy v[r, k] for every realization and grid point."""
    t = ens.transmissions
    n_clamped = int(np.count_nonzero(t > 1.0))
    t = np.minimum(t, 1.0)

    if mode == "analytic_variance":
        if state == CLASSICAL:
            return transmitted_variance_classical(1.0, t, noise_scale), n_clamped
        if not isinstance(state, QuantumState):
            raise DomainError(f"state must be a QuantumState or {CLASSICAL!r}")
        return transmitted_variance_quantum(state, t), n_clamped

    if mode != "counting":
        raise DomainError(f"unknown estimation mode {mode!r}")
    if not isinstance(state, QuantumState):
        raise DomainError("counting mode needs a QuantumState input")
    if state.kind == "custom":
        raise UnsupportedSamplingError("counting mode cannot sample custom states")
    shots = int(shots) if shots is not None else 0
    if shots < 2:
        raise DomainError(f"counting mode needs shots >= 2, got {shots}")
    seed = _checked_seed(ens.seed if seed is None else seed)
    v = np.empty_like(t)
    for r in range(ens.realizations):
        rng = substream(seed, r, COUNT_STREAM)
        for k in range(t.shape[1]):
            counts = sample_transmitted_counts(state, t[r, k], shots, rng)
            v[r, k] = counts.var(ddof=1)
    return v, n_clamped


def estimate_noise_correlation(
    ens: SpeckleEnsemble,
    state,
    mode: str = "analytic_variance",
    shots: int | None = None,
    seed=None,
    noise_scale: float = 1.0,
    n_boot: int = 200,
) -> NoiseCorrelationEstimate:
    """Correlation of noise variances between the reference and each offset.

    Per realization the variance proxy is either the closed-form transmitted
    variance evaluated at T = |t|^2 (mode "analytic_variance") or the
    unbiased sample variance of drawn photon counts (mode "counting").  The
    curve value at x_k is  mean_r[v_0 v_k] / (mean_r[v_0] mean_r[v_k]) - 1,
    with bootstrap standard errors over realizations.  Transmission values
    above 1 (possible Gaussian tails near mean_t = 1) are clamped and
    counted in ``n_clamped``.
    """
    if ens.realizations < 2:
        raise EstimationError("correlation estimation needs >= 2 realizations")
    if n_boot < 2:
        raise DomainError(f"bootstrap needs >= 2 resamples, got {n_boot}")
    v, n_clamped = _per_realization_variances(ens, state, mode, shots, seed, noise_scale)

    prod = v[:, :1] * v
    means_v = v.mean(axis=0)
    values = prod.mean(axis=0) / (means_v[0] * means_v) - 1.0

    boot_seed = _checked_seed(ens.seed if seed is None else seed)
    brng = substream(boot_seed, 0, BOOT_STREAM)
    r_total = ens.realizations
    boot = np.empty((n_boot, v.shape[1]))
    for b in range(n_boot):
        idx = brng.integers(0, r_total, size=r_total)
        mv = v[idx].mean(axis=0)
        boot[b] = prod[idx].mean(axis=0) / (mv[0] * mv) - 1.0
    stderr = boot.std(axis=0, ddof=1)

    if state == CLASSICAL:
        label = "classical noise (MC)"
    else:
        label = f"{state.kind} fano={state.fano:g} (MC, {mode})"
    curve = CorrelationCurve(
        offsets=ens.pair_offsets(), values=values, stderr=stderr, label=label
    )
    return NoiseCorrelationEstimate(
        curve=curve,
        mode=mode,
        state=state,
        shots_per_realization=int(shots) if mode == "counting" else None,
        n_clamped=n_clamped,
        n_boot=int(n_boot),
    )


@dataclass(frozen=True)
class RayleighCheck:
    """Goodness of fit of the reference-column intensity to Rayleigh speckle."""

    statistic: float
    pvalue: float
    significance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "significance": self.significance,
            "passed": self.passed,
        }


def rayleigh_check(ens: SpeckleEnsemble, significance: float = 0.01) -> RayleighCheck:
    """Kolmogorov-Smirnov test of T at the reference offset against Exp(mean_t).

    Circular Gaussian fields imply exponentially distributed intensity, so a
    well-formed ensemble passes at the configured significance.
    """
    if ens.realizations < _MIN_RAYLEIGH_REALIZATIONS:
        raise EstimationError(
            f"Rayleigh check needs >= {_MIN_RAYLEIGH_REALIZATIONS} "
            f"realizations, got {ens.realizations}"
        )
    if not 0.0 < significance < 1.0:
        raise DomainError(f"significance must lie in (0, 1), got {significance}")
    result = stats.kstest(ens.transmissions[:, 0], "expon", args=(0.0, ens.mean_t))
    return RayleighCheck(
        statistic=float(result.statistic),
        pvalue=float(result.pvalue),
        significance=float(significance),
        passed=bool(result.pvalue > significance),
    )


def save_ensemble_csv(ens: SpeckleEnsemble, path) -> None:
    """Write the ensemble as text: one row per (realization, grid index).

    Leading comment lines carry the grid, mean transmission and seed so the
    file round-trips losslessly; floats use repr precision.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# mean_t={ens.mean_t!r}\n")
        fh.write(f"# seed={ens.seed}\n")
        fh.write("# grid=" + ",".join(repr(float(x)) for x in ens.grid) + "\n")
        fh.write("realization,grid_index,re,im\n")
        for r in range(ens.realizations):
            row = ens.amplitudes[r]
            for k in range(ens.grid.size):
                fh.write(f"{r},{k},{float(row[k].real)!r},{float(row[k].imag)!r}\n")


def load_ensemble_csv(path) -> SpeckleEnsemble:
    """Read an ensemble written by ``save_ensemble_csv``."""
    meta: dict[str, str] = {}
    rows: list[tuple[int, int, float, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            if line.startswith("realization"):
                continue
            r, k, re, im = line.split(",")
            rows.append((int(r), int(k), float(re), float(im)))
    try:
        grid = np.array([float(v) for v in meta["grid"].split(",")])
        mean_t = float(meta["mean_t"])
        seed = int(meta["seed"])
    except KeyError as exc:
        raise DomainError(f"ensemble file is missing metadata line {exc}") from exc
    if not rows:
        raise DomainError("ensemble file contains no amplitude rows")
    r_total = max(r for r, _, _, _ in rows) + 1
    amplitudes = np.zeros((r_total, grid.size), dtype=complex)
    for r, k, re, im in rows:
        amplitudes[r, k] = complex(re, im)
    return SpeckleEnsemble(amplitudes=amplitudes, grid=grid, mean_t=mean_t, seed=seed)

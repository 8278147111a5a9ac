"""Stochastic noise channels and ensemble statistics for walk experiments.

Decoherence is simulated by Monte Carlo unraveling: each realization draws
its own noise trajectory from an independent RNG stream, evolves unitarily
under the noisy walk, and the density matrix is recovered as the ensemble
average of the realization distributions. Three channels are supported:

- amplitude noise: the input intensity of realization r is scaled by
  max(0, 1 + amplitude_noise * g_r) with g_r standard normal. Distributions
  stay normalized; the weight only enters intensity statistics.
- phase noise: after every walk step each site acquires a fresh random
  phase exp(i phi) with phi ~ Normal(0, phase_noise^2), modeling optical
  path-length jitter.
- coin dephasing: with probability coin_dephasing per step the coin is
  projected in the up/down basis. The projection is unraveled as a
  conditional sign flip of the down component, which reproduces the
  projective channel exactly on the ensemble average.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SimulationError, ValidationError
from .lattice import SpinorField, WalkSpec, make_localized_state, position_distribution
from .topology import (
    _ring_distance,
    _window_mask,
    boundary_walk_experiment,
    domain_walls,
)
from .walk import step_amplitudes

DEGENERATE_SIGMA = 1e-9
PHOTON_FLOOR = 1e-12
# cap on precomputed noise samples per chunk, keeps peak memory near 256 MB
_CHUNK_BUDGET = 2**25

NOISE_KINDS = ("phase", "dephasing", "amplitude")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise channel strengths plus the sampling contract (seed, ensemble size)."""

    amplitude_noise: float = 0.0
    phase_noise: float = 0.0
    coin_dephasing: float = 0.0
    seed: int = 0
    realizations: int = 1

    def __post_init__(self):
        for name in ("amplitude_noise", "phase_noise"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise ValidationError(f"{name} must be a finite nonnegative std")
            object.__setattr__(self, name, v)
        p = float(self.coin_dephasing)
        if not np.isfinite(p) or not 0.0 <= p <= 1.0:
            raise ValidationError("coin_dephasing must be a probability in [0, 1]")
        object.__setattr__(self, "coin_dephasing", p)
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ValidationError("seed must fit an unsigned 64-bit integer")
        object.__setattr__(self, "seed", seed)
        r = int(self.realizations)
        if r < 1:
            raise ValidationError("realizations must be a positive count")
        object.__setattr__(self, "realizations", r)

    @property
    def is_quiet(self) -> bool:
        return (
            self.amplitude_noise == 0.0
            and self.phase_noise == 0.0
            and self.coin_dephasing == 0.0
        )


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for one realization, split as default_rng(SeedSequence([seed, index]))."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


@dataclass(frozen=True)
class NoisyEnsemble:
    """Realization distributions, their mean, and per-realization intensity weights."""

    averaged: np.ndarray
    distributions: np.ndarray
    weights: np.ndarray
    checkpoint_steps: tuple
    checkpoint_averaged: np.ndarray
    n_steps: int

    @property
    def realizations(self) -> int:
        return self.distributions.shape[0]

    def intensities(self) -> np.ndarray:
        """Per-realization site intensities, weight times distribution."""
        shape = (-1,) + (1,) * (self.distributions.ndim - 1)
        return self.weights.reshape(shape) * self.distributions


def _chunk_size(noise: NoiseSpec, n_steps: int, n_sites: int) -> int:
    per_realization = 1
    if noise.phase_noise > 0.0:
        per_realization = max(1, n_steps) * n_sites
    elif noise.coin_dephasing > 0.0:
        per_realization = max(1, n_steps)
    return max(1, min(noise.realizations, _CHUNK_BUDGET // per_realization, 4096))


def _ensemble_run(spec, noise, base, n_steps, ckpts, n_groups):
    """Shared engine: evolve the ensemble in chunks, accumulate in index order.

    Per realization r the stream realization_rng(seed, r) is consumed in a
    fixed order, and only for channels that are switched on:
      1. one standard normal for the intensity weight,
      2. n_steps uniforms deciding the dephasing events,
      3. n_steps sign draws, applied only on event steps,
      4. (n_steps, n_sites) standard normals for the phase profiles.
    Within a step the order is: protocol step, phase kicks, dephasing flip.
    Returns the final distributions, weights, and per-group checkpoint sums.
    """
    extent = spec.lattice.extent
    n_sites = int(np.prod(extent))
    n_real = noise.realizations

    p_input = (np.abs(base) ** 2).sum(axis=-1)
    ckpt_index = {step: i for i, step in enumerate(ckpts)}
    group_sums = np.zeros((n_groups, len(ckpts)) + extent)
    group_counts = np.zeros(n_groups, dtype=np.int64)
    dists = np.empty((n_real,) + extent)
    weights = np.empty(n_real)

    batch_shape = (1,) * len(extent)
    chunk = _chunk_size(noise, n_steps, n_sites)
    for lo in range(0, n_real, chunk):
        hi = min(n_real, lo + chunk)
        c = hi - lo
        w = np.ones(c)
        events = signs = phases = None
        if noise.coin_dephasing > 0.0:
            events = np.empty((c, n_steps), dtype=bool)
            signs = np.empty((c, n_steps))
        if noise.phase_noise > 0.0:
            phases = np.empty((c, n_steps, n_sites))
        for i, r in enumerate(range(lo, hi)):
            rng = realization_rng(noise.seed, r)
            if noise.amplitude_noise > 0.0:
                w[i] = max(0.0, 1.0 + noise.amplitude_noise * rng.standard_normal())
            if noise.coin_dephasing > 0.0:
                events[i] = rng.random(n_steps) < noise.coin_dephasing
                raw = 1.0 - 2.0 * rng.integers(0, 2, n_steps)
                signs[i] = np.where(events[i], raw, 1.0)
            if noise.phase_noise > 0.0:
                phases[i] = noise.phase_noise * rng.standard_normal((n_steps, n_sites))

        groups = np.arange(lo, hi, dtype=np.int64) * n_groups // n_real
        np.add.at(group_counts, groups, 1)

        amps = np.broadcast_to(base, (c,) + base.shape).copy()
        if 0 in ckpt_index:
            for g in np.unique(groups):
                group_sums[g, ckpt_index[0]] += int((groups == g).sum()) * p_input
        for t in range(n_steps):
            amps = step_amplitudes(amps, spec)
            if phases is not None:
                kick = np.exp(1j * phases[:, t].reshape((c,) + extent))
                amps = amps * kick[..., None]
            if signs is not None:
                amps[..., 1] *= signs[:, t].reshape((c,) + batch_shape)
            if t + 1 in ckpt_index:
                p = (np.abs(amps) ** 2).sum(axis=-1)
                for g in np.unique(groups):
                    group_sums[g, ckpt_index[t + 1]] += p[groups == g].sum(axis=0)
        dists[lo:hi] = (np.abs(amps) ** 2).sum(axis=-1)
        weights[lo:hi] = w
    return dists, weights, group_sums, group_counts


def noisy_evolve(
    spec: WalkSpec,
    noise: NoiseSpec,
    field: SpinorField,
    n_steps: int,
    checkpoints=(),
) -> NoisyEnsemble:
    """Evolve an ensemble of noisy walks and average over realizations.

    checkpoints is an optional collection of step counts at which the
    running ensemble mean is recorded alongside the final one.
    """
    if field.lattice != spec.lattice:
        raise ValidationError("field lattice does not match walk spec lattice")
    n_steps = int(n_steps)
    if n_steps < 0:
        raise ValidationError("n_steps must be nonnegative")
    ckpts = tuple(sorted({int(s) for s in checkpoints}))
    if ckpts and (ckpts[0] < 0 or ckpts[-1] > n_steps):
        raise ValidationError("checkpoints must lie within [0, n_steps]")

    base = np.asarray(field.amplitudes, dtype=np.complex128)
    dists, weights, group_sums, _ = _ensemble_run(
        spec, noise, base, n_steps, ckpts, n_groups=1
    )
    averaged = dists.sum(axis=0) / noise.realizations
    total = float(averaged.sum())
    if abs(total - 1.0) > 1e-9:
        raise SimulationError("internal: averaged distribution lost normalization")
    return NoisyEnsemble(
        averaged=averaged,
        distributions=dists,
        weights=weights,
        checkpoint_steps=ckpts,
        checkpoint_averaged=group_sums[0] / noise.realizations,
        n_steps=n_steps,
    )


def _distribution_std(p: np.ndarray) -> float:
    # total position std across site axes; the plain position std in 1D
    var = 0.0
    for coords in np.indices(p.shape).astype(float):
        mu = float((p * coords).sum())
        var += float((p * (coords - mu) ** 2).sum())
    return float(np.sqrt(var))


@dataclass(frozen=True)
class ScalingReport:
    """Spread-versus-steps series with the fitted power-law exponent."""

    n_values: tuple
    sigma: np.ndarray
    sigma_err: np.ndarray
    beta: float
    beta_err: float
    r_squared: float
    fit_window: tuple
    excluded: tuple

    def rows(self):
        return [
            (int(n), float(s), float(e))
            for n, s, e in zip(self.n_values, self.sigma, self.sigma_err)
        ]


def sigma_scaling(
    spec: WalkSpec,
    noise: NoiseSpec,
    field: SpinorField,
    n_values,
    fit_skip_fraction: float = 0.1,
) -> ScalingReport:
    """Fit beta in sigma_N proportional to N^beta over a list of step counts.

    The ensemble is evolved once to max(N) and the averaged distribution is
    read off at each checkpoint. The smallest fit_skip_fraction of the N
    values is excluded from the fit to suppress transients, as are any
    steps whose distribution is confined to a single site. sigma_err is a
    block estimate from eight realization groups when the ensemble allows.
    """
    ns = tuple(sorted({int(n) for n in n_values}))
    if len(ns) < 5:
        raise ValidationError("need at least 5 distinct step counts")
    if ns[0] < 1:
        raise ValidationError("step counts must be positive")
    if ns[-1] < 4 * ns[0]:
        raise ValidationError("step counts must span at least a factor of 4")

    if field.lattice != spec.lattice:
        raise ValidationError("field lattice does not match walk spec lattice")
    base = np.asarray(field.amplitudes, dtype=np.complex128)
    n_groups = 8 if noise.realizations >= 16 else 1
    _, _, group_sums, group_counts = _ensemble_run(
        spec, noise, base, ns[-1], ns, n_groups=n_groups
    )

    sigma = np.empty(len(ns))
    sigma_err = np.full(len(ns), np.nan)
    for i in range(len(ns)):
        mean_p = group_sums[:, i].sum(axis=0) / noise.realizations
        sigma[i] = _distribution_std(mean_p)
        if n_groups > 1:
            per_group = [
                _distribution_std(group_sums[g, i] / group_counts[g])
                for g in range(n_groups)
            ]
            sigma_err[i] = float(np.std(per_group, ddof=1) / np.sqrt(n_groups))

    n_skip = int(np.ceil(fit_skip_fraction * len(ns)))
    usable = np.ones(len(ns), dtype=bool)
    usable[:n_skip] = False
    degenerate = sigma < DEGENERATE_SIGMA
    excluded = tuple(int(n) for n, bad in zip(ns, degenerate) if bad)
    if excluded:
        warnings.warn(
            f"excluding N={list(excluded)} from the scaling fit: "
            "distribution confined to a single site"
        )
    usable &= ~degenerate
    if int(usable.sum()) < 2:
        raise SimulationError("not enough usable points for a scaling fit")

    x = np.log(np.array(ns, dtype=float)[usable])
    y = np.log(sigma[usable])
    if int(usable.sum()) > 2:
        (beta, intercept), cov = np.polyfit(x, y, 1, cov=True)
        beta_err = float(np.sqrt(cov[0, 0]))
    else:
        beta, intercept = np.polyfit(x, y, 1)
        beta_err = float("nan")
    resid = y - (beta * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r_squared = 1.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot

    fitted_n = np.array(ns)[usable]
    return ScalingReport(
        n_values=ns,
        sigma=sigma,
        sigma_err=sigma_err,
        beta=float(beta),
        beta_err=beta_err,
        r_squared=float(r_squared),
        fit_window=(int(fitted_n.min()), int(fitted_n.max())),
        excluded=excluded,
    )


@dataclass(frozen=True)
class RobustnessReport:
    """Retained boundary probability versus noise level for one channel."""

    kind: str
    levels: tuple
    retained_mean: np.ndarray
    retained_std: np.ndarray
    baseline: float
    monotone_nonincreasing: bool
    n_steps: int
    window: int

    def rows(self):
        return [
            (self.kind, float(l), float(m), float(s))
            for l, m, s in zip(self.levels, self.retained_mean, self.retained_std)
        ]


def _noise_for(kind: str, level: float, seed: int, realizations: int) -> NoiseSpec:
    if kind == "phase":
        return NoiseSpec(phase_noise=level, seed=seed, realizations=realizations)
    if kind == "dephasing":
        return NoiseSpec(coin_dephasing=level, seed=seed, realizations=realizations)
    return NoiseSpec(amplitude_noise=level, seed=seed, realizations=realizations)


def edge_robustness(
    spec: WalkSpec,
    levels,
    n_steps: int,
    kind: str = "phase",
    realizations: int = 64,
    seed: int = 0,
    window: int = 10,
    launch_site=None,
    launch_coin=(1.0, 1.0j),
) -> RobustnessReport:
    """Retained probability near a domain wall as a noise level is ramped.

    The walker is launched exactly as in boundary_walk_experiment; the zero
    level therefore reproduces its retained value. monotone_nonincreasing
    summarizes whether the mean degrades monotonically within error bars.
    """
    if kind not in NOISE_KINDS:
        raise ValidationError(
            f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}"
        )
    levels = tuple(float(v) for v in levels)
    if not levels:
        raise ValidationError("need at least one noise level")
    if any(not np.isfinite(v) or v < 0.0 for v in levels):
        raise ValidationError("noise levels must be finite and nonnegative")

    walls = domain_walls(spec)
    length = spec.lattice.extent[0]
    if launch_site is None:
        launch_site = int(np.ceil(walls[0]))
    wall = min(walls, key=lambda w: _ring_distance(launch_site, w, length))
    mask = _window_mask(length, wall, window)
    psi = make_localized_state(spec.lattice, launch_site, launch_coin)
    baseline = boundary_walk_experiment(
        spec, n_steps, launch_site=launch_site, launch_coin=launch_coin, window=window
    ).retained

    means = np.empty(len(levels))
    stds = np.empty(len(levels))
    for i, level in enumerate(levels):
        noise = _noise_for(kind, level, seed, realizations)
        ens = noisy_evolve(spec, noise, psi, n_steps)
        per = ens.distributions.reshape(noise.realizations, -1)[:, mask].sum(axis=1)
        means[i] = per.mean()
        stds[i] = per.std(ddof=1) if noise.realizations > 1 else 0.0

    slack = stds[1:] + stds[:-1]
    monotone = bool(np.all(np.diff(means) <= slack + 1e-12))
    return RobustnessReport(
        kind=kind,
        levels=levels,
        retained_mean=means,
        retained_std=stds,
        baseline=float(baseline),
        monotone_nonincreasing=monotone,
        n_steps=int(n_steps),
        window=int(window),
    )


@dataclass(frozen=True)
class IntensityHistogram:
    """Per-site histogram of realization intensities with count statistics."""

    bin_edges: np.ndarray
    counts: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    fano: np.ndarray
    realizations: int
    fitted: bool


def intensity_histogram(ensemble: NoisyEnsemble, bins: int = 32) -> IntensityHistogram:
    """Bin the per-site intensities across realizations.

    Count statistics (mean, variance, Fano factor) are reported only for
    ensembles of at least 100 realizations; smaller ensembles get the bare
    histogram. The Fano factor is left undefined at dark sites.
    """
    bins = int(bins)
    if bins < 1:
        raise ValidationError("bins must be positive")
    n_real = ensemble.realizations
    inten = ensemble.intensities().reshape(n_real, -1)
    n_sites = inten.shape[1]

    lo = float(inten.min())
    hi = float(inten.max())
    if not hi > lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.empty((n_sites, bins), dtype=np.int64)
    for s in range(n_sites):
        counts[s], _ = np.histogram(inten[:, s], bins=edges)

    fitted = n_real >= 100
    if fitted:
        mean = inten.mean(axis=0)
        variance = inten.var(axis=0, ddof=1)
        fano = np.full(n_sites, np.nan)
        bright = mean > PHOTON_FLOOR
        fano[bright] = variance[bright] / mean[bright]
    else:
        mean = np.full(n_sites, np.nan)
        variance = np.full(n_sites, np.nan)
        fano = np.full(n_sites, np.nan)
    return IntensityHistogram(
        bin_edges=edges,
        counts=counts,
        mean=mean,
        variance=variance,
        fano=fano,
        realizations=n_real,
        fitted=fitted,
    )

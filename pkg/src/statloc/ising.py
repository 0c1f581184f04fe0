"""Square-lattice Ising model as a product of per-edge factors.

The energy of a spin configuration is H = sum over nearest-neighbour edges of
(1 - s_i s_j): aligned pairs cost 0, anti-aligned pairs cost 2.  The
unnormalized weight exp(-C H) factorizes into one exp(-C (1 - s_i s_j)) term
per edge, which makes the model a FactorModel and every single-flip
probability ratio a purely local quantity.

Besides the exact enumeration path this module ships a specialized Metropolis
sampler.  It consumes the same uniform stream, in the same order, with the
same floating-point acceptance ratios as the generic sampler running on
``as_factor_model`` with ``SingleSiteFlip`` moves, so the two chains are
state-for-state identical; the specialized loop just skips the generic
dispatch overhead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from statloc.errors import CapacityError
from statloc.factors import Factor, FactorModel
from statloc.rng import DEFAULT_SEED, make_rng

SpinConfig = tuple  # of ints in {-1, +1}, row-major

EXACT_SITE_LIMIT = 24
# Above this many sites the sampler stops tallying per-configuration visit
# counts by default (the tally array has 2^n entries).
AUTO_COUNT_SITE_LIMIT = 20


@dataclass(frozen=True)
class IsingModel:
    """Finite square lattice with nonnegative coupling.

    ``boundary`` is "open" (default) or "periodic"; open matches a finite
    crystal surface, periodic exists for sampler stress tests.
    """

    width: int
    height: int
    coupling: float
    boundary: str = "open"

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be at least 1")
        if not self.coupling >= 0.0:
            raise ValueError("coupling must be nonnegative")
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be 'open' or 'periodic'")

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    def site(self, row: int, col: int) -> int:
        return row * self.width + col


@lru_cache(maxsize=None)
def _edges(width: int, height: int, boundary: str) -> tuple[tuple[int, int], ...]:
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()

    def add(a: int, b: int) -> None:
        key = (a, b) if a < b else (b, a)
        if a != b and key not in seen:
            seen.add(key)
            pairs.append(key)

    for r in range(height):
        for c in range(width):
            i = r * width + c
            if c + 1 < width:
                add(i, i + 1)
            elif boundary == "periodic":
                add(i, r * width)
            if r + 1 < height:
                add(i, i + width)
            elif boundary == "periodic":
                add(i, c)
    return tuple(pairs)


def edges(model: IsingModel) -> tuple[tuple[int, int], ...]:
    """Nearest-neighbour site pairs in canonical (row-major scan) order."""
    return _edges(model.width, model.height, model.boundary)


def _validate_spins(model: IsingModel, config: SpinConfig) -> None:
    if len(config) != model.n_sites:
        raise ValueError(
            f"configuration has {len(config)} spins, lattice has {model.n_sites} sites"
        )
    for k, s in enumerate(config):
        if s not in (-1, 1):
            raise ValueError(f"spin {s!r} at site {k} is not -1 or +1")


def hamiltonian(model: IsingModel, config: SpinConfig) -> int:
    """H = sum over edges of (1 - s_i s_j); even, between 0 and 2*edges."""
    _validate_spins(model, config)
    return sum(1 - config[i] * config[j] for i, j in edges(model))


def _edge_factor_fn(coupling: float):
    def fn(si: int, sj: int) -> float:
        return math.exp(-coupling * (1 - si * sj))

    return fn


def as_factor_model(model: IsingModel) -> FactorModel:
    """One factor exp(-C (1 - s_i s_j)) per edge; product = exp(-C H)."""
    fn = _edge_factor_fn(model.coupling)
    domains = ((1, -1),) * model.n_sites
    factors = tuple(Factor(support=pair, fn=fn) for pair in edges(model))
    return FactorModel(domains=domains, factors=factors)


def config_to_string(config: SpinConfig) -> str:
    """Row-major '+'/'-' string, e.g. (1, -1, 1) -> '+-+'."""
    return "".join("+" if s == 1 else "-" for s in config)


def string_to_config(text: str) -> SpinConfig:
    bad = set(text) - {"+", "-"}
    if bad:
        raise ValueError(f"spin string contains invalid characters {sorted(bad)}")
    return tuple(1 if ch == "+" else -1 for ch in text)


def magnetization(config: SpinConfig) -> float:
    """Mean spin, in [-1, 1]."""
    return sum(config) / len(config)


def _config_from_index(index: int, n: int) -> SpinConfig:
    # Bit (n-1-k) of the index encodes site k (1 = spin down), so array
    # position matches the itertools.product((1, -1), ...) enumeration order.
    return tuple(1 - 2 * ((index >> (n - 1 - k)) & 1) for k in range(n))


def _exact_weight_array(model: IsingModel) -> tuple[np.ndarray, float]:
    """Weights exp(-C H) for all 2^n configs in enumeration order, plus Z."""
    n = model.n_sites
    if n > EXACT_SITE_LIMIT:
        raise CapacityError(
            f"{n} sites exceed the {EXACT_SITE_LIMIT}-site exact-enumeration "
            "limit; use sampling instead"
        )
    total = 1 << n
    edge_list = edges(model)
    weights = np.empty(total, dtype=np.float64)
    shifts = n - 1 - np.arange(n, dtype=np.int64)
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        spins = 1 - 2 * ((idx[:, None] >> shifts) & 1)
        h = np.zeros(len(idx), dtype=np.int64)
        for i, j in edge_list:
            h += 1 - spins[:, i] * spins[:, j]
        weights[start : start + len(idx)] = np.exp(-model.coupling * h)
    z = math.fsum(weights.tolist())
    return weights, z


def exact_distribution(model: IsingModel) -> dict[SpinConfig, float]:
    """Full normalized distribution, keyed by spin tuple (<= 24 sites)."""
    weights, z = _exact_weight_array(model)
    n = model.n_sites
    probs = weights / z
    return {
        _config_from_index(index, n): p for index, p in enumerate(probs.tolist())
    }


def exact_mean_abs_magnetization(model: IsingModel) -> float:
    dist = exact_distribution(model)
    return math.fsum(p * abs(magnetization(cfg)) for cfg, p in dist.items())


def default_correlation_pairs(model: IsingModel) -> tuple[tuple[int, int], ...]:
    """Horizontal neighbour, vertical neighbour, and opposite corners."""
    pairs: list[tuple[int, int]] = []
    if model.width >= 2:
        pairs.append((0, 1))
    if model.height >= 2:
        pairs.append((0, model.width))
    far = model.n_sites - 1
    if far >= 1 and (0, far) not in pairs:
        pairs.append((0, far))
    return tuple(pairs)


@dataclass(frozen=True)
class PairStat:
    """Two-point correlation estimate for one site pair."""

    site_i: int
    site_j: int
    sampled: float
    stderr: float  # batch-means standard error (autocorrelation-robust)
    exact: float | None


@dataclass(frozen=True)
class IsingSampleSummary:
    model: IsingModel
    sweeps: int
    seed: int
    stream: int
    acceptance_rate: float
    mean_magnetization: float
    mean_abs_magnetization: float
    magnetization_histogram: dict[int, int]  # total spin -> sweep count
    correlations: tuple[PairStat, ...]
    tv_distance: float | None
    final_config: SpinConfig


def _batch_stderr(values: np.ndarray, n_batches: int = 100) -> float:
    n_batches = min(n_batches, len(values))
    if n_batches < 2:
        return math.nan
    usable = (len(values) // n_batches) * n_batches
    means = values[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def sample_ising(
    model: IsingModel,
    sweeps: int,
    seed: int = DEFAULT_SEED,
    stream: int = 0,
    initial: SpinConfig | None = None,
    pairs: tuple[tuple[int, int], ...] | None = None,
    compare_exact: bool | None = None,
) -> IsingSampleSummary:
    """Metropolis-sample the model and summarize per-sweep statistics.

    One sweep = width*height single-flip proposals.  Statistics are recorded
    once per sweep.  ``compare_exact=None`` tallies visit counts and the
    total-variation distance to the exact distribution whenever the lattice
    is small enough (<= 20 sites); True forces it (<= 24 sites), False skips.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    n = model.n_sites
    if pairs is None:
        pairs = default_correlation_pairs(model)
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"correlation pair ({i}, {j}) out of range")
    if compare_exact is None:
        compare_exact = n <= AUTO_COUNT_SITE_LIMIT

    if initial is None:
        spins = [1] * n
    else:
        _validate_spins(model, initial)
        spins = list(initial)

    # Per-site neighbours ordered by edge index, so the acceptance-ratio
    # product multiplies in exactly the generic sampler's factor order.
    by_site: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (i, j) in enumerate(edges(model)):
        by_site[i].append((k, j))
        by_site[j].append((k, i))
    ordered = [tuple(j for _, j in sorted(lst)) for lst in by_site]

    fn = _edge_factor_fn(model.coupling)
    f_anti = fn(1, -1)
    inv_f_anti = 1.0 / f_anti

    counts = np.zeros(1 << n, dtype=np.int64) if compare_exact else None
    bitmask = 0
    for k, s in enumerate(spins):
        if s == -1:
            bitmask |= 1 << (n - 1 - k)
    mag = sum(spins)
    hist: dict[int, int] = {}
    mag_total = 0
    abs_mag_total = 0
    pair_series = [np.empty(sweeps, dtype=np.float64) for _ in pairs]
    accepted = 0

    rng = make_rng(seed, stream)
    sweeps_per_block = max(1, (1 << 18) // (2 * n))
    done = 0
    while done < sweeps:
        m = min(sweeps_per_block, sweeps - done)
        u = rng.random(2 * n * m).tolist()
        t = 0
        for _ in range(m):
            for _ in range(n):
                site = int(u[t] * n)
                if site >= n:
                    site = n - 1
                t += 1
                s_i = spins[site]
                ratio = 1.0
                for j in ordered[site]:
                    ratio *= f_anti if s_i == spins[j] else inv_f_anti
                if u[t] < ratio:
                    spins[site] = -s_i
                    bitmask ^= 1 << (n - 1 - site)
                    mag -= 2 * s_i
                    accepted += 1
                t += 1
            if counts is not None:
                counts[bitmask] += 1
            hist[mag] = hist.get(mag, 0) + 1
            mag_total += mag
            abs_mag_total += abs(mag)
            for p, (i, j) in enumerate(pairs):
                pair_series[p][done] = spins[i] * spins[j]
            done += 1

    exact_dist = exact_distribution(model) if compare_exact else None
    tv = None
    if counts is not None and exact_dist is not None:
        # dict insertion order is the enumeration order, which matches the
        # bitmask indexing of `counts`
        exact_probs = np.fromiter(exact_dist.values(), dtype=np.float64, count=1 << n)
        tv = float(0.5 * np.abs(counts / sweeps - exact_probs).sum())

    stats = []
    for p, (i, j) in enumerate(pairs):
        exact_val = None
        if exact_dist is not None:
            exact_val = math.fsum(
                prob * cfg[i] * cfg[j] for cfg, prob in exact_dist.items()
            )
        stats.append(
            PairStat(
                site_i=i,
                site_j=j,
                sampled=float(pair_series[p].mean()),
                stderr=_batch_stderr(pair_series[p]),
                exact=exact_val,
            )
        )

    return IsingSampleSummary(
        model=model,
        sweeps=sweeps,
        seed=seed,
        stream=stream,
        acceptance_rate=accepted / (sweeps * n),
        mean_magnetization=mag_total / (sweeps * n),
        mean_abs_magnetization=abs_mag_total / (sweeps * n),
        magnetization_histogram=dict(sorted(hist.items())),
        correlations=tuple(stats),
        tv_distance=tv,
        final_config=tuple(spins),
    )


def two_point_correlation(
    model: IsingModel,
    site_i: int,
    site_j: int,
    source: str = "exact",
    sweeps: int = 0,
    seed: int = DEFAULT_SEED,
    stream: int = 0,
) -> float:
    """E[s_i s_j], exactly (enumeration) or from a sampled chain."""
    n = model.n_sites
    if not (0 <= site_i < n and 0 <= site_j < n):
        raise ValueError("site index out of range")
    if source == "exact":
        dist = exact_distribution(model)
        return math.fsum(p * cfg[site_i] * cfg[site_j] for cfg, p in dist.items())
    if source == "samples":
        if sweeps < 1:
            raise ValueError("samples mode requires sweeps >= 1")
        summary = sample_ising(
            model,
            sweeps,
            seed=seed,
            stream=stream,
            pairs=((site_i, site_j),),
            compare_exact=False,
        )
        return summary.correlations[0].sampled
    raise ValueError("source must be 'exact' or 'samples'")

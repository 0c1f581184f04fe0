"""Product-of-local-factors models over finite per-site domains.

A :class:`FactorModel` assigns every global configuration an unnormalized
weight equal to the product of its factor values; normalizing by the sum over
all configurations (the partition sum) gives the configuration probability.
Because the weight is a product of local terms, the probability ratio of two
configurations differing only on a region is computable from the factors
touching that region -- the statistical-locality property that
:func:`local_ratio` implements and the test suite audits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Iterator, Sequence

from statloc.errors import CapacityError, DegenerateModelError, ZeroWeightError

Configuration = tuple  # one value per site, indexed by site

DEFAULT_ENUMERATION_CAP = 2**24

# Below this, nonzero factor values force log-space accumulation so the
# product survives where naive multiplication would underflow.
_LOG_SPACE_THRESHOLD = 1e-300


@dataclass(frozen=True)
class Factor:
    """A nonnegative local weight term.

    ``fn`` receives the configuration values at ``support`` (in support
    order) and must depend on nothing else.
    """

    support: tuple[int, ...]
    fn: Callable[..., float]

    def value(self, config: Configuration) -> float:
        return self.fn(*(config[i] for i in self.support))


@dataclass(frozen=True)
class FactorModel:
    """A finite configuration space with a product-form probability weight.

    ``domains[i]`` lists the allowed values at site ``i``; sites are the
    indices ``0..len(domains)-1``.  Instances are immutable and safe to share
    across threads.
    """

    domains: tuple[tuple[Any, ...], ...]
    factors: tuple[Factor, ...]

    def __post_init__(self) -> None:
        n = len(self.domains)
        for k, factor in enumerate(self.factors):
            bad = [i for i in factor.support if not 0 <= i < n]
            if bad:
                raise ValueError(f"factor {k} supports unknown sites {bad}")
        for i, dom in enumerate(self.domains):
            if len(dom) == 0:
                raise ValueError(f"site {i} has an empty domain")

    @property
    def n_sites(self) -> int:
        return len(self.domains)

    def n_configurations(self) -> int:
        return math.prod(len(dom) for dom in self.domains)

    @cached_property
    def factors_by_site(self) -> tuple[tuple[int, ...], ...]:
        """For each site, the indices of the factors reading it."""
        by_site: list[list[int]] = [[] for _ in range(self.n_sites)]
        for k, factor in enumerate(self.factors):
            for i in factor.support:
                by_site[i].append(k)
        return tuple(tuple(ks) for ks in by_site)

    def validate_config(self, config: Configuration) -> None:
        if len(config) != self.n_sites:
            raise ValueError(
                f"configuration has {len(config)} values, model has {self.n_sites} sites"
            )
        for i, value in enumerate(config):
            if value not in self.domains[i]:
                raise ValueError(f"value {value!r} at site {i} is outside its domain")


@dataclass(frozen=True)
class Region:
    """A site subset together with its factor closure.

    The closure adds every site that shares a factor with the region; the
    probability ratio of two configurations differing only on the region is
    computable from configuration values inside the closure.
    """

    sites: frozenset[int]

    def closure(self, model: FactorModel) -> frozenset[int]:
        closed = set(self.sites)
        for k in touched_factors(model, self.sites):
            closed.update(model.factors[k].support)
        return frozenset(closed)


def touched_factors(model: FactorModel, region: Sequence[int] | frozenset[int]) -> list[int]:
    """Indices of factors whose support intersects ``region``, ascending."""
    seen: set[int] = set()
    for i in region:
        seen.update(model.factors_by_site[i])
    return sorted(seen)


def differing_region(config_a: Configuration, config_b: Configuration) -> frozenset[int]:
    if len(config_a) != len(config_b):
        raise ValueError("configurations have different lengths")
    return frozenset(i for i, (a, b) in enumerate(zip(config_a, config_b)) if a != b)


def _product(values: list[float]) -> float:
    out = 1.0
    tiny = False
    for v in values:
        if v < 0.0 or math.isnan(v):
            raise ValueError(f"factor returned invalid weight {v!r}")
        if v == 0.0:
            return 0.0
        if v < _LOG_SPACE_THRESHOLD:
            tiny = True
        out *= v
    if tiny or out == 0.0:
        return math.exp(math.fsum(math.log(v) for v in values))
    return out


def config_weight(model: FactorModel, config: Configuration, *, validate: bool = True) -> float:
    """Unnormalized weight: the product of all factor values (0 if any is 0)."""
    if validate:
        model.validate_config(config)
    return _product([f.value(config) for f in model.factors])


def config_log_weight(model: FactorModel, config: Configuration, *, validate: bool = True) -> float:
    """log of :func:`config_weight`; ``-inf`` when any factor is zero."""
    if validate:
        model.validate_config(config)
    total = 0.0
    for factor in model.factors:
        v = factor.value(config)
        if v < 0.0 or math.isnan(v):
            raise ValueError(f"factor returned invalid weight {v!r}")
        if v == 0.0:
            return -math.inf
        total += math.log(v)
    return total


def enumerate_configurations(
    model: FactorModel, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[Configuration]:
    """Yield every configuration; refuses spaces larger than ``cap``."""
    count = model.n_configurations()
    if count > cap:
        raise CapacityError(
            f"{count} configurations exceed the enumeration cap {cap}; "
            "use sampling instead"
        )
    return itertools.product(*model.domains)


def partition_sum(model: FactorModel, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Exact sum of ``config_weight`` over the whole configuration space."""
    return math.fsum(
        config_weight(model, config, validate=False)
        for config in enumerate_configurations(model, cap)
    )


def probability(
    model: FactorModel, config: Configuration, cap: int = DEFAULT_ENUMERATION_CAP
) -> float:
    """Normalized configuration probability ``weight / partition_sum``."""
    w = config_weight(model, config)
    z = partition_sum(model, cap)
    if z <= 0.0:
        raise DegenerateModelError("partition sum is zero; no positive-weight configuration")
    return w / z


def local_ratio(model: FactorModel, config_a: Configuration, config_b: Configuration) -> float:
    """probability(a) / probability(b) from the factors around the difference.

    Only factors whose support intersects the differing region are evaluated;
    everything else cancels between numerator and denominator.  Identical
    configurations give 1.0.  Raises :class:`ZeroWeightError` if a touched
    factor vanishes on ``config_b``.
    """
    model.validate_config(config_a)
    model.validate_config(config_b)
    region = differing_region(config_a, config_b)
    if not region:
        return 1.0
    ratio = 1.0
    log_ratio = 0.0
    use_logs = False
    for k in touched_factors(model, region):
        factor = model.factors[k]
        va = factor.value(config_a)
        vb = factor.value(config_b)
        if vb == 0.0:
            raise ZeroWeightError(
                f"factor {k} is zero on the denominator configuration"
            )
        if va == 0.0:
            return 0.0
        if min(va, vb) < _LOG_SPACE_THRESHOLD:
            use_logs = True
        ratio *= va / vb
        log_ratio += math.log(va) - math.log(vb)
    return math.exp(log_ratio) if use_logs else ratio

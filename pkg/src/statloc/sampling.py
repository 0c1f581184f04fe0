"""Metropolis sampling for factor models.

The sampler never evaluates a global weight: each proposal is accepted or
rejected from the ratio of the factors touching the changed sites, so one
step costs O(local factors) regardless of lattice size.

Uniform-draw contract (relied on by exactness tests): every proposal consumes
the move set's draws first, then exactly one acceptance uniform, in that
order, whether or not the proposal is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Protocol

from statloc.errors import MoveError
from statloc.factors import (
    Configuration,
    FactorModel,
    config_weight,
    differing_region,
    touched_factors,
)
from statloc.rng import UniformBuffer, make_rng


class MoveSet(Protocol):
    """Proposal kernel for the Metropolis sampler.

    Implementations must be symmetric (propose(a)->b as often as
    propose(b)->a) and connect the positive-weight configurations.
    """

    def initial(self, model: FactorModel) -> Configuration: ...

    def propose(
        self, model: FactorModel, config: Configuration, uniforms: UniformBuffer
    ) -> Configuration: ...


@dataclass(frozen=True)
class SingleSiteFlip:
    """Pick a site uniformly, then replace its value.

    Two-value domains flip deterministically (one uniform per proposal);
    larger domains resample uniformly among the other values (two uniforms).
    """

    def initial(self, model: FactorModel) -> Configuration:
        return tuple(dom[0] for dom in model.domains)

    def propose(
        self, model: FactorModel, config: Configuration, uniforms: UniformBuffer
    ) -> Configuration:
        n = model.n_sites
        site = min(int(uniforms.next() * n), n - 1)
        dom = model.domains[site]
        if len(dom) == 2:
            new = dom[1] if config[site] == dom[0] else dom[0]
        elif len(dom) == 1:
            new = dom[0]
        else:
            others = [v for v in dom if v != config[site]]
            k = min(int(uniforms.next() * len(others)), len(others) - 1)
            new = others[k]
        return config[:site] + (new,) + config[site + 1 :]


def metropolis_sample(
    model: FactorModel,
    moves: MoveSet,
    n_steps: int,
    seed: int,
    stream: int = 0,
    initial: Configuration | None = None,
) -> Iterator[Configuration]:
    """Yield the chain state after each of ``n_steps`` Metropolis proposals.

    Deterministic in (model, moves, n_steps, seed, stream).  The start state
    must have positive weight; rejected proposals re-yield the current state.
    """
    uniforms = UniformBuffer(make_rng(seed, stream))
    if initial is None:
        config = moves.initial(model)
    else:
        config = tuple(initial)
    model.validate_config(config)
    if config_weight(model, config, validate=False) <= 0.0:
        raise ValueError("initial configuration has zero weight")

    for _ in range(n_steps):
        proposal = moves.propose(model, config, uniforms)
        region = differing_region(proposal, config)
        for i in region:
            if proposal[i] not in model.domains[i]:
                raise MoveError(
                    f"move produced out-of-domain value {proposal[i]!r} at site {i}"
                )
        ratio = 1.0
        for k in touched_factors(model, region):
            factor = model.factors[k]
            va = factor.value(proposal)
            if va == 0.0:
                ratio = 0.0
                break
            ratio *= va / factor.value(config)
        if uniforms.next() < ratio:
            config = proposal
        yield config

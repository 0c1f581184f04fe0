"""Trajectory ensembles expressed as an explicit FactorModel.

Sites are the lattice edges; the value at an edge is the set of particle
tokens occupying it (at most one per photon).  A token is (pair label, wing,
result), where the result is None before the photon's measurement and the
outcome sign afterwards.  One factor per vertex reads only the at-most-four
incident edges and enforces the whole dynamics locally:

- a source vertex must emit exactly its pair's two tokens (right wing on the
  'R' edge, left wing on the 'L' edge, no result yet);
- every arriving token must either depart on one outgoing edge (weight
  1-epsilon straight, epsilon on a switch) or annihilate here;
- a token arriving at its own wing's detector line without a result must
  leave carrying one (either sign, weight 1); elsewhere the result is
  carried unchanged;
- annihilating tokens pair up, each pair weighted by the annihilation rule;
  tokens without results cannot annihilate, and a token with no outgoing
  edge left (lattice boundary) that does not annihilate zeroes the weight.

Positive-weight configurations of this model correspond exactly to valid
trajectory configurations with the same weights, so the weight-core
``local_ratio`` machinery applies verbatim: the probability ratio of two
trajectory ensembles differing in a bounded spacetime region is computable
from the vertex factors meeting that region.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from statloc.bell.experiment import (
    AnnihilationWeight,
    ExperimentSpec,
    TrajectoryConfig,
    Vector,
    first_crossing,
    scale,
)
from statloc.bell.lattice import (
    DiamondLattice,
    Edge,
    Vertex,
    coord_d,
    step,
)
from statloc.errors import SpecError
from statloc.factors import Configuration, Factor, FactorModel

Token = tuple[int, str, int | None]  # (pair label, wing 'r'|'l', result)
EdgeState = frozenset  # of Tokens

_RESULT_ORDER = {None: 0, 1: 1, -1: 2}


def _token_key(token: Token) -> tuple:
    pair, wing, result = token
    return (pair, wing, _RESULT_ORDER[result])


def edge_domain(pair_labels: tuple[int, ...]) -> tuple[EdgeState, ...]:
    """Every occupation state: any subset of photons, one token slot each."""
    photons = [(pair, wing) for pair in pair_labels for wing in ("r", "l")]
    states: list[EdgeState] = []
    for count in range(len(photons) + 1):
        for chosen in itertools.combinations(photons, count):
            for results in itertools.product((None, 1, -1), repeat=count):
                state = frozenset(
                    (pair, wing, result)
                    for (pair, wing), result in zip(chosen, results)
                )
                states.append(state)
    states.sort(key=lambda s: (len(s), sorted(map(_token_key, s))))
    return tuple(states)


def _matchings(tokens: list[Token]):
    """All ways to partition an even-sized token list into pairs."""
    if not tokens:
        yield ()
        return
    head = tokens[0]
    for k in range(1, len(tokens)):
        rest = tokens[1:k] + tokens[k + 1 :]
        for sub in _matchings(rest):
            yield ((head, tokens[k]),) + sub


@dataclass(frozen=True)
class TrajectoryFieldModel:
    """A trajectory ensemble in product-of-local-factors form."""

    lattice: DiamondLattice
    sources: tuple[tuple[Vertex, int], ...]  # (vertex, pair label)
    detector_right: int
    detector_left: int
    epsilon: float
    rule: AnnihilationWeight
    a_meas: Vector
    b_meas: Vector
    model: FactorModel
    edge_list: tuple[Edge, ...]

    @classmethod
    def from_experiment(cls, spec: ExperimentSpec) -> "TrajectoryFieldModel":
        return build_field_model(
            lattice=spec.lattice,
            sources=((spec.source, spec.pair_label),),
            detector_right=spec.detector_right,
            detector_left=spec.detector_left,
            epsilon=spec.epsilon,
            rule=spec.rule,
            a_meas=spec.a_meas,
            b_meas=spec.b_meas,
        )

    def edge_site(self, edge: Edge) -> int:
        return self.lattice.edge_index[edge]

    def empty_config(self) -> Configuration:
        return (frozenset(),) * len(self.edge_list)

    def result_vector(self, token: Token) -> Vector:
        pair, wing, result = token
        if result is None:
            raise ValueError("token carries no result")
        return scale(result, self.a_meas if wing == "r" else self.b_meas)

    def place_path(
        self,
        edge_tokens: list[set],
        source: Vertex,
        moves: str,
        pair: int,
        wing: str,
        outcome: int,
    ) -> None:
        """Lay one photon's tokens along its path (results after crossing)."""
        d_line = self.detector_right if wing == "r" else self.detector_left
        crossing = first_crossing(source, moves, d_line)
        if crossing is None or crossing >= len(moves):
            raise ValueError(
                "path must cross its detector line strictly before its end"
            )
        vertex = source
        for j, move in enumerate(moves):
            result = outcome if j >= crossing else None
            edge_tokens[self.edge_site((vertex, move))].add((pair, wing, result))
            vertex = step(vertex, move)

    def trajectory_config(self, config: TrajectoryConfig) -> Configuration:
        """Embed a single-pair trajectory configuration as edge states."""
        if len(self.sources) != 1:
            raise ValueError("single-pair embedding requires exactly one source")
        (source, pair), = self.sources
        if config.pair_label != pair:
            raise ValueError("configuration pair label does not match the source")
        edge_tokens: list[set] = [set() for _ in self.edge_list]
        self.place_path(
            edge_tokens, source, config.right_moves, pair, "r", config.alpha
        )
        self.place_path(
            edge_tokens, source, config.left_moves, pair, "l", config.beta
        )
        return tuple(frozenset(tokens) for tokens in edge_tokens)


def build_field_model(
    lattice: DiamondLattice,
    sources: tuple[tuple[Vertex, int], ...],
    detector_right: int,
    detector_left: int,
    epsilon: float,
    rule: AnnihilationWeight,
    a_meas: Vector,
    b_meas: Vector,
) -> TrajectoryFieldModel:
    pair_labels = tuple(pair for _, pair in sources)
    if len(set(pair_labels)) != len(pair_labels):
        raise SpecError("sources must carry distinct pair labels")
    if len({vertex for vertex, _ in sources}) != len(sources):
        raise SpecError("sources must occupy distinct vertices")
    source_pair = dict(sources)
    for vertex, _ in sources:
        if not lattice.contains(vertex):
            raise SpecError(f"source {vertex} lies outside the lattice")
        if len(lattice.out_edges(vertex)) != 2:
            raise SpecError(
                f"source {vertex} sits on the lattice boundary and cannot emit"
            )

    edge_list = lattice.edges
    edge_index = lattice.edge_index
    domain = edge_domain(tuple(sorted(set(pair_labels))))
    straight = 1.0 - epsilon

    def own_line(wing: str) -> int:
        return detector_right if wing == "r" else detector_left

    def result_vector(token: Token) -> Vector:
        pair, wing, result = token
        return scale(result, a_meas if wing == "r" else b_meas)

    def couple_weight(t1: Token, t2: Token) -> float:
        # annihilation rule arguments: right-wing token first; for same-wing
        # encounters (cross-pair only) order by pair label
        if (t1[1], t2[1]) == ("l", "r") or (t1[1] == t2[1] and t1[0] > t2[0]):
            t1, t2 = t2, t1
        return rule.weight(
            t1[0], t2[0], result_vector(t1), result_vector(t2), a_meas, b_meas
        )

    def make_factor(vertex: Vertex) -> Factor:
        in_pairs = [(edge, edge[1]) for edge in lattice.in_edges(vertex)]
        out_pairs = [(edge, edge[1]) for edge in lattice.out_edges(vertex)]
        layout = [("in", move) for _, move in in_pairs] + [
            ("out", move) for _, move in out_pairs
        ]
        support = tuple(
            edge_index[edge] for edge, _ in in_pairs + out_pairs
        )
        emitted_pair = source_pair.get(vertex)
        d_here = coord_d(vertex)

        def fn(*states: EdgeState) -> float:
            arrivals: dict[tuple[int, str], tuple[Token, str]] = {}
            departures: dict[tuple[int, str], tuple[Token, str]] = {}
            for (role, move), state in zip(layout, states):
                book = arrivals if role == "in" else departures
                for token in state:
                    identity = (token[0], token[1])
                    if identity in book:
                        return 0.0  # one photon cannot ride two edges at once
                    book[identity] = (token, move)

            if emitted_pair is not None:
                for wing, move in (("r", "R"), ("l", "L")):
                    identity = (emitted_pair, wing)
                    if identity in arrivals:
                        return 0.0  # nothing existed before the emission
                    entry = departures.pop(identity, None)
                    if entry is None or entry[0][2] is not None or entry[1] != move:
                        return 0.0  # emission is mandatory and unlabeled

            weight = 1.0
            leftover: list[Token] = []
            for identity, (tok_in, dir_in) in arrivals.items():
                entry = departures.pop(identity, None)
                if entry is None:
                    leftover.append(tok_in)
                    continue
                tok_out, dir_out = entry
                if tok_in[2] is None and d_here == own_line(tok_in[1]):
                    if tok_out[2] is None:
                        return 0.0  # first crossing must record an outcome
                elif tok_out[2] != tok_in[2]:
                    return 0.0  # results change only at the measurement
                weight *= straight if dir_in == dir_out else epsilon
            if departures:
                return 0.0  # departing tokens must arrive or be emitted here

            if leftover:
                if len(leftover) % 2 or any(t[2] is None for t in leftover):
                    return 0.0  # annihilation is pairwise, after measurement
                leftover.sort(key=_token_key)
                total = 0.0
                for matching in _matchings(leftover):
                    product = 1.0
                    for t1, t2 in matching:
                        product *= couple_weight(t1, t2)
                    total += product
                weight *= total
            return weight

        return Factor(support=support, fn=fn)

    factors = tuple(make_factor(vertex) for vertex in lattice.vertices())
    model = FactorModel(
        domains=(domain,) * len(edge_list),
        factors=factors,
    )
    return TrajectoryFieldModel(
        lattice=lattice,
        sources=tuple(sources),
        detector_right=detector_right,
        detector_left=detector_left,
        epsilon=epsilon,
        rule=rule,
        a_meas=tuple(a_meas),
        b_meas=tuple(b_meas),
        model=model,
        edge_list=edge_list,
    )

"""Multi-pair scenes: two sources sharing one pair of detector lines.

The only physics the pair label adds over a single experiment is exclusion:
an annihilation between photons of different pairs carries delta_ij = 0
under the canonical rule.  A two-source scene makes that checkable
exhaustively -- four photons, three ways to pair them up at annihilation,
every geometry and labeling enumerable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from statloc.bell.experiment import (
    AnnihilationWeight,
    SingletAnnihilation,
    Vector,
    _check_unit,
    _wing_geometry_weight,
    _wing_paths,
    scale,
)
from statloc.bell.field import TrajectoryFieldModel, build_field_model
from statloc.bell.lattice import DiamondLattice, Vertex, coord_d, coord_t, step
from statloc.errors import CapacityError, SpecError
from statloc.factors import DEFAULT_ENUMERATION_CAP

# photon index -> (source attribute, wing); pairs 0 and 1 in order
PHOTON_WINGS = ("r", "l", "r", "l")

# the three ways four photons can pair up at annihilation
PAIRINGS = (
    ((0, 1), (2, 3)),  # each pair annihilates with itself
    ((0, 3), (2, 1)),  # wings swapped across pairs
    ((0, 2), (1, 3)),  # same-wing encounters
)


@dataclass(frozen=True)
class TwoSourceScene:
    extent: int
    source_a: Vertex  # emits pair 0
    source_b: Vertex  # emits pair 1
    detector_right: int
    detector_left: int
    a_meas: Vector
    b_meas: Vector
    epsilon: float
    rule: AnnihilationWeight = SingletAnnihilation()

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_a", tuple(self.source_a))
        object.__setattr__(self, "source_b", tuple(self.source_b))
        object.__setattr__(self, "a_meas", tuple(self.a_meas))
        object.__setattr__(self, "b_meas", tuple(self.b_meas))
        lattice = DiamondLattice(self.extent)
        if self.source_a == self.source_b:
            raise SpecError("the two sources must occupy distinct vertices")
        _check_unit(self.a_meas, "a_meas")
        _check_unit(self.b_meas, "b_meas")
        if not 0.0 < self.epsilon < 1.0:
            raise SpecError("epsilon must be strictly between 0 and 1")
        if self.detector_left >= self.detector_right:
            raise SpecError("left detector line must lie left of the right one")
        for name, source in (("a", self.source_a), ("b", self.source_b)):
            if not lattice.contains(source):
                raise SpecError(f"source {name} lies outside the lattice")
            d_src = coord_d(source)
            if d_src in (self.detector_right, self.detector_left):
                raise SpecError(f"source {name} must not sit on a detector line")
            for d_line in (self.detector_right, self.detector_left):
                if coord_t(source) + abs(d_line - d_src) > self.extent:
                    raise SpecError(
                        f"a detector line is outside source {name}'s future cone"
                    )

    @property
    def sources(self) -> tuple[tuple[Vertex, int], ...]:
        return ((self.source_a, 0), (self.source_b, 1))

    def photon_source(self, photon: int) -> Vertex:
        return self.source_a if photon < 2 else self.source_b

    def photon_pair(self, photon: int) -> int:
        return 0 if photon < 2 else 1

    def photon_line(self, photon: int) -> int:
        return (
            self.detector_right
            if PHOTON_WINGS[photon] == "r"
            else self.detector_left
        )


@dataclass(frozen=True)
class SceneConfig:
    """Paths, outcomes, and the annihilation pairing of all four photons.

    Photon order is (pair-0 right, pair-0 left, pair-1 right, pair-1 left).
    """

    moves: tuple[str, str, str, str]
    outcomes: tuple[int, int, int, int]
    pairing: tuple[tuple[int, int], tuple[int, int]]


def _couple_weight(
    scene: TwoSourceScene, config: SceneConfig, couple: tuple[int, int]
) -> float:
    p, q = couple
    # right-wing photon first; same-wing encounters ordered by pair label
    if (PHOTON_WINGS[p], PHOTON_WINGS[q]) == ("l", "r") or (
        PHOTON_WINGS[p] == PHOTON_WINGS[q] and p > q
    ):
        p, q = q, p

    def vec(photon: int) -> Vector:
        meas = scene.a_meas if PHOTON_WINGS[photon] == "r" else scene.b_meas
        return scale(config.outcomes[photon], meas)

    return scene.rule.weight(
        scene.photon_pair(p),
        scene.photon_pair(q),
        vec(p),
        vec(q),
        scene.a_meas,
        scene.b_meas,
    )


def _photon_final(scene: TwoSourceScene, config: SceneConfig, photon: int) -> Vertex:
    vertex = scene.photon_source(photon)
    for move in config.moves[photon]:
        vertex = step(vertex, move)
    return vertex


def scene_weight(scene: TwoSourceScene, config: SceneConfig) -> float:
    """Unnormalized weight; 0 for geometrically invalid configurations."""
    if sorted(config.pairing[0] + config.pairing[1]) != [0, 1, 2, 3]:
        raise ValueError("pairing must partition the four photons")
    if any(outcome not in (1, -1) for outcome in config.outcomes):
        raise ValueError("outcomes must be +1 or -1")
    lattice = DiamondLattice(scene.extent)
    weight = 1.0
    for photon in range(4):
        moves = config.moves[photon]
        if not moves or set(moves) - {"L", "R"}:
            raise ValueError("moves must be nonempty strings over {L, R}")
        if moves[0] != PHOTON_WINGS[photon].upper():
            return 0.0
        vertex = scene.photon_source(photon)
        crossing = None
        for k, move in enumerate(moves, start=1):
            vertex = step(vertex, move)
            if not lattice.contains(vertex):
                return 0.0
            if crossing is None and coord_d(vertex) == scene.photon_line(photon):
                crossing = k
        if crossing is None or crossing >= len(moves):
            return 0.0
        for j in range(1, len(moves)):
            weight *= (
                scene.epsilon if moves[j] != moves[j - 1] else 1.0 - scene.epsilon
            )
    for couple in config.pairing:
        p, q = couple
        if _photon_final(scene, config, p) != _photon_final(scene, config, q):
            return 0.0
        weight *= _couple_weight(scene, config, couple)
    return weight


def enumerate_scene_configs(
    scene: TwoSourceScene, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[SceneConfig]:
    """All valid path/outcome/pairing combinations, deterministic order."""
    wings = []
    for photon in range(4):
        wings.append(
            _wing_paths(
                scene.extent,
                scene.photon_source(photon),
                scene.photon_line(photon),
                PHOTON_WINGS[photon].upper(),
                cap,
            )
        )

    def couple_geometries(p: int, q: int):
        by_final: dict[Vertex, list] = {}
        for path in wings[q]:
            by_final.setdefault(path.final, []).append(path)
        return [
            (path_p, path_q)
            for path_p in wings[p]
            for path_q in by_final.get(path_p.final, ())
        ]

    configs: list[SceneConfig] = []
    for pairing in PAIRINGS:
        (p1, q1), (p2, q2) = pairing
        for path_p1, path_q1 in couple_geometries(p1, q1):
            for path_p2, path_q2 in couple_geometries(p2, q2):
                moves = [""] * 4
                moves[p1], moves[q1] = path_p1.moves, path_q1.moves
                moves[p2], moves[q2] = path_p2.moves, path_q2.moves
                for o0 in (1, -1):
                    for o1 in (1, -1):
                        for o2 in (1, -1):
                            for o3 in (1, -1):
                                configs.append(
                                    SceneConfig(
                                        moves=tuple(moves),
                                        outcomes=(o0, o1, o2, o3),
                                        pairing=pairing,
                                    )
                                )
                                if len(configs) > cap:
                                    raise CapacityError(
                                        "scene enumeration exceeded the cap "
                                        f"of {cap}"
                                    )
    return configs


def scene_geometry_weight(scene: TwoSourceScene, config: SceneConfig) -> float:
    """Propagation-only weight (no annihilation factors), for cross-checks."""
    total = 1.0
    for photon in range(4):
        paths = _wing_paths(
            scene.extent,
            scene.photon_source(photon),
            scene.photon_line(photon),
            PHOTON_WINGS[photon].upper(),
            DEFAULT_ENUMERATION_CAP,
        )
        match = [p for p in paths if p.moves == config.moves[photon]]
        if not match:
            return 0.0
        total *= _wing_geometry_weight(scene.epsilon, match[0])
    return total


def to_field_model(scene: TwoSourceScene) -> TrajectoryFieldModel:
    return build_field_model(
        lattice=DiamondLattice(scene.extent),
        sources=scene.sources,
        detector_right=scene.detector_right,
        detector_left=scene.detector_left,
        epsilon=scene.epsilon,
        rule=scene.rule,
        a_meas=scene.a_meas,
        b_meas=scene.b_meas,
    )


def scene_field_config(
    scene: TwoSourceScene, field: TrajectoryFieldModel, config: SceneConfig
):
    """Embed a scene configuration as edge-occupation states."""
    edge_tokens: list[set] = [set() for _ in field.edge_list]
    for photon in range(4):
        field.place_path(
            edge_tokens,
            scene.photon_source(photon),
            config.moves[photon],
            scene.photon_pair(photon),
            PHOTON_WINGS[photon],
            config.outcomes[photon],
        )
    return tuple(frozenset(tokens) for tokens in edge_tokens)


def scene_total_weight_by_pairing(
    scene: TwoSourceScene, cap: int = DEFAULT_ENUMERATION_CAP
) -> dict[tuple, float]:
    """Sum of configuration weights per annihilation pairing."""
    totals: dict[tuple, list[float]] = {pairing: [] for pairing in PAIRINGS}
    for config in enumerate_scene_configs(scene, cap):
        totals[config.pairing].append(scene_weight(scene, config))
    return {pairing: math.fsum(ws) for pairing, ws in totals.items()}

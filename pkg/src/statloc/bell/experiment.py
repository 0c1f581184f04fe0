"""Bell experiments as exactly enumerable trajectory ensembles.

A source vertex emits a photon pair: the right-wing photon's first step is
'R', the left-wing photon's is 'L'.  Each photon then walks lightlike steps;
every interior vertex of its path weighs 1-epsilon for continuing straight
and epsilon for switching direction.  A static detector per wing is the
worldline {d = const}; the first vertex of a path on its own wing's line is
the measurement event, where an outcome label (alpha or beta, +1 or -1)
attaches to all later segments as the signed vector alpha*a_meas or
beta*b_meas.  Both paths must terminate together at a single shared
annihilation vertex strictly after both measurements, where an annihilation
rule converts the pair labels and result vectors into a final weight; the
canonical rule delta_ij (1 - a.b)/2 makes the normalized outcome law the
singlet distribution (1 - alpha beta a_meas.b_meas)/4.

A configuration's probability is its total weight divided by the sum over
all valid configurations, so the model is a statistically local
product-of-factors theory (see statloc.bell.field for the explicit
FactorModel form).
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, runtime_checkable

from statloc.bell.lattice import (
    DiamondLattice,
    Vertex,
    coord_d,
    coord_t,
    step,
)
from statloc.errors import (
    CapacityError,
    DegenerateModelError,
    LowSurvivalWarning,
    SpecError,
)
from statloc.factors import DEFAULT_ENUMERATION_CAP

Vector = tuple[float, float, float]

SURVIVAL_FLOOR = 0.99

Z_AXIS: Vector = (0.0, 0.0, 1.0)


def dot(a: Vector, b: Vector) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def scale(c: float, vec: Vector) -> Vector:
    return (c * vec[0], c * vec[1], c * vec[2])


def unit(x: float, y: float, z: float) -> Vector:
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return (x / norm, y / norm, z / norm)


def planar_setting(angle_rad: float) -> Vector:
    """Unit vector in the x-z plane at the given angle from the z axis."""
    return (math.sin(angle_rad), 0.0, math.cos(angle_rad))


def _check_unit(vec: Vector, name: str) -> None:
    if len(vec) != 3:
        raise SpecError(f"{name} must be a 3-vector")
    norm = math.sqrt(dot(vec, vec))
    if abs(norm - 1.0) > 1e-9:
        raise SpecError(f"{name} must be a unit vector (|{name}| = {norm})")


@runtime_checkable
class AnnihilationWeight(Protocol):
    """Weight assigned when two labeled trajectories annihilate.

    ``result_a``/``result_b`` are the signed result vectors carried by the
    right- and left-wing trajectories; ``a_setting``/``b_setting`` are the
    measurement directions of the experiment, passed so that rules may
    (deliberately) depend on the remote setting.
    """

    name: str

    def weight(
        self,
        pair_i: int,
        pair_j: int,
        result_a: Vector,
        result_b: Vector,
        a_setting: Vector,
        b_setting: Vector,
    ) -> float: ...


@dataclass(frozen=True)
class SingletAnnihilation:
    """delta_ij (1 - a.b)/2 over the signed result vectors."""

    name: str = "singlet"

    def weight(
        self,
        pair_i: int,
        pair_j: int,
        result_a: Vector,
        result_b: Vector,
        a_setting: Vector,
        b_setting: Vector,
    ) -> float:
        if pair_i != pair_j:
            return 0.0
        # dot of unit vectors can exceed 1 by an ulp; the true value is >= 0
        return max(0.0, 0.5 * (1.0 - dot(result_a, result_b)))


@dataclass(frozen=True)
class SignallingAnnihilation:
    """delta_ij (1 + strength * alpha * (b_setting . z))/4.

    A deliberately signalling rule: the right wing's outcome weight depends
    on the left wing's measurement direction, so the right marginal shifts
    with the remote setting while the global distribution stays nonnegative
    and normalized.  ``strength`` < 1 keeps every weight positive.
    """

    strength: float
    name: str = "signalling"

    def __post_init__(self) -> None:
        if not 0.0 <= self.strength < 1.0:
            raise ValueError("signalling strength must be in [0, 1)")

    def weight(
        self,
        pair_i: int,
        pair_j: int,
        result_a: Vector,
        result_b: Vector,
        a_setting: Vector,
        b_setting: Vector,
    ) -> float:
        if pair_i != pair_j:
            return 0.0
        alpha = round(dot(result_a, a_setting))
        return 0.25 * (1.0 + self.strength * alpha * b_setting[2])


def survival_probability(epsilon: float, n_links: int) -> float:
    """(1-epsilon)^n: chance of a photon staying straight over n links."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be strictly between 0 and 1")
    if n_links < 0:
        raise ValueError("link count must be nonnegative")
    return (1.0 - epsilon) ** n_links


@dataclass(frozen=True)
class ExperimentSpec:
    """Geometry, settings, and annihilation rule of one Bell experiment.

    ``detector_right``/``detector_left`` are the spatial offsets (d = u - v)
    of the two detector worldlines; the right one must lie strictly right of
    the source, the left one strictly left.  Construction fails if a
    detector line cannot be reached inside the lattice and warns (see
    ``survival_links``) when epsilon is large enough that straight-through
    propagation has probability below 0.99.
    """

    extent: int
    detector_right: int
    detector_left: int
    a_meas: Vector
    b_meas: Vector
    epsilon: float
    source: Vertex = (0, 0)
    rule: AnnihilationWeight = SingletAnnihilation()
    pair_label: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_meas", tuple(self.a_meas))
        object.__setattr__(self, "b_meas", tuple(self.b_meas))
        object.__setattr__(self, "source", tuple(self.source))
        lattice = self.lattice  # validates extent
        if not lattice.contains(self.source):
            raise SpecError(f"source {self.source} lies outside the lattice")
        _check_unit(self.a_meas, "a_meas")
        _check_unit(self.b_meas, "b_meas")
        if not 0.0 < self.epsilon < 1.0:
            raise SpecError("epsilon must be strictly between 0 and 1")
        d_src = coord_d(self.source)
        if self.detector_right <= d_src:
            raise SpecError("right detector line must lie strictly right of the source")
        if self.detector_left >= d_src:
            raise SpecError("left detector line must lie strictly left of the source")
        for name, d_line in (
            ("right", self.detector_right),
            ("left", self.detector_left),
        ):
            if coord_t(self.source) + abs(d_line - d_src) > self.extent:
                raise SpecError(
                    f"{name} detector line at d={d_line} is outside the "
                    f"source's future cone (extent {self.extent})"
                )
        survival = survival_probability(self.epsilon, self.survival_links)
        if survival < SURVIVAL_FLOOR:
            warnings.warn(
                f"survival probability (1-epsilon)^{self.survival_links} = "
                f"{survival:.6g} is below {SURVIVAL_FLOOR}; switch weights will "
                "dominate the trajectory ensemble",
                LowSurvivalWarning,
                stacklevel=2,
            )

    @property
    def lattice(self) -> DiamondLattice:
        return DiamondLattice(self.extent)

    @property
    def survival_links(self) -> int:
        """Length of the longest source-to-detector-line path, over wings."""
        t_src = coord_t(self.source)
        d_src = coord_d(self.source)
        longest = 0
        for d_line in (self.detector_right, self.detector_left):
            t_first = t_src + abs(d_line - d_src)
            t_last = self.extent - (self.extent - t_first) % 2
            longest = max(longest, t_last - t_src)
        return longest


def with_settings(spec: ExperimentSpec, a_meas: Vector, b_meas: Vector) -> ExperimentSpec:
    """Same geometry, rule, and epsilon; new measurement directions."""
    return dataclasses.replace(spec, a_meas=a_meas, b_meas=b_meas)


@dataclass(frozen=True)
class TrajectoryConfig:
    """One global configuration: both paths plus all hidden labels.

    Move strings are over {L, R} starting at the source; ``alpha``/``beta``
    are the wing outcomes, carried as the signed result vectors
    alpha*a_meas and beta*b_meas on post-measurement segments.
    """

    right_moves: str
    left_moves: str
    alpha: int
    beta: int
    pair_label: int = 0


_SIGN = {1: "+", -1: "-"}
_CONFIG_RE = re.compile(
    r"^([LR]+)\|([LR]+) i=(\d+) a=([+-]) b=([+-])$"
)


def serialize_config(config: TrajectoryConfig) -> str:
    if config.alpha not in _SIGN or config.beta not in _SIGN:
        raise ValueError("outcome labels must be +1 or -1")
    return (
        f"{config.right_moves}|{config.left_moves} i={config.pair_label} "
        f"a={_SIGN[config.alpha]} b={_SIGN[config.beta]}"
    )


def parse_config(text: str) -> TrajectoryConfig:
    match = _CONFIG_RE.match(text.strip())
    if match is None:
        raise ValueError(f"not a trajectory configuration: {text!r}")
    right, left, pair, a_sign, b_sign = match.groups()
    return TrajectoryConfig(
        right_moves=right,
        left_moves=left,
        alpha=1 if a_sign == "+" else -1,
        beta=1 if b_sign == "+" else -1,
        pair_label=int(pair),
    )


def path_vertices(source: Vertex, moves: str) -> list[Vertex]:
    out = [source]
    for move in moves:
        out.append(step(out[-1], move))
    return out


def first_crossing(source: Vertex, moves: str, d_line: int) -> int | None:
    """Index of the first post-emission vertex on the line, if any."""
    vertex = source
    for k, move in enumerate(moves, start=1):
        vertex = step(vertex, move)
        if coord_d(vertex) == d_line:
            return k
    return None


@dataclass(frozen=True)
class _WingPath:
    moves: str
    crossing: int  # vertex index of the measurement event
    final: Vertex
    switches: int


def _wing_first_move(wing: str) -> str:
    return "R" if wing == "right" else "L"


@lru_cache(maxsize=64)
def _wing_paths(
    extent: int,
    source: Vertex,
    d_line: int,
    first_move: str,
    cap: int,
) -> tuple[_WingPath, ...]:
    """All paths from the source that first cross the line strictly before
    their final vertex, with every vertex inside the lattice."""
    found: list[_WingPath] = []
    start = step(source, first_move)
    lattice = DiamondLattice(extent)
    if not lattice.contains(start):
        return ()

    def extend(vertex: Vertex, moves: list[str], crossing: int | None, switches: int) -> None:
        if len(found) > cap:
            raise CapacityError(
                f"wing path enumeration exceeded the cap of {cap}; "
                "reduce the extent or raise the cap"
            )
        t = coord_t(vertex)
        d = coord_d(vertex)
        if crossing is None and d == d_line:
            crossing = len(moves)
        elif crossing is None and abs(d - d_line) > extent - 1 - t:
            return  # can no longer reach the line in time to be measured
        if crossing is not None and crossing < len(moves):
            found.append(
                _WingPath("".join(moves), crossing, vertex, switches)
            )
        if t >= extent:
            return
        for move in ("L", "R"):
            extend(
                step(vertex, move),
                moves + [move],
                crossing,
                switches + (move != moves[-1]),
            )

    extend(start, [first_move], None, 0)
    return tuple(found)


def _wing_geometry_weight(epsilon: float, path: _WingPath) -> float:
    straights = len(path.moves) - 1 - path.switches
    return (1.0 - epsilon) ** straights * epsilon**path.switches


def _paired_geometries(
    spec: ExperimentSpec, cap: int
) -> list[tuple[_WingPath, _WingPath]]:
    rights = _wing_paths(
        spec.extent, spec.source, spec.detector_right, "R", cap
    )
    lefts = _wing_paths(spec.extent, spec.source, spec.detector_left, "L", cap)
    by_final: dict[Vertex, list[_WingPath]] = {}
    for left in lefts:
        by_final.setdefault(left.final, []).append(left)
    total = 4 * sum(len(by_final.get(r.final, ())) for r in rights)
    if total > cap:
        raise CapacityError(
            f"{total} trajectory configurations exceed the enumeration cap "
            f"{cap}; reduce the extent or raise the cap"
        )
    return [
        (right, left)
        for right in rights
        for left in by_final.get(right.final, ())
    ]


def enumerate_trajectories(
    spec: ExperimentSpec, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[TrajectoryConfig]:
    """Every valid configuration, lexicographic in (paths, labels).

    Each geometrically valid path pair appears with all four (alpha, beta)
    labelings.  Configurations whose annihilation factor happens to vanish
    are still enumerated (they are valid, zero-probability configurations).
    """
    configs = [
        TrajectoryConfig(
            right_moves=right.moves,
            left_moves=left.moves,
            alpha=alpha,
            beta=beta,
            pair_label=spec.pair_label,
        )
        for right, left in _paired_geometries(spec, cap)
        for alpha in (1, -1)
        for beta in (1, -1)
    ]
    configs.sort(
        key=lambda c: (c.right_moves, c.left_moves, -c.alpha, -c.beta)
    )
    return configs


def _validate_moves(moves: str, what: str) -> None:
    if not moves or set(moves) - {"L", "R"}:
        raise ValueError(f"{what} must be a nonempty string over {{L, R}}")


def _wing_check(
    spec: ExperimentSpec, moves: str, wing: str
) -> tuple[bool, int | None]:
    """(geometrically valid, crossing index) for one wing's path."""
    if moves[0] != _wing_first_move(wing):
        return False, None
    lattice = spec.lattice
    vertex = spec.source
    for move in moves:
        vertex = step(vertex, move)
        if not lattice.contains(vertex):
            return False, None
    d_line = spec.detector_right if wing == "right" else spec.detector_left
    crossing = first_crossing(spec.source, moves, d_line)
    if crossing is None or crossing >= len(moves):
        return False, None
    return True, crossing


def result_vectors(
    config: TrajectoryConfig, spec: ExperimentSpec
) -> tuple[Vector, Vector]:
    return scale(config.alpha, spec.a_meas), scale(config.beta, spec.b_meas)


def trajectory_weight(config: TrajectoryConfig, spec: ExperimentSpec) -> float:
    """Unnormalized weight; 0 for geometrically invalid configurations."""
    _validate_moves(config.right_moves, "right_moves")
    _validate_moves(config.left_moves, "left_moves")
    if config.alpha not in (1, -1) or config.beta not in (1, -1):
        raise ValueError("outcome labels must be +1 or -1")
    if config.pair_label != spec.pair_label:
        return 0.0
    ok_r, _ = _wing_check(spec, config.right_moves, "right")
    ok_l, _ = _wing_check(spec, config.left_moves, "left")
    if not (ok_r and ok_l):
        return 0.0
    final_r = path_vertices(spec.source, config.right_moves)[-1]
    final_l = path_vertices(spec.source, config.left_moves)[-1]
    if final_r != final_l:
        return 0.0
    weight = 1.0
    for moves in (config.right_moves, config.left_moves):
        for j in range(1, len(moves)):
            weight *= spec.epsilon if moves[j] != moves[j - 1] else 1.0 - spec.epsilon
    vec_a, vec_b = result_vectors(config, spec)
    return weight * spec.rule.weight(
        config.pair_label,
        config.pair_label,
        vec_a,
        vec_b,
        spec.a_meas,
        spec.b_meas,
    )


@dataclass(frozen=True)
class JointDistribution:
    """P(alpha, beta) over the four outcome pairs; right wing listed first."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self) -> None:
        entries = (self.p_pp, self.p_pm, self.p_mp, self.p_mm)
        if any(p < 0.0 for p in entries):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(entries) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    def probability(self, alpha: int, beta: int) -> float:
        return {
            (1, 1): self.p_pp,
            (1, -1): self.p_pm,
            (-1, 1): self.p_mp,
            (-1, -1): self.p_mm,
        }[(alpha, beta)]

    def right_marginal(self, alpha: int) -> float:
        return self.probability(alpha, 1) + self.probability(alpha, -1)

    def left_marginal(self, beta: int) -> float:
        return self.probability(1, beta) + self.probability(-1, beta)

    @property
    def correlation(self) -> float:
        return math.fsum((self.p_pp, -self.p_pm, -self.p_mp, self.p_mm))

    def as_dict(self) -> dict[str, float]:
        return {
            "++": self.p_pp,
            "+-": self.p_pm,
            "-+": self.p_mp,
            "--": self.p_mm,
        }


_LABELINGS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def outcome_distribution(
    spec: ExperimentSpec, cap: int = DEFAULT_ENUMERATION_CAP
) -> JointDistribution:
    """Exact P(alpha, beta): per-configuration weights summed and normalized."""
    geometries = _paired_geometries(spec, cap)
    if not geometries:
        raise DegenerateModelError(
            "no valid configuration: the lattice is too small for both "
            "measurement and a later annihilation"
        )
    geo_weights = [
        _wing_geometry_weight(spec.epsilon, right)
        * _wing_geometry_weight(spec.epsilon, left)
        for right, left in geometries
    ]
    numerators = {}
    for alpha, beta in _LABELINGS:
        label_factor = spec.rule.weight(
            spec.pair_label,
            spec.pair_label,
            scale(alpha, spec.a_meas),
            scale(beta, spec.b_meas),
            spec.a_meas,
            spec.b_meas,
        )
        numerators[(alpha, beta)] = math.fsum(g * label_factor for g in geo_weights)
    z = math.fsum(numerators.values())
    if z <= 0.0:
        raise DegenerateModelError("every configuration has weight 0")
    return JointDistribution(
        p_pp=numerators[(1, 1)] / z,
        p_pm=numerators[(1, -1)] / z,
        p_mp=numerators[(-1, 1)] / z,
        p_mm=numerators[(-1, -1)] / z,
    )


def correlation(spec: ExperimentSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """E(a, b) = sum over outcomes of alpha*beta*P(alpha, beta)."""
    return outcome_distribution(spec, cap).correlation


def chsh(
    spec: ExperimentSpec,
    a: Vector,
    a_prime: Vector,
    b: Vector,
    b_prime: Vector,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b') on a shared geometry."""
    return math.fsum(
        (
            correlation(with_settings(spec, a, b), cap),
            -correlation(with_settings(spec, a, b_prime), cap),
            correlation(with_settings(spec, a_prime, b), cap),
            correlation(with_settings(spec, a_prime, b_prime), cap),
        )
    )


@dataclass(frozen=True)
class PreMeasurementRecord:
    """Everything observable strictly before the two measurement events:
    the path segments up to (excluding) each detector crossing plus the
    shared pair label.  Outcome labels cannot appear here by construction."""

    right_prefix: str
    left_prefix: str
    pair_label: int


def pre_measurement_view(
    config: TrajectoryConfig, spec: ExperimentSpec
) -> PreMeasurementRecord:
    ok_r, cross_r = _wing_check(spec, config.right_moves, "right")
    ok_l, cross_l = _wing_check(spec, config.left_moves, "left")
    if not (ok_r and ok_l):
        raise ValueError("configuration is not geometrically valid for this spec")
    return PreMeasurementRecord(
        right_prefix=config.right_moves[:cross_r],
        left_prefix=config.left_moves[:cross_l],
        pair_label=config.pair_label,
    )


def pre_measurement_distribution(
    spec: ExperimentSpec, cap: int = DEFAULT_ENUMERATION_CAP
) -> dict[PreMeasurementRecord, float]:
    """Exact distribution of pre-measurement records for one experiment."""
    totals: dict[PreMeasurementRecord, list[float]] = {}
    for config in enumerate_trajectories(spec, cap):
        record = pre_measurement_view(config, spec)
        totals.setdefault(record, []).append(trajectory_weight(config, spec))
    sums = {record: math.fsum(ws) for record, ws in totals.items()}
    z = math.fsum(sums.values())
    if z <= 0.0:
        raise DegenerateModelError("every configuration has weight 0")
    return {record: s / z for record, s in sums.items()}


# -- spec file serialization -------------------------------------------------

def rule_to_json(rule: AnnihilationWeight) -> dict:
    if isinstance(rule, SingletAnnihilation):
        return {"name": "singlet"}
    if isinstance(rule, SignallingAnnihilation):
        return {"name": "signalling", "strength": rule.strength}
    raise SpecError(f"cannot serialize annihilation rule {rule!r}")


def rule_from_json(data: dict) -> AnnihilationWeight:
    if not isinstance(data, dict) or "name" not in data:
        raise SpecError("annihilation rule must be an object with a 'name'")
    if data["name"] == "singlet":
        return SingletAnnihilation()
    if data["name"] == "signalling":
        if "strength" not in data:
            raise SpecError("signalling rule requires a 'strength'")
        try:
            return SignallingAnnihilation(strength=float(data["strength"]))
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
    raise SpecError(f"unknown annihilation rule {data['name']!r}")


def spec_to_json(spec: ExperimentSpec) -> dict:
    return {
        "extent": spec.extent,
        "source": list(spec.source),
        "detector_right": spec.detector_right,
        "detector_left": spec.detector_left,
        "a_meas": list(spec.a_meas),
        "b_meas": list(spec.b_meas),
        "epsilon": spec.epsilon,
        "rule": rule_to_json(spec.rule),
        "pair_label": spec.pair_label,
    }


def spec_from_json(data: dict) -> ExperimentSpec:
    if not isinstance(data, dict):
        raise SpecError("experiment spec must be a JSON object")
    required = {
        "extent",
        "detector_right",
        "detector_left",
        "a_meas",
        "b_meas",
        "epsilon",
    }
    missing = sorted(required - set(data))
    if missing:
        raise SpecError(f"experiment spec is missing fields: {', '.join(missing)}")
    try:
        return ExperimentSpec(
            extent=int(data["extent"]),
            detector_right=int(data["detector_right"]),
            detector_left=int(data["detector_left"]),
            a_meas=tuple(float(x) for x in data["a_meas"]),
            b_meas=tuple(float(x) for x in data["b_meas"]),
            epsilon=float(data["epsilon"]),
            source=tuple(int(x) for x in data.get("source", (0, 0))),
            rule=rule_from_json(data.get("rule", {"name": "singlet"})),
            pair_label=int(data.get("pair_label", 0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed experiment spec: {exc}") from exc


def load_spec(path: str) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path} is not valid JSON: {exc}") from exc
    return spec_from_json(data)


def save_spec(spec: ExperimentSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_json(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")

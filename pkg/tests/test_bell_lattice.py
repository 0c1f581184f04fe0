"""Diamond lattice and trajectory enumeration against independent oracles."""

import math
import pathlib
import warnings

import pytest

from statloc.errors import CapacityError, SpecError
from statloc.bell.experiment import (
    ExperimentSpec,
    SingletAnnihilation,
    chsh,
    correlation,
    enumerate_trajectories,
    first_crossing,
    load_spec,
    outcome_distribution,
    parse_config,
    path_vertices,
    planar_setting,
    pre_measurement_distribution,
    pre_measurement_view,
    save_spec,
    serialize_config,
    spec_from_json,
    spec_to_json,
    survival_probability,
    trajectory_weight,
    TrajectoryConfig,
    with_settings,
)
from statloc.bell.lattice import MOVES, DiamondLattice, coord_d, coord_t, step

GOLDEN = pathlib.Path(__file__).parent / "golden"


def make_spec(extent, detector=1, epsilon=0.25, theta_rad=math.pi / 3):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ExperimentSpec(
            extent=extent,
            detector_right=detector,
            detector_left=-detector,
            a_meas=planar_setting(0.0),
            b_meas=planar_setting(theta_rad),
            epsilon=epsilon,
        )


# ---------------------------------------------------------------------------
# lattice geometry


def test_lattice_shape():
    lattice = DiamondLattice(extent=2)
    assert len(lattice.vertices()) == 6
    assert len(lattice.edges) == 6
    assert lattice.edge_index[((0, 0), "L")] == 0
    with pytest.raises(ValueError):
        DiamondLattice(extent=0)


def test_coordinates_and_moves():
    assert step((0, 0), "R") == (1, 0)
    assert step((0, 0), "L") == (0, 1)
    assert coord_d((3, 1)) == 2
    assert coord_t((3, 1)) == 4
    assert MOVES == ("L", "R")


def test_edge_incidence_consistency():
    lattice = DiamondLattice(extent=3)
    for edge in lattice.edges:
        start, move = edge
        end = step(start, move)
        assert edge in lattice.out_edges(start)
        assert edge in lattice.in_edges(end)


# ---------------------------------------------------------------------------
# independent path-count oracle: dynamic program over (vertex, status)


def dp_wing_counts(extent, source, d_line, first_move):
    """Count wing paths per annihilation vertex without enumerating them.

    status 0: detector line never touched; 1: first touched at the current
    vertex; 2: touched strictly earlier.  A path is a valid wing history iff
    its first touch lies strictly before its endpoint, so endpoint counts
    accumulate from status-2 states only.
    """
    NEVER, NOW, EARLIER = 0, 1, 2

    def in_lattice(v):
        return v[0] >= 0 and v[1] >= 0 and v[0] + v[1] <= extent

    def status_after(status, vertex):
        if status != NEVER:
            return EARLIER
        return NOW if vertex[0] - vertex[1] == d_line else NEVER

    first = step(source, first_move)
    done: dict[tuple, int] = {}
    if not in_lattice(first):
        return done
    states = {(first, status_after(NEVER, first)): 1}
    while states:
        for (vertex, status), count in states.items():
            if status == EARLIER:
                done[vertex] = done.get(vertex, 0) + count
        advanced: dict[tuple, int] = {}
        for (vertex, status), count in states.items():
            for move in MOVES:
                nxt = step(vertex, move)
                if in_lattice(nxt):
                    key = (nxt, status_after(status, nxt))
                    advanced[key] = advanced.get(key, 0) + count
        states = advanced
    return done


def dp_config_count(extent, detector):
    right = dp_wing_counts(extent, (0, 0), detector, "R")
    left = dp_wing_counts(extent, (0, 0), -detector, "L")
    shared = set(right) & set(left)
    return 4 * sum(right[v] * left[v] for v in shared)


# Frozen counts; every value was reproduced by both the recursive enumerator
# and the dynamic program above before being pinned here.
FROZEN_COUNTS = {
    (2, 1): 4,
    (4, 1): 80,
    (6, 1): 1144,
    (8, 1): 16324,
    (4, 2): 4,
    (8, 2): 4652,
    (10, 2): 87820,
}


@pytest.mark.parametrize("extent,detector", sorted(FROZEN_COUNTS))
def test_dp_oracle_matches_frozen_counts(extent, detector):
    assert dp_config_count(extent, detector) == FROZEN_COUNTS[(extent, detector)]


@pytest.mark.parametrize(
    "extent,detector",
    [(2, 1), (4, 1), (6, 1), (8, 1), (4, 2), (8, 2)],
)
def test_enumeration_matches_dp_oracle(extent, detector):
    spec = make_spec(extent, detector)
    configs = enumerate_trajectories(spec)
    assert len(configs) == FROZEN_COUNTS[(extent, detector)]
    assert len(set(configs)) == len(configs)
    # all four labelings present per geometry
    labels = {(c.right_moves, c.left_moves): set() for c in configs}
    for c in configs:
        labels[(c.right_moves, c.left_moves)].add((c.alpha, c.beta))
    assert all(len(s) == 4 for s in labels.values())


def test_enumeration_is_sorted_and_capped():
    spec = make_spec(4)
    configs = enumerate_trajectories(spec)
    keys = [(c.right_moves, c.left_moves, -c.alpha, -c.beta) for c in configs]
    assert keys == sorted(keys)
    with pytest.raises(CapacityError):
        enumerate_trajectories(make_spec(8), cap=100)


def test_paths_structurally_valid():
    spec = make_spec(4)
    for config in enumerate_trajectories(spec):
        assert config.right_moves[0] == "R"
        assert config.left_moves[0] == "L"
        right = path_vertices(spec.source, config.right_moves)
        left = path_vertices(spec.source, config.left_moves)
        assert right[-1] == left[-1]  # shared annihilation vertex
        for vertex in right + left:
            assert spec.lattice.contains(vertex)
        # measurement strictly before annihilation on both wings
        cross_r = first_crossing(spec.source, config.right_moves, spec.detector_right)
        cross_l = first_crossing(spec.source, config.left_moves, spec.detector_left)
        assert cross_r is not None and cross_r < len(config.right_moves)
        assert cross_l is not None and cross_l < len(config.left_moves)


# ---------------------------------------------------------------------------
# weights


def test_minimal_lattice_weights_by_hand():
    spec = make_spec(2)  # epsilon 0.25, theta 60 degrees
    configs = enumerate_trajectories(spec)
    assert len(configs) == 4
    for config in configs:
        # both wings: one interior vertex, always a switch on this geometry
        hand = 0.25**2 * (1.0 - config.alpha * config.beta * 0.5) / 2.0
        assert trajectory_weight(config, spec) == pytest.approx(hand, abs=1e-16)


def test_minimal_enumeration_golden_file():
    spec = make_spec(2)
    configs = enumerate_trajectories(spec)
    weights = [trajectory_weight(c, spec) for c in configs]
    z = math.fsum(weights)
    produced = "".join(
        f"{serialize_config(c)} {w / z!r}\n" for c, w in zip(configs, weights)
    )
    assert produced == (GOLDEN / "bell_minimal_enumeration.txt").read_text()


def test_weight_factorizes_over_interior_vertices():
    spec = make_spec(4, epsilon=0.2)
    rule = SingletAnnihilation()
    for config in enumerate_trajectories(spec):
        switches = 0
        straights = 0
        for moves in (config.right_moves, config.left_moves):
            for prev, cur in zip(moves, moves[1:]):
                if prev == cur:
                    straights += 1
                else:
                    switches += 1
        label_factor = rule.weight(
            0,
            0,
            tuple(config.alpha * x for x in spec.a_meas),
            tuple(config.beta * x for x in spec.b_meas),
            spec.a_meas,
            spec.b_meas,
        )
        hand = (0.8**straights) * (0.2**switches) * label_factor
        assert trajectory_weight(config, spec) == pytest.approx(hand, rel=1e-12)


def test_invalid_configs_have_zero_weight():
    spec = make_spec(4)
    # wrong first moves (not back-to-back)
    assert trajectory_weight(TrajectoryConfig("LR", "LR", 1, 1), spec) == 0.0
    # paths that never cross their detector line before ending
    assert trajectory_weight(TrajectoryConfig("R", "L", 1, 1), spec) == 0.0
    # endpoints differ
    assert trajectory_weight(TrajectoryConfig("RRL", "LLL", 1, 1), spec) == 0.0
    # off-lattice (too long)
    assert trajectory_weight(TrajectoryConfig("RLRLR", "LRLRL", 1, 1), spec) == 0.0
    # wrong pair label
    assert (
        trajectory_weight(TrajectoryConfig("RL", "LR", 1, 1, pair_label=3), spec)
        == 0.0
    )


def test_malformed_configs_raise():
    spec = make_spec(4)
    with pytest.raises(ValueError):
        trajectory_weight(TrajectoryConfig("RX", "LR", 1, 1), spec)
    with pytest.raises(ValueError):
        trajectory_weight(TrajectoryConfig("", "LR", 1, 1), spec)
    with pytest.raises(ValueError):
        trajectory_weight(TrajectoryConfig("RL", "LR", 2, 1), spec)


def test_serialize_parse_round_trip():
    config = TrajectoryConfig("RLR", "LRL", -1, 1, pair_label=2)
    assert parse_config(serialize_config(config)) == config
    assert serialize_config(config) == "RLR|LRL i=2 a=- b=+"
    with pytest.raises(ValueError):
        parse_config("RLR|LRL i=2 a=? b=+")
    with pytest.raises(ValueError):
        parse_config("not a config")


# ---------------------------------------------------------------------------
# outcome law


def test_singlet_law_at_sixty_degrees():
    spec = make_spec(4)
    dist = outcome_distribution(spec)
    assert dist.probability(+1, +1) == pytest.approx(0.125, abs=1e-12)
    assert dist.probability(-1, -1) == pytest.approx(0.125, abs=1e-12)
    assert dist.probability(+1, -1) == pytest.approx(0.375, abs=1e-12)
    assert dist.probability(-1, +1) == pytest.approx(0.375, abs=1e-12)
    assert dist.correlation == pytest.approx(-0.5, abs=1e-12)
    assert dist.right_marginal(+1) == pytest.approx(0.5, abs=1e-12)
    assert dist.left_marginal(+1) == pytest.approx(0.5, abs=1e-12)


def test_outcome_distribution_is_epsilon_independent():
    reference = outcome_distribution(make_spec(4, epsilon=0.25)).as_dict()
    for epsilon in (0.05, 0.5, 0.9):
        other = outcome_distribution(make_spec(4, epsilon=epsilon)).as_dict()
        for key in reference:
            assert other[key] == pytest.approx(reference[key], abs=1e-12)


def test_correlation_matches_negative_cosine():
    for theta in (0.0, math.pi / 6, math.pi / 4, math.pi / 2, 0.8 * math.pi):
        spec = make_spec(4, theta_rad=theta, epsilon=0.003)
        assert correlation(spec) == pytest.approx(-math.cos(theta), abs=1e-12)


def test_chsh_optimal_angles():
    spec = make_spec(4, epsilon=0.003)
    a = planar_setting(0.0)
    a_prime = planar_setting(math.pi / 2)
    b = planar_setting(math.pi / 4)
    b_prime = planar_setting(3 * math.pi / 4)
    s = chsh(spec, a, a_prime, b, b_prime)
    assert abs(s) == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


# ---------------------------------------------------------------------------
# pre-measurement records


def test_pre_measurement_prefixes_stop_at_crossing():
    spec = make_spec(6, detector=2, epsilon=0.1)
    for config in enumerate_trajectories(spec):
        record = pre_measurement_view(config, spec)
        cross_r = first_crossing(spec.source, config.right_moves, 2)
        cross_l = first_crossing(spec.source, config.left_moves, -2)
        assert record.right_prefix == config.right_moves[:cross_r]
        assert record.left_prefix == config.left_moves[:cross_l]
        assert record.pair_label == 0


def test_pre_measurement_distribution_normalized_and_label_free():
    spec = make_spec(6, detector=2, epsilon=0.1)
    dist = pre_measurement_distribution(spec)
    assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    assert len(dist) == 4  # wandering room before each crossing
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spun = with_settings(spec, planar_setting(1.0), planar_setting(2.5))
    other = pre_measurement_distribution(spun)
    assert set(other) == set(dist)
    for record in dist:
        assert other[record] == pytest.approx(dist[record], abs=1e-15)


def test_pre_measurement_view_rejects_invalid():
    spec = make_spec(4)
    with pytest.raises(ValueError):
        pre_measurement_view(TrajectoryConfig("R", "L", 1, 1), spec)


# ---------------------------------------------------------------------------
# spec validation and serialization


def test_spec_validation_errors():
    a = planar_setting(0.0)
    b = planar_setting(1.0)
    with pytest.raises(ValueError):  # invalid lattice extent
        ExperimentSpec(extent=0, detector_right=1, detector_left=-1,
                       a_meas=a, b_meas=b, epsilon=0.1)
    with pytest.raises(SpecError):
        ExperimentSpec(extent=4, detector_right=-1, detector_left=-2,
                       a_meas=a, b_meas=b, epsilon=0.1)
    with pytest.raises(SpecError):
        ExperimentSpec(extent=4, detector_right=1, detector_left=2,
                       a_meas=a, b_meas=b, epsilon=0.1)
    with pytest.raises(SpecError):
        ExperimentSpec(extent=4, detector_right=1, detector_left=-1,
                       a_meas=(1.0, 0.0, 1.0), b_meas=b, epsilon=0.1)
    with pytest.raises(SpecError):
        ExperimentSpec(extent=4, detector_right=1, detector_left=-1,
                       a_meas=a, b_meas=b, epsilon=1.0)
    with pytest.raises(SpecError):
        ExperimentSpec(extent=4, detector_right=1, detector_left=-1,
                       a_meas=a, b_meas=b, epsilon=0.1, source=(9, 9))
    with pytest.raises(SpecError):
        # detector line unreachable inside the future cone
        ExperimentSpec(extent=2, detector_right=3, detector_left=-1,
                       a_meas=a, b_meas=b, epsilon=0.1)


def test_spec_json_round_trip(tmp_path):
    spec = make_spec(4, epsilon=0.003)
    assert spec_from_json(spec_to_json(spec)) == spec
    path = tmp_path / "spec.json"
    save_spec(spec, str(path))
    assert load_spec(str(path)) == spec
    with pytest.raises(SpecError):
        spec_from_json({"extent": 4})
    with pytest.raises(SpecError):
        spec_from_json({**spec_to_json(spec), "rule": {"name": "wat"}})
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SpecError):
        load_spec(str(bad))


def test_survival_probability_and_links():
    assert survival_probability(0.5, 0) == 1.0
    assert survival_probability(1e-6, 1000) >= 0.999
    assert survival_probability(0.25, 2) == pytest.approx(0.5625, rel=1e-15)
    with pytest.raises(ValueError):
        survival_probability(0.0, 5)
    with pytest.raises(ValueError):
        survival_probability(0.1, -1)
    assert make_spec(2).survival_links == 1
    assert make_spec(4).survival_links == 3
    assert make_spec(6, detector=2).survival_links == 6

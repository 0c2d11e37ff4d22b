import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhasa.instance import (InstanceFormatError, format_instance, load_instance,
                            parse_instance, random_instance)
from helpers import DATA, make_instance


@pytest.fixture(scope="module")
def small():
    return load_instance(DATA / "small.evrp")


def test_parse_header_fields(small):
    assert (small.name, small.n_c, small.n_s) == ("small", 5, 2)
    assert small.max_load == 100 and small.max_energy == 120 and small.h == 1.2
    assert small.min_routes == 2
    assert small.demand.tolist() == [0, 30, 40, 20, 35, 25, 0, 0]


def test_canonical_layout_from_shuffled_ids():
    inst = load_instance(DATA / "shuffled.evrp")
    # depot is file id 5, customers sorted by id, then the station
    assert inst.file_ids.tolist() == [5, 2, 3, 4, 9]
    assert inst.coords[0].tolist() == [0, 0]
    assert inst.coords[4].tolist() == [10, 0]
    assert inst.demand.tolist() == [0, 3, 4, 5, 0]
    assert inst.from_file_ids([5, 2, 9, 5]) == [0, 1, 4, 0]
    assert inst.to_file_ids([0, 1, 4, 0]) == [5, 2, 9, 5]


def test_file_id_bijection(small):
    ids = small.file_ids.tolist()
    assert sorted(ids) == list(range(1, small.n_nodes + 1))
    assert small.from_file_ids(small.to_file_ids(range(small.n_nodes))) == list(range(small.n_nodes))
    with pytest.raises(KeyError):
        small.from_file_ids([99])


def test_round_trip_through_writer(small):
    again = parse_instance(format_instance(small))
    assert np.array_equal(again.coords, small.coords)
    assert np.array_equal(again.demand, small.demand)
    assert np.array_equal(again.file_ids, small.file_ids)
    assert (again.max_load, again.max_energy, again.h) == (small.max_load, small.max_energy, small.h)


BAD_DIMENSION = """NAME: bad
TYPE: EVRP
DIMENSION: 3
STATIONS: 0
CAPACITY: 10
ENERGY_CAPACITY: 10
ENERGY_CONSUMPTION: 1
EDGE_WEIGHT_FORMAT: EUC_2D
NODE_COORD_SECTION
1 0 0
2 1 1
DEMAND_SECTION
1 0
2 1
3 1
DEPOT_SECTION
1
-1
EOF
"""


def test_dimension_mismatch_reported():
    with pytest.raises(InstanceFormatError, match="dimension mismatch"):
        parse_instance(BAD_DIMENSION)


@pytest.mark.parametrize("edit, message", [
    (("CAPACITY : 100", "CAPACITY : 100\nWIBBLE : 3"), "unknown header"),
    (("DEMAND_SECTION", "JUNK_SECTION"), "unexpected content|missing section"),
    (("2 80 50", "2 eighty 50"), "non-numeric"),
    (("3 40", "3 400"), "exceeds capacity"),
    (("TYPE : EVRP", "TYPE : CVRP"), "unsupported TYPE"),
    (("EUC_2D", "GEO"), "edge weight"),
    (("ENERGY_CAPACITY : 120\n", ""), "missing header ENERGY_CAPACITY"),
    (("STATIONS_COORD_SECTION\n7\n8\n", "STATIONS_COORD_SECTION\n7\n"), "dimension mismatch"),
])
def test_malformed_files_rejected(edit, message):
    text = (DATA / "small.evrp").read_text()
    assert edit[0] in text
    with pytest.raises(InstanceFormatError, match=message):
        parse_instance(text.replace(*edit))


def test_header_keys_case_and_spacing_tolerant():
    text = (DATA / "small.evrp").read_text().replace("CAPACITY : 100", "capacity:100")
    assert parse_instance(text).max_load == 100


def test_distance_three_four_five():
    inst = make_instance([[0, 0], [3, 4]], [1])
    assert inst.distance(0, 1) == 5.0
    assert inst.distance(1, 1) == 0.0


def test_distance_not_rounded():
    inst = make_instance([[0, 0], [1, 1]], [1])
    assert inst.distance(0, 1) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_energy_is_h_times_distance():
    inst = make_instance([[0, 0], [6, 8]], [1], h=1.2)
    assert inst.energy(0, 1) == pytest.approx(12.0)
    assert inst.energy(1, 0) == inst.energy(0, 1)
    unit = make_instance([[0, 0], [6, 8], [1, 2]], [1, 1], h=1.0)
    assert np.array_equal(unit.energy_matrix, unit.dist)


def test_metric_properties_on_random_triples():
    rng = np.random.default_rng(0)
    inst = random_instance(40, 5, rng)
    d = inst.dist
    assert np.allclose(d, d.T) and np.all(d >= 0)
    a, b, c = rng.integers(inst.n_nodes, size=(1000, 3)).T
    assert np.all(d[a, c] <= d[a, b] + d[b, c] + 1e-12)


def test_nearest_station_geometric():
    # customers at (0,0) and (2,0), stations at (1,0) and (10,0)
    inst = make_instance([[5, 5], [0, 0], [2, 0], [1, 0], [10, 0]], [1, 1], n_s=2)
    assert inst.nearest_station(1, 2) == 3


def test_nearest_station_single_and_ties():
    one = make_instance([[0, 0], [1, 0], [5, 5]], [1], n_s=1)
    assert one.nearest_station(0, 1) == 2
    # two stations mirrored across the segment: lowest index wins
    tie = make_instance([[0, 0], [2, 0], [1, 1], [1, -1]], [1], n_s=2)
    assert tie.nearest_station(0, 1) == 2


def test_nearest_station_matches_exhaustive():
    rng = np.random.default_rng(5)
    inst = random_instance(21, 8, rng)
    for a, b in rng.integers(inst.n_nodes, size=(100, 2)):
        costs = [inst.distance(a, s) + inst.distance(s, b) for s in inst.stations]
        assert inst.nearest_station(a, b) == inst.n_c + 1 + int(np.argmin(costs))


def test_closeness_counts():
    inst = random_instance(21, 2, np.random.default_rng(1))
    assert len(inst.closest_customers(1, 1.0)) == 20
    assert len(inst.closest_customers(1, 0.10)) == 2
    tiny = random_instance(3, 1, np.random.default_rng(1))
    assert tiny.closeness_count(0.10) == 1
    # 0.1 * 30 must not become 4 through float error
    assert random_instance(31, 1, np.random.default_rng(1)).closeness_count(0.1) == 3


def test_closest_customers_match_bruteforce_sort():
    inst = random_instance(50, 5, np.random.default_rng(51))
    for c in inst.customers:
        exact = sorted((inst.distance(c, o) for o in inst.customers if o != c))
        for r in (0.1, 0.5, 1.0):
            k = inst.closeness_count(r)
            got = inst.closest_customers(c, r)
            assert len(set(got)) == k and c not in got
            assert sorted(inst.distance(c, o) for o in got) == pytest.approx(exact[:k])


def test_proximity_rows_are_permutations():
    inst = random_instance(30, 3, np.random.default_rng(2))
    for c in inst.customers:
        row = inst.proximity[c].tolist()
        assert sorted(row) == [o for o in inst.customers if o != c]
        dists = [inst.distance(c, o) for o in row]
        assert dists == sorted(dists)


def test_instance_invariants_enforced():
    with pytest.raises(InstanceFormatError):
        make_instance([[0, 0], [1, 1]], [0])
    with pytest.raises(InstanceFormatError):
        make_instance([[0, 0], [1, 1]], [200])
    with pytest.raises(InstanceFormatError):
        make_instance([[0, 0], [1, 1]], [1], h=0)


def test_instance_arrays_read_only(small):
    with pytest.raises(ValueError):
        small.coords[0, 0] = 1.0
    with pytest.raises(ValueError):
        small.dist[0, 1] = 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 25), st.integers(0, 4), st.integers(0, 10_000))
def test_writer_parser_round_trip_random(n_c, n_s, seed):
    inst = random_instance(n_c, n_s, np.random.default_rng(seed))
    again = parse_instance(format_instance(inst))
    assert np.array_equal(again.coords, inst.coords)
    assert np.array_equal(again.demand, inst.demand)

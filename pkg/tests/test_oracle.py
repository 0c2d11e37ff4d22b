"""The brute-force reference must itself be right on cases solvable by hand."""
import math

import pytest

from oracle import BruteForce


def bf(coords, demand, n_s=0, max_load=100, max_energy=1000, h=1.0):
    n_c = len(coords) - 1 - n_s
    return BruteForce(coords, [0, *demand, *([0] * n_s)], n_c, n_s, max_load, max_energy, h)


def test_single_customer_out_and_back():
    opt, tour = bf([[0, 0], [7, 0]], [1]).solve()
    assert opt == pytest.approx(14.0) and tour == [0, 1, 0]


def test_collinear_customers_share_a_route():
    opt, tour = bf([[0, 0], [3, 0], [6, 0]], [1, 1]).solve()
    assert opt == pytest.approx(12.0)


def test_capacity_forces_two_routes():
    opt, tour = bf([[0, 0], [3, 0], [6, 0]], [6, 6], max_load=10).solve()
    assert opt == pytest.approx(18.0)
    assert tour.count(0) == 3


def test_station_chain_each_way():
    opt, tour = bf([[0, 0], [12, 0], [5, 0], [10, 0]], [1], n_s=2, max_energy=6).solve()
    assert opt == pytest.approx(24.0)
    assert tour == [0, 2, 3, 1, 3, 2, 0]


def test_energy_rate_matters():
    # 2 * 5 * 1.2 = 12 > 11, so the station at (4, 0) is needed; several
    # placements tie at length 10
    opt, tour = bf([[0, 0], [5, 0], [4, 0]], [1], n_s=1, max_energy=11, h=1.2).solve()
    assert 2 in tour
    assert opt == pytest.approx(10.0)
    # at rate 1 the plain round trip fits and an off-line station only adds length
    opt, tour = bf([[0, 0], [5, 0], [4, 1]], [1], n_s=1, max_energy=11, h=1.0).solve()
    assert tour == [0, 1, 0] and opt == pytest.approx(10.0)


def test_unreachable_customer():
    opt, tour = bf([[0, 0], [30, 0], [100, 100]], [1], n_s=1, max_energy=10).solve()
    assert opt == math.inf and tour is None


def test_two_customers_enumeration_matches_formula():
    # both orders of one route versus two singleton routes, computed directly
    pts = [[0, 0], [4, 3], [-2, 5]]
    d = lambda a, b: math.dist(pts[a], pts[b])
    expected = min(d(0, 1) + d(1, 2) + d(2, 0), 2 * d(0, 1) + 2 * d(0, 2))
    assert bf(pts, [1, 1]).solve()[0] == pytest.approx(expected)

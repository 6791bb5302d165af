import numpy as np
import pytest

from memrc.netlist import (
    NETWORK_TYPES,
    NetworkTopology,
    TopologyError,
    build_incidence,
    format_netlist,
    generate_random,
    generate_ring,
    make_network,
    parse_netlist,
    read_netlist,
    write_netlist,
)


def test_smallest_circuit_incidence(two_node):
    inc = build_incidence(two_node)
    np.testing.assert_array_equal(inc.E_m, [[-1], [1]])
    np.testing.assert_array_equal(inc.E_i, [[-1], [1]])


def test_incidence_read_only(two_node):
    inc = build_incidence(two_node)
    with pytest.raises(ValueError):
        inc.E_m[0, 0] = 5


@pytest.mark.parametrize("kind", NETWORK_TYPES)
def test_incidence_columns(kind):
    inc = build_incidence(make_network(kind, 3))
    for E in (inc.E_m, inc.E_i):
        assert np.all(E.sum(axis=0) == 0)
        assert np.all((E == -1).sum(axis=0) == 1)
        assert np.all((E == 1).sum(axis=0) == 1)


def test_unidirectional_ring_row_sums():
    topo = generate_ring(10, "unidirectional", 0)
    E = build_incidence(topo).E_m
    assert topo.n_memristors == 20
    np.testing.assert_array_equal(E.sum(axis=1), np.zeros(10))
    np.testing.assert_array_equal((E == -1).sum(axis=1), np.full(10, 2))
    assert all(e == (s + 1) % 10 for s, e in topo.memristor_edges)


def test_ring_sizes():
    assert generate_ring(10, "random", 1).n_memristors == 20
    small = generate_ring(3, "unidirectional", 1)
    assert small.n_memristors == 6 and small.memristors_connected()


def test_ring_random_polarity_flips_some():
    topo = generate_ring(10, "random", 5)
    assert any(e != (s + 1) % 10 for s, e in topo.memristor_edges)


def test_determinism():
    assert generate_ring(10, "random", 7) == generate_ring(10, "random", 7)
    assert generate_random(20, 20, "random", 0.3, 7) == generate_random(20, 20, "random", 0.3, 7)


def test_random_network_properties():
    topo = generate_random(20, 20, "random", 0.3, 11)
    assert topo.n_nodes == 20 and topo.n_memristors == 20
    assert topo.memristors_connected()


def test_random_network_has_nonlocal_branch():
    topo = generate_random(20, 20, "unidirectional", 0.3, 2)
    nonlocal_ = [(s, e) for s, e in topo.memristor_edges if (e - s) % 20 not in (1, 19)]
    assert 1 <= len(nonlocal_) <= 6


def test_zero_rewire_is_plain_ring():
    topo = generate_random(12, 12, "unidirectional", 0.0, 3)
    assert topo.memristor_edges == tuple((k, (k + 1) % 12) for k in range(12))


def test_many_seeds_distinct():
    tops = {make_network("rand-rp", s).memristor_edges for s in range(100)}
    assert len(tops) >= 99


def test_connectivity_for_many_seeds():
    for s in range(50):
        assert make_network("rand-up", s).memristors_connected()


@pytest.mark.parametrize(
    "args",
    [
        (3, ((0, 0),), ((0, 1),)),  # self loop
        (3, ((0, 5),), ((0, 1),)),  # out of range
        (3, (), ((0, 1),)),  # no memristors
        (3, ((0, 1),), ()),  # no sources
        (4, ((0, 1), (2, 3)), ((0, 1),)),  # disconnected
    ],
)
def test_invalid_topologies(args):
    with pytest.raises(TopologyError):
        NetworkTopology(*args)


def test_unsatisfiable_rewire():
    with pytest.raises(TopologyError):
        generate_random(3, 3, "unidirectional", 0.5, 0)


def test_unknown_network_type():
    with pytest.raises(ValueError):
        make_network("star", 0)


def test_netlist_round_trip(tmp_path):
    topo = make_network("rand-rp", 4)
    back = parse_netlist(format_netlist(topo), topo.n_nodes)
    assert back.memristor_edges == topo.memristor_edges
    assert back.source_edges == topo.source_edges
    path = tmp_path / "net.txt"
    write_netlist(topo, path)
    assert read_netlist(path).memristor_edges == topo.memristor_edges


def test_netlist_parse_errors():
    with pytest.raises(TopologyError):
        parse_netlist("M 0 1\nR 0 1\n")
    with pytest.raises(TopologyError):
        parse_netlist("M 0 x\nV 0 1\n")
    topo = parse_netlist("# comment\nM 0 1  # inline\n\nV 0 1\n")
    assert topo.n_nodes == 2

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiwalk import (
    DisconnectedError,
    InvalidEdgeError,
    InvalidSizeError,
    ParseError,
    RetriesExhaustedError,
    build,
    enumerate_connected_graphs,
    generate_complete,
    generate_cycle,
    generate_gnp,
    generate_path,
    generate_torus,
    read_edge_list,
    write_edge_list,
)


class TestBuild:
    def test_k2(self):
        net = build(2, [(0, 1, 1.0)])
        assert net.n == 2 and net.edges == ((0, 1, 1.0),)

    def test_path3(self):
        net = build(3, [(0, 1, 1), (1, 2, 1)])
        assert net.m == 2

    def test_disconnected(self):
        with pytest.raises(DisconnectedError):
            build(3, [(0, 1, 1)])

    def test_self_loop(self):
        with pytest.raises(InvalidEdgeError):
            build(2, [(0, 0, 1.0), (0, 1, 1.0)])

    def test_duplicate_pair(self):
        with pytest.raises(InvalidEdgeError):
            build(2, [(0, 1, 1.0), (1, 0, 2.0)])

    def test_nonpositive_weight(self):
        with pytest.raises(InvalidEdgeError):
            build(2, [(0, 1, 0.0)])
        with pytest.raises(InvalidEdgeError):
            build(2, [(0, 1, -3.0)])

    def test_out_of_range(self):
        with pytest.raises(InvalidEdgeError):
            build(2, [(0, 2, 1.0)])

    def test_single_vertex(self):
        net = build(1, [])
        assert net.n == 1 and net.m == 0

    def test_immutable(self):
        net = build(2, [(0, 1, 1.0)])
        with pytest.raises(Exception):
            net.n = 5


class TestGenerators:
    def test_cycle3(self):
        net = generate_cycle(3)
        assert net.m == 3 and all(c == 1.0 for _, _, c in net.edges)

    def test_cycle_too_small(self):
        with pytest.raises(InvalidSizeError):
            generate_cycle(2)

    def test_complete4(self):
        assert generate_complete(4).m == 6

    def test_path2_equals_k2(self):
        assert generate_path(2).edges == generate_complete(2).edges

    def test_size_guards(self):
        with pytest.raises(InvalidSizeError):
            generate_path(1)
        with pytest.raises(InvalidSizeError):
            generate_complete(1)

    def test_torus_1d_is_cycle(self):
        assert generate_torus(1, 4).edges == generate_cycle(4).edges

    @pytest.mark.parametrize("d,n", [(1, 4), (2, 3), (3, 5)])
    def test_torus_counts(self, d, n):
        net = generate_torus(d, n)
        assert net.n == n**d
        assert net.m == d * n**d
        assert set(net.degrees()) == {2.0 * d}

    def test_torus_guards(self):
        with pytest.raises(InvalidSizeError):
            generate_torus(0, 4)
        with pytest.raises(InvalidSizeError):
            generate_torus(2, 2)

    def test_every_generator_passes_build(self):
        for net in [
            generate_cycle(5),
            generate_complete(5),
            generate_path(4),
            generate_torus(2, 3),
            generate_gnp(8, 0.5, 3),
        ]:
            rebuilt = build(net.n, net.edges)
            assert rebuilt.edges == net.edges


class TestGnp:
    def test_sure_edge(self):
        assert generate_gnp(2, 1.0, 0).edges == ((0, 1, 1.0),)

    def test_deterministic(self):
        a = generate_gnp(100, 0.1, 42)
        b = generate_gnp(100, 0.1, 42)
        assert a.edges == b.edges
        assert a.n == 100

    def test_replay_bernoulli_stream(self):
        # replay the documented sampling procedure: pairs in lexicographic
        # order, one uniform each, resampling with (seed, attempt) streams
        import itertools

        n, p, seed = 5, 0.5, 9
        net = generate_gnp(n, p, seed)
        pairs = list(itertools.combinations(range(n), 2))
        for attempt in range(1000):
            u = np.random.default_rng([seed, attempt]).random(len(pairs))
            chosen = tuple(
                (a, b, 1.0) for (a, b), hit in zip(pairs, u < p) if hit
            )
            adj = {i: set() for i in range(n)}
            for a, b, _ in chosen:
                adj[a].add(b)
                adj[b].add(a)
            seen, stack = {0}, [0]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if len(seen) == n:
                assert net.edges == chosen
                break
        else:
            pytest.fail("replay never found the connected sample")

    def test_retries_exhausted(self):
        with pytest.raises(RetriesExhaustedError):
            generate_gnp(40, 0.002, 1)

    def test_bad_p(self):
        with pytest.raises(InvalidSizeError):
            generate_gnp(5, 0.0, 1)
        with pytest.raises(InvalidSizeError):
            generate_gnp(5, 1.5, 1)


class TestEdgeListIO:
    def test_read_triangle(self, tmp_path):
        f = tmp_path / "tri.edges"
        f.write_text("3\n0 1 1.0\n1 2 1.0\n0 2 1.0\n")
        net = read_edge_list(f)
        assert net.n == 3 and net.m == 3

    def test_round_trip(self, tmp_path):
        net = build(3, [(0, 1, 0.1), (1, 2, 1 / 3), (0, 2, 2.5)])
        f = tmp_path / "g.edges"
        write_edge_list(net, f)
        again = read_edge_list(f)
        assert again.n == net.n and again.edges == net.edges

    @settings(deadline=None, max_examples=30)
    @given(
        weights=st.lists(
            st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
            min_size=3,
            max_size=3,
        )
    )
    def test_round_trip_is_exact(self, weights, tmp_path_factory):
        net = build(3, [(0, 1, weights[0]), (1, 2, weights[1]), (0, 2, weights[2])])
        f = tmp_path_factory.mktemp("io") / "g.edges"
        write_edge_list(net, f)
        assert read_edge_list(f).edges == net.edges

    def test_self_loop_line_rejected(self, tmp_path):
        f = tmp_path / "bad.edges"
        f.write_text("2\n0 0 1.0\n0 1 1.0\n")
        with pytest.raises(InvalidEdgeError):
            read_edge_list(f)

    def test_malformed_line_number(self, tmp_path):
        f = tmp_path / "bad.edges"
        f.write_text("2\n0 1 1.0\nnot an edge\n")
        with pytest.raises(ParseError) as err:
            read_edge_list(f)
        assert err.value.line == 3

    def test_comments_and_blanks_ignored(self, tmp_path):
        f = tmp_path / "g.edges"
        f.write_text("# header\n2\n\n# mid\n0 1 2.0\n")
        assert read_edge_list(f).edges == ((0, 1, 2.0),)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.edges"
        f.write_text("")
        with pytest.raises(ParseError):
            read_edge_list(f)


class TestEnumeration:
    def test_isomorphism_class_counts(self):
        # connected simple graphs up to isomorphism: 1, 1, 2, 6, 21 for n=1..5
        nets = enumerate_connected_graphs(5)
        by_n = {}
        for net in nets:
            by_n[net.n] = by_n.get(net.n, 0) + 1
        assert by_n == {1: 1, 2: 1, 3: 2, 4: 6, 5: 21}

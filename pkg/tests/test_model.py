import math

import pytest
from hypothesis import given, strategies as st

from pottstree.model import (
    ROOT,
    Configuration,
    ConfigurationError,
    ModelParams,
    ball,
    ball_size,
    boundary,
    direct_successors,
    edges,
    format_addr,
    is_valid,
    parent,
    parse_addr,
    rotate,
    sphere,
    sphere_size,
    subtree_ball,
)


class TestModelParams:
    def test_theta_from_J(self):
        p = ModelParams(q=3, J=math.log(4.5))
        assert p.theta == pytest.approx(4.5, rel=1e-15)

    def test_J_from_theta(self):
        p = ModelParams(q=3, theta=4.5)
        assert p.J == math.log(4.5)

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValueError, match="inconsistent"):
            ModelParams(q=3, J=1.0, theta=2.0)

    @pytest.mark.parametrize("kw", [{"q": 1, "J": 1.0}, {"q": 3, "k": 0, "J": 1.0}, {"q": 3}])
    def test_bad_arguments(self, kw):
        with pytest.raises(ValueError):
            ModelParams(**kw)

    def test_classifiable(self):
        ModelParams(q=3, theta=2.0).require_classifiable()
        with pytest.raises(ValueError, match="k=2"):
            ModelParams(q=3, k=3, theta=2.0).require_classifiable()
        with pytest.raises(ValueError, match="J > 0"):
            ModelParams(q=3, J=-0.5).require_classifiable()


class TestTree:
    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("n", range(0, 6))
    def test_cardinalities(self, k, n):
        p = ModelParams(q=2, k=k, J=1.0)
        assert len(sphere(p, n)) == sphere_size(p, n) == (1 if n == 0 else (k + 1) * k ** (n - 1))
        assert len(ball(p, n)) == ball_size(p, n) == sum(sphere_size(p, d) for d in range(n + 1))

    def test_root_has_k_plus_one_children(self):
        p = ModelParams(q=3, J=1.0)
        assert direct_successors(p, ROOT) == [(1,), (2,), (3,)]
        assert direct_successors(p, (3, 1)) == [(3, 1, 1), (3, 1, 2)]

    def test_ball_is_lexicographic(self):
        p = ModelParams(q=3, J=1.0)
        assert ball(p, 2)[:5] == [(), (1,), (1, 1), (1, 2), (2,)]
        assert ball(p, 3) == sorted(ball(p, 3))

    def test_parent_and_validity(self):
        p = ModelParams(q=3, J=1.0)
        assert parent((2, 1, 2)) == (2, 1)
        with pytest.raises(ValueError):
            parent(ROOT)
        assert is_valid(p, (3, 2))
        assert not is_valid(p, (4,))
        assert not is_valid(p, (1, 3))

    def test_subtree_and_rotation(self):
        p = ModelParams(q=3, J=1.0)
        sub1 = subtree_ball(p, 3, (1,))
        sub2 = subtree_ball(p, 3, (2,))
        assert [rotate(v, 1, 2) for v in sub1] == sub2
        assert len(sub1) == 1 + 2 + 4
        with pytest.raises(ValueError):
            rotate((2, 1), 1, 3)

    def test_boundary_of_ball_is_next_sphere(self):
        p = ModelParams(q=3, J=1.0)
        for n in range(4):
            assert boundary(p, ball(p, n)) == sphere(p, n + 1)

    def test_edges_of_ball(self):
        p = ModelParams(q=3, J=1.0)
        assert len(edges(ball(p, 3))) == ball_size(p, 3) - 1


class TestAddresses:
    def test_format(self):
        assert format_addr(ROOT) == "0"
        assert format_addr((2, 1)) == "0.2.1"

    @given(st.lists(st.integers(1, 9), max_size=8))
    def test_roundtrip(self, path):
        assert parse_addr(format_addr(tuple(path))) == tuple(path)

    @pytest.mark.parametrize("text", ["1.2", "0.x", "0.0", ""])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            parse_addr(text)


class TestConfiguration:
    def test_missing_vertex_named(self):
        conf = Configuration(3, {(1,): 2})
        with pytest.raises(ConfigurationError, match="0.2"):
            conf[(2,)]
        with pytest.raises(ConfigurationError, match="0.1.1"):
            conf.require([(1,), (1, 1)])

    def test_color_range(self):
        with pytest.raises(ConfigurationError):
            Configuration(3, {(1,): 4})

    def test_immutable(self):
        conf = Configuration(3, {(1,): 2})
        with pytest.raises(TypeError):
            conf.assignment[(1,)] = 1

    def test_json_roundtrip(self):
        p = ModelParams(q=3, J=1.0)
        conf = Configuration(3, {v: 1 + i % 3 for i, v in enumerate(ball(p, 2))})
        assert Configuration.from_json(3, conf.to_json()) == conf

    def test_permute_and_restrict(self):
        conf = Configuration(3, {(): 1, (1,): 2, (2,): 3})
        perm = {1: 2, 2: 3, 3: 1}
        assert conf.permute(perm).assignment == {(): 2, (1,): 3, (2,): 1}
        assert conf.restrict([(1,)]).domain == frozenset({(1,)})
        assert len(Configuration.constant(3, [(1,), (2,)], 2)) == 2

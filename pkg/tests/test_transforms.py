import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import homogeneous, matrix_from_wxyz, random_transform
from projmap import (
    FrameTree,
    ParseError,
    RigidTransform,
    UnknownFrameError,
    compose,
    invert,
    load_frame_tree,
    lookup,
    transform_point,
    transform_points,
)
from projmap.transforms import rotation_matrix

TOL = 1e-9


def assert_transform_close(a: RigidTransform, b: RigidTransform, tol=TOL):
    # compare by action: rotation matrices dodge the q/-q sign ambiguity
    assert np.allclose(rotation_matrix(a), rotation_matrix(b), atol=tol)
    assert np.allclose(a.translation, b.translation, atol=tol)


finite_coord = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)
quat_component = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@st.composite
def rigid_transforms(draw):
    q = np.array([draw(quat_component) for _ in range(4)])
    if np.linalg.norm(q) < 1e-3:
        q = np.array([1.0, 0.0, 0.0, 0.0])
    t = np.array([draw(finite_coord) for _ in range(3)])
    return RigidTransform(q, t)


class TestRigidTransform:
    def test_quaternion_normalized_on_construction(self):
        t = RigidTransform(np.array([2.0, 0.0, 0.0, 0.0]), np.zeros(3))
        assert abs(np.linalg.norm(t.rotation) - 1.0) < TOL

    def test_zero_quaternion_rejected(self):
        with pytest.raises(ValueError):
            RigidTransform(np.zeros(4), np.zeros(3))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            RigidTransform(np.array([1.0, 0, 0, np.nan]), np.zeros(3))
        with pytest.raises(ValueError):
            RigidTransform(np.array([1.0, 0, 0, 0]), np.array([0.0, np.inf, 0.0]))

    def test_immutable_arrays(self):
        t = RigidTransform.identity()
        with pytest.raises(ValueError):
            t.rotation[0] = 0.5


class TestCompose:
    def test_identity_left(self):
        t = RigidTransform.from_axis_angle([0, 0, 1], 0.3, (1, 2, 3))
        assert_transform_close(compose(RigidTransform.identity(), t), t, tol=1e-12)

    def test_compose_with_inverse_is_identity(self):
        t = RigidTransform.from_axis_angle([1, 2, 2], 1.1, (0.5, -0.25, 4.0))
        result = compose(t, invert(t))
        assert np.allclose(result.rotation, [1, 0, 0, 0], atol=TOL)
        assert np.allclose(result.translation, 0.0, atol=TOL)

    def test_two_quarter_turns_about_z(self):
        # oracle: brute-force 3x3 matrix product of two 90 degree z rotations
        quarter = RigidTransform.from_axis_angle([0, 0, 1], math.pi / 2)
        composed = compose(quarter, quarter)
        expected = matrix_from_wxyz(quarter.rotation) @ matrix_from_wxyz(quarter.rotation)
        assert np.allclose(rotation_matrix(composed), expected, atol=TOL)
        # half turn about z: diag(-1, -1, 1)
        assert np.allclose(rotation_matrix(composed), np.diag([-1.0, -1.0, 1.0]), atol=TOL)

    @settings(max_examples=60)
    @given(rigid_transforms(), rigid_transforms())
    def test_matches_homogeneous_matrix_oracle(self, a, b):
        expected = homogeneous(a) @ homogeneous(b)
        got = homogeneous(compose(a, b))
        assert np.allclose(got, expected, atol=1e-9)

    @settings(max_examples=30)
    @given(st.lists(rigid_transforms(), min_size=1, max_size=40))
    def test_quaternion_norm_stays_unit_over_chains(self, chain):
        acc = RigidTransform.identity()
        for t in chain:
            acc = compose(acc, t)
            assert abs(np.linalg.norm(acc.rotation) - 1.0) < TOL


class TestTransformPoint:
    def test_identity(self):
        assert np.allclose(transform_point(RigidTransform.identity(), (1, 2, 3)), (1, 2, 3))

    def test_pure_translation(self):
        t = RigidTransform(np.array([1.0, 0, 0, 0]), np.array([0.0, 0.0, 1.0]))
        assert np.allclose(transform_point(t, (0, 0, 0)), (0, 0, 1))

    def test_quarter_turn_about_z(self):
        t = RigidTransform.from_axis_angle([0, 0, 1], math.pi / 2)
        oracle = matrix_from_wxyz(t.rotation) @ np.array([1.0, 0.0, 0.0])
        got = transform_point(t, (1, 0, 0))
        assert np.allclose(got, oracle, atol=TOL)
        assert np.allclose(got, (0, 1, 0), atol=TOL)

    @settings(max_examples=50)
    @given(rigid_transforms(), st.lists(finite_coord, min_size=3, max_size=3))
    def test_matches_rotation_matrix_oracle(self, t, p):
        expected = matrix_from_wxyz(t.rotation) @ np.array(p) + t.translation
        assert np.allclose(transform_point(t, p), expected, atol=1e-9)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(7)
        t = random_transform(rng)
        pts = rng.uniform(-5, 5, size=(17, 3))
        batch = transform_points(t, pts)
        for row, p in zip(batch, pts):
            assert np.array_equal(row, transform_point(t, p))


def three_deep_tree():
    t1 = RigidTransform.from_axis_angle([0, 0, 1], 0.4, (1.0, 0.0, 0.0))
    t2 = RigidTransform.from_axis_angle([0, 1, 0], -0.7, (0.0, 2.0, 0.5))
    tree = FrameTree.from_edges([("p1", "root", t1), ("p2", "p1", t2)])
    return tree, t1, t2


class TestFrameTree:
    def test_lookup_self_is_identity(self):
        tree, _, _ = three_deep_tree()
        assert_transform_close(lookup(tree, "p1", "p1"), RigidTransform.identity())

    def test_lookup_inverse_symmetry(self):
        tree, _, _ = three_deep_tree()
        fwd = lookup(tree, "p2", "root")
        back = lookup(tree, "root", "p2")
        assert np.allclose(fwd.rotation, invert(back).rotation, atol=TOL)
        assert np.allclose(fwd.translation, invert(back).translation, atol=TOL)

    def test_three_deep_chain_matches_edge_composition(self):
        tree, t1, t2 = three_deep_tree()
        # oracle: homogeneous path composition root<-p1<-p2
        expected = homogeneous(t1) @ homogeneous(t2)
        assert np.allclose(homogeneous(lookup(tree, "p2", "root")), expected, atol=TOL)

    def test_unknown_frame(self):
        tree, _, _ = three_deep_tree()
        with pytest.raises(UnknownFrameError) as info:
            lookup(tree, "p1", "nope")
        assert info.value.frame == "nope"
        with pytest.raises(UnknownFrameError):
            lookup(tree, "nope", "p1")

    def test_consistency_across_triples(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            tree = FrameTree.from_edges(
                [
                    ("a", "world", random_transform(rng)),
                    ("b", "a", random_transform(rng)),
                    ("c", "world", random_transform(rng)),
                    ("d", "c", random_transform(rng)),
                ]
            )
            names = tree.names()
            a, b, c = (names[int(k)] for k in rng.integers(0, len(names), size=3))
            direct = lookup(tree, a, c)
            chained = compose(lookup(tree, b, c), lookup(tree, a, b))
            assert np.allclose(direct.rotation, chained.rotation, atol=TOL)
            assert np.allclose(direct.translation, chained.translation, atol=TOL)

    def test_point_round_trips_between_frames(self):
        rng = np.random.default_rng(3)
        tree = FrameTree.from_edges(
            [("a", "world", random_transform(rng)), ("b", "world", random_transform(rng))]
        )
        for _ in range(20):
            p = rng.uniform(-10, 10, size=3)
            there = transform_point(lookup(tree, "a", "b"), p)
            back = transform_point(lookup(tree, "b", "a"), there)
            assert np.allclose(back, p, atol=TOL)

    def test_rejects_cycle(self):
        t = RigidTransform.identity()
        with pytest.raises(ValueError, match="cycle"):
            FrameTree.from_edges([("a", "b", t), ("b", "a", t)])

    def test_rejects_duplicate_child(self):
        t = RigidTransform.identity()
        with pytest.raises(ValueError, match="duplicate"):
            FrameTree.from_edges([("a", "world", t), ("a", "world", t)])

    def test_rejects_multiple_roots(self):
        t = RigidTransform.identity()
        with pytest.raises(ValueError, match="multiple root"):
            FrameTree.from_edges([("a", "world", t), ("b", "mars", t)])

    def test_rejects_empty_name(self):
        with pytest.raises(ValueError):
            FrameTree.from_edges([("", "world", RigidTransform.identity())])

    def test_rejects_self_parent(self):
        t = RigidTransform.identity()
        with pytest.raises(ValueError):
            FrameTree.from_edges([("a", "a", t), ("b", "world", t)])

    def test_contains_and_names(self):
        tree, _, _ = three_deep_tree()
        assert "root" in tree and "p2" in tree and "zzz" not in tree
        assert tree.root == "root"
        assert set(tree.names()) == {"root", "p1", "p2"}


FRAME_YAML = """\
- child: projector_mount
  parent: world
  translation: [0.0, 0.1, 1.5]
  rotation_wxyz: [1.0, 0.0, 0.0, 0.0]
- child: projector_optical
  parent: projector_mount
  translation: [0.02, 0.0, 0.05]
  rotation_wxyz: [2.0, 0.0, 0.0, 0.0]
"""


class TestLoadFrameTree:
    def test_loads_and_normalizes(self):
        tree = load_frame_tree(FRAME_YAML)
        assert tree.root == "world"
        edge = tree.frames["projector_optical"][1]
        assert abs(np.linalg.norm(edge.rotation) - 1.0) < TOL
        assert np.allclose(edge.rotation, [1, 0, 0, 0])

    def test_missing_key(self):
        with pytest.raises(ParseError, match="rotation_wxyz"):
            load_frame_tree("- {child: a, parent: b, translation: [0, 0, 0]}")

    def test_bad_translation_length(self):
        doc = "- {child: a, parent: b, translation: [0, 0], rotation_wxyz: [1, 0, 0, 0]}"
        with pytest.raises(ParseError, match="translation"):
            load_frame_tree(doc)

    def test_cycle_reported_as_parse_error(self):
        doc = (
            "- {child: a, parent: b, translation: [0, 0, 0], rotation_wxyz: [1, 0, 0, 0]}\n"
            "- {child: b, parent: a, translation: [0, 0, 0], rotation_wxyz: [1, 0, 0, 0]}\n"
        )
        with pytest.raises(ParseError):
            load_frame_tree(doc)

    def test_not_a_list(self):
        with pytest.raises(ParseError):
            load_frame_tree("just: a mapping")

    def test_invalid_yaml(self):
        with pytest.raises(ParseError):
            load_frame_tree(b"child: [unclosed")

    def test_empty_document_has_no_root(self):
        with pytest.raises(ParseError):
            load_frame_tree("")

"""Geometry and discrete calculus on finite lattice boxes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfsurf.lattice import (Box, EdgeField, VertexField, divergence_interior,
                            divergence_of_flux, gradient, make_box,
                            window_slices)


def random_field(box, rng):
    field = VertexField(box)
    field.data[box.plus_mask] = rng.standard_normal(int(box.plus_mask.sum()))
    return field


# -- construction and counting ------------------------------------------


def test_interval_vertices_and_boundary():
    box = make_box(1, (0,), 1)
    assert list(box.vertices()) == [(-1,), (0,), (1,)]
    assert list(box.boundary_vertices()) == [(-2,), (2,)]


def test_square_counts():
    box = make_box(2, (0, 0), 1)
    assert box.n_interior == 9
    assert sum(1 for _ in box.boundary_vertices()) == 12


def test_large_box_count_is_side_to_the_d():
    box = make_box(4, (0, 0, 0, 0), 8)
    assert box.n_interior == 17 ** 4 == 83521


def test_rejects_nonpositive_dimension():
    with pytest.raises(ValueError):
        make_box(0, (), 1)


def test_rejects_negative_radius():
    with pytest.raises(ValueError):
        make_box(2, (0, 0), -1)


def test_boundary_is_exactly_the_adjacent_outside_vertices():
    box = make_box(2, (3, -1), 2)
    boundary = set(box.boundary_vertices())
    adjacent = set()
    for x in box.vertices():
        for y in box.neighbors(x):
            if not box.contains(y):
                adjacent.add(y)
    assert boundary == adjacent


def test_enumerations_are_deterministic():
    a = make_box(3, (1, 2, 3), 2)
    b = make_box(3, (1, 2, 3), 2)
    assert list(a.vertices()) == list(b.vertices())
    assert list(a.boundary_vertices()) == list(b.boundary_vertices())
    assert list(a.edges("touching")) == list(b.edges("touching"))


def test_touching_edges_enumerated_once_per_orientation():
    box = make_box(2, (0, 0), 1)
    edges = list(box.edges("touching"))
    assert len(edges) == len(set(edges)) == box.edge_count("touching")
    for x, y in edges:
        assert box.contains(x) or box.contains(y)
        assert box.contains_plus(x) and box.contains_plus(y)
    # every interior-adjacent pair appears in exactly one orientation
    for x, y in edges:
        assert (y, x) not in set(edges)


def test_touching_edge_count_interval():
    # {-1,0,1} plus boundary {-2,2}: edges -2|-1, -1|0, 0|1, 1|2
    assert make_box(1, (0,), 1).edge_count("touching") == 4


# -- fields --------------------------------------------------------------


def test_vertex_field_rejects_outside_queries():
    box = make_box(2, (0, 0), 1)
    field = VertexField(box)
    with pytest.raises(KeyError):
        field[(3, 0)]
    with pytest.raises(KeyError):
        field[(2, 2)] = 1.0  # corner of the cube, not in Lambda^+


def test_edge_field_antisymmetry_is_structural():
    box = make_box(2, (0, 0), 1)
    chi = EdgeField(box, "touching")
    chi.set((0, 0), (1, 0), 2.5)
    assert chi.value((0, 0), (1, 0)) == 2.5
    assert chi.value((1, 0), (0, 0)) == -2.5
    chi.set((1, 1), (0, 1), 4.0)  # storing via the reversed orientation
    assert chi.value((0, 1), (1, 1)) == -4.0


def test_edge_field_rejects_non_edges():
    box = make_box(2, (0, 0), 1)
    chi = EdgeField(box, "touching")
    with pytest.raises(ValueError):
        chi.value((0, 0), (1, 1))
    with pytest.raises(KeyError):
        chi.value((4, 0), (5, 0))


# -- gradient ------------------------------------------------------------


def test_gradient_of_constant_is_zero():
    box = make_box(2, (0, 0), 2)
    field = VertexField.from_function(box, lambda x: 3.7)
    assert gradient(field).sup_norm() == 0.0


def test_gradient_interval_values():
    box = make_box(1, (0,), 1)
    field = VertexField(box)
    field[(-1,)], field[(0,)], field[(1,)] = 0.0, 2.0, 5.0
    grad = gradient(field)
    assert grad.value((-1,), (0,)) == 2.0
    assert grad.value((0,), (1,)) == 3.0


@given(p=st.tuples(st.integers(-3, 3), st.integers(-3, 3)))
def test_gradient_of_linear_field_is_the_tilt(p):
    box = make_box(2, (0, 0), 2)
    field = VertexField.from_function(
        box, lambda x: p[0] * x[0] + p[1] * x[1])
    grad = gradient(field, "touching")
    for x, y in box.edges("touching"):
        axis = 0 if y[0] != x[0] else 1
        assert grad.value(x, y) == p[axis]


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1))
def test_gradient_sums_to_zero_around_plaquettes(seed):
    box = make_box(2, (0, 0), 2)
    field = random_field(box, np.random.default_rng(seed))
    grad = gradient(field)
    for x in box.vertices():
        cycle = [x, (x[0] + 1, x[1]), (x[0] + 1, x[1] + 1), (x[0], x[1] + 1)]
        if not all(box.contains_plus(v) for v in cycle):
            continue
        total = sum(grad.value(cycle[i], cycle[(i + 1) % 4]) for i in range(4))
        assert abs(total) < 1e-12


# -- divergence ----------------------------------------------------------


def test_divergence_of_zero_field_gradient_is_zero():
    box = make_box(2, (0, 0), 2)
    grad = gradient(VertexField(box))
    for x in box.vertices():
        assert divergence_of_flux(grad, x) == 0.0


def test_divergence_is_the_discrete_laplacian():
    box = make_box(1, (0,), 1)
    field = VertexField(box)
    field[(0,)] = 1.0
    assert divergence_of_flux(gradient(field), (0,)) == -2.0


def test_linear_fields_are_harmonic():
    box = make_box(3, (0, 0, 0), 2)
    field = VertexField.from_function(
        box, lambda x: 2.0 * x[0] - x[1] + 3.0 * x[2])
    grad = gradient(field)
    for x in box.vertices():
        assert abs(divergence_of_flux(grad, x)) < 1e-12


def test_divergence_rejects_boundary_vertices():
    box = make_box(2, (0, 0), 1)
    grad = gradient(VertexField(box))
    with pytest.raises(ValueError):
        divergence_of_flux(grad, (2, 0))


def test_callable_flux_requires_a_box():
    with pytest.raises(ValueError):
        divergence_of_flux(lambda x, y: 1.0, (0, 0))


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1))
def test_divergence_theorem_on_random_fields(seed):
    # Interior divergences sum to the net flux through boundary edges.
    box = make_box(2, (0, 0), 2)
    field = random_field(box, np.random.default_rng(seed))
    grad = gradient(field, "touching")
    interior_sum = sum(divergence_of_flux(grad, x) for x in box.vertices())
    outward_flux = 0.0
    for x, y in box.edges("touching"):
        if box.contains(x) and not box.contains(y):
            outward_flux += grad.value(x, y)
        elif box.contains(y) and not box.contains(x):
            outward_flux += grad.value(y, x)
    assert interior_sum == pytest.approx(outward_flux, abs=1e-10)


def test_vectorized_divergence_matches_per_vertex():
    rng = np.random.default_rng(7)
    box = make_box(2, (1, -2), 2)
    grad = gradient(random_field(box, rng), "touching")
    cube = divergence_interior(grad)
    for x in box.vertices():
        assert cube[box.local_index(x)] == pytest.approx(
            divergence_of_flux(grad, x), abs=1e-12)


# -- windows -------------------------------------------------------------


def test_window_slices_address_the_subcube():
    parent = make_box(2, (0, 0), 3)
    window = make_box(2, (1, 1), 1)
    field = VertexField.from_function(parent, lambda x: 10 * x[0] + x[1])
    sub = field.data[window_slices(window, parent)]
    assert sub.shape == window.shape
    assert sub[window.local_index((1, 1))] == 11.0


def test_window_slices_reject_protruding_windows():
    parent = make_box(2, (0, 0), 2)
    with pytest.raises(ValueError):
        window_slices(make_box(2, (2, 0), 2), parent)

#!/usr/bin/env python3
"""Regenerate the packaged benchmark meshes.

The curved benchmark domains are meshed once with structured transfinite
grids and committed as data files; the library only ever loads the files.

problem1: unit square, 20x20 elements (also available via the generator).
problem2: right half of a 1 m square with a central hole of radius 0.25,
          C-grid between the half circle and the outer three edges,
          40 x 12 = 480 elements. Boundary sets: hole, left, bottom,
          right, top.
problem3: half ellipse (semi-axes 1.0 and 0.5, straight edge at x=0) with
          two holes of radius 0.1 centered at (0.25, 0) and (0.65, 0).
          Two O-grid blocks welded along the vertical cut x = 0.475,
          2 x (32 x 10) = 640 elements. Boundary sets: hole1, hole2,
          left, outer.

Usage: python3 scripts/generate_benchmark_meshes.py [outdir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fgmopt.mesh import BoundarySet, Mesh, generate_rectangle, save_mesh  # noqa: E402


def quad9_grid_elements(node_id, ns, nr, periodic_s):
    """Connectivity of a structured (ns x nr)-element grid.

    node_id(it, is_) maps radial index 0..2nr and angular index 0..2ns
    (mod 2ns when periodic) to a global node id. Local xi runs radially
    outward, eta along increasing s, which keeps Jacobians positive for
    star-shaped blends.
    """
    elements = []
    for es in range(ns):
        for et in range(nr):
            t0, s0 = 2 * et, 2 * es
            n = lambda dt, ds: node_id(t0 + dt, s0 + ds)
            elements.append([
                n(0, 0), n(2, 0), n(2, 2), n(0, 2),
                n(1, 0), n(2, 1), n(1, 2), n(0, 1),
                n(1, 1),
            ])
    return elements


def build_annular_block(inner_fn, outer_pts, nr, periodic_s):
    """Transfinite blend between an inner curve and an outer polyline.

    outer_pts has 2*ns (+1 when open) stops; inner_fn(i_s) gives the inner
    point for stop i_s. Returns (coords, elements, node_id fn, ns).
    """
    n_stops = len(outer_pts)
    ns = n_stops // 2 if periodic_s else (n_stops - 1) // 2
    n_s_nodes = 2 * ns if periodic_s else 2 * ns + 1
    coords = np.empty(((2 * nr + 1) * n_s_nodes, 2))

    def node_id(it, is_):
        return it * n_s_nodes + (is_ % n_s_nodes if periodic_s else is_)

    for is_ in range(n_s_nodes):
        p_in = inner_fn(is_)
        p_out = outer_pts[is_]
        for it in range(2 * nr + 1):
            t = it / (2 * nr)
            coords[node_id(it, is_)] = (1 - t) * np.asarray(p_in) + t * np.asarray(p_out)
    elements = quad9_grid_elements(node_id, ns, nr, periodic_s)
    return coords, elements, node_id, ns


def polyline_stops(sides):
    """Concatenate per-side stop points; each side is (point_fn, n_elems).

    point_fn(u) with u in [0,1]; consecutive sides share endpoints. Returns
    the open list of 2*sum(n)+1 stops.
    """
    stops = []
    for k, (fn, n) in enumerate(sides):
        start = 0 if k == 0 else 1
        for j in range(start, 2 * n + 1):
            stops.append(np.asarray(fn(j / (2 * n)), dtype=float))
    return stops


def line(p0, p1):
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    return lambda u: (1 - u) * p0 + u * p1


def ellipse_arc(a, b, psi0, psi1):
    return lambda u: np.array([a * np.cos(psi0 + u * (psi1 - psi0)),
                               b * np.sin(psi0 + u * (psi1 - psi0))])


def make_problem2():
    r, half = 0.25, 0.5
    ns_bottom, ns_right, ns_top, nr = 10, 20, 10, 12
    sides = [
        (line((0.0, -half), (half, -half)), ns_bottom),
        (line((half, -half), (half, half)), ns_right),
        (line((half, half), (0.0, half)), ns_top),
    ]
    outer = polyline_stops(sides)
    n_stops = len(outer)

    def inner_fn(is_):
        theta = -np.pi / 2 + np.pi * is_ / (n_stops - 1)
        return np.array([r * np.cos(theta), r * np.sin(theta)])

    coords, elements, nid, ns = build_annular_block(inner_fn, outer, nr, periodic_s=False)
    assert ns == ns_bottom + ns_right + ns_top

    def srange_nodes(lo, hi, it):
        return [nid(it, s) for s in range(lo, hi + 1)]

    t_out = 2 * nr
    sets = {
        "hole": BoundarySet("hole", np.array([nid(0, s) for s in range(2 * ns + 1)]),
                            [(es * nr + 0, 3) for es in range(ns)]),
        "bottom": BoundarySet("bottom", np.array(srange_nodes(0, 2 * ns_bottom, t_out)),
                              [(es * nr + nr - 1, 1) for es in range(ns_bottom)]),
        "right": BoundarySet("right",
                             np.array(srange_nodes(2 * ns_bottom, 2 * (ns_bottom + ns_right), t_out)),
                             [(es * nr + nr - 1, 1) for es in range(ns_bottom, ns_bottom + ns_right)]),
        "top": BoundarySet("top",
                           np.array(srange_nodes(2 * (ns_bottom + ns_right), 2 * ns, t_out)),
                           [(es * nr + nr - 1, 1) for es in range(ns_bottom + ns_right, ns)]),
        "left": BoundarySet("left",
                            np.array([nid(it, 0) for it in range(2 * nr + 1)]
                                     + [nid(it, 2 * ns) for it in range(2 * nr + 1)]),
                            [(0 * nr + et, 0) for et in range(nr)]
                            + [((ns - 1) * nr + et, 2) for et in range(nr)]),
    }
    return Mesh(coords, elements, sets)


def weld(coords_list, elements_list, tol=1e-9):
    """Merge node grids, unifying duplicate coordinates."""
    mapping = {}
    out_coords = []
    elem_out = []
    for coords, elements in zip(coords_list, elements_list):
        local = np.empty(len(coords), dtype=np.int64)
        for i, (x, y) in enumerate(coords):
            key = (round(x / tol), round(y / tol))
            if key not in mapping:
                mapping[key] = len(out_coords)
                out_coords.append((x, y))
            local[i] = mapping[key]
        for conn in elements:
            elem_out.append([int(local[n]) for n in conn])
    return np.array(out_coords), np.array(elem_out, dtype=np.int64), mapping


def make_problem3():
    a, b, r = 1.0, 0.5, 0.1
    c1, c2 = np.array([0.25, 0.0]), np.array([0.65, 0.0])
    x_cut = 0.475
    y_cut = b * np.sqrt(1 - (x_cut / a) ** 2)
    psi_cut = np.arccos(x_cut / a)
    n_cut, n_arc_l, n_left, n_arc_r, nr = 8, 8, 8, 12, 10

    # left block loop, counterclockwise around hole 1
    sides_l = [
        (line((x_cut, -y_cut), (x_cut, y_cut)), n_cut),
        (ellipse_arc(a, b, psi_cut, np.pi / 2), n_arc_l),
        (line((0.0, b), (0.0, -b)), n_left),
        (ellipse_arc(a, b, -np.pi / 2, -psi_cut), n_arc_l),
    ]
    # right block loop, counterclockwise around hole 2
    sides_r = [
        (line((x_cut, y_cut), (x_cut, -y_cut)), n_cut),
        (ellipse_arc(a, b, -psi_cut, 0.0), n_arc_r),
        (ellipse_arc(a, b, 0.0, psi_cut), n_arc_r),
    ]

    blocks = []
    for center, sides in ((c1, sides_l), (c2, sides_r)):
        outer_open = polyline_stops(sides)
        # periodic loop: drop the repeated final stop
        assert np.allclose(outer_open[0], outer_open[-1])
        outer = outer_open[:-1]
        angles = np.unwrap(np.arctan2(
            [p[1] - center[1] for p in outer], [p[0] - center[0] for p in outer]
        ))
        assert np.all(np.diff(angles) > 0), "loop must be star-shaped around the hole"
        closing = angles[0] + 2 * np.pi - angles[-1]
        assert 0 < closing < np.pi, "loop must wind exactly once around the hole"

        def inner_fn(is_, center=center, angles=angles):
            return center + r * np.array([np.cos(angles[is_]), np.sin(angles[is_])])

        coords, elements, nid, ns = build_annular_block(inner_fn, outer, nr, periodic_s=True)
        blocks.append((coords, elements, nid, ns, sides))

    coords, elements, mapping = weld([b[0] for b in blocks], [b[1] for b in blocks])

    def remap(block_idx, it, is_):
        c = blocks[block_idx][0]
        nid = blocks[block_idx][2]
        x, y = c[nid(it, is_)]
        return mapping[(round(x / 1e-9), round(y / 1e-9))]

    n_elem_l = blocks[0][3] * nr
    t_out = 2 * nr

    def ring_edges(block_idx, offset):
        ns = blocks[block_idx][3]
        return ([(offset + es * nr + 0, 3) for es in range(ns)],
                [(offset + es * nr + nr - 1, 1) for es in range(ns)])

    hole1_edges, outer_l = ring_edges(0, 0)
    hole2_edges, outer_r = ring_edges(1, n_elem_l)

    ns_l = blocks[0][3]
    hole1_nodes = sorted({remap(0, 0, s) for s in range(2 * ns_l)})
    hole2_nodes = sorted({remap(1, 0, s) for s in range(2 * blocks[1][3])})

    # s-stop layout of the left loop: cut [0..2*n_cut], top arc, left edge, bottom arc
    s_left_lo = 2 * (n_cut + n_arc_l)
    s_left_hi = s_left_lo + 2 * n_left
    left_nodes = sorted({remap(0, t_out, s) for s in range(s_left_lo, s_left_hi + 1)})
    left_edges = [(0 + es * nr + nr - 1, 1) for es in range(n_cut + n_arc_l, n_cut + n_arc_l + n_left)]

    # outer curved edge: both arcs of the left loop plus both arcs of the right loop
    outer_nodes = set()
    for s in range(2 * n_cut, s_left_lo + 1):
        outer_nodes.add(remap(0, t_out, s))
    for s in range(s_left_hi, 2 * (n_cut + 2 * n_arc_l + n_left) + 1):
        outer_nodes.add(remap(0, t_out, s % (2 * blocks[0][3])))
    for s in range(2 * n_cut, 2 * (n_cut + 2 * n_arc_r) + 1):
        outer_nodes.add(remap(1, t_out, s % (2 * blocks[1][3])))
    outer_edges = ([(es * nr + nr - 1, 1) for es in range(n_cut, n_cut + n_arc_l)]
                   + [(es * nr + nr - 1, 1) for es in range(n_cut + n_arc_l + n_left, blocks[0][3])]
                   + [(n_elem_l + es * nr + nr - 1, 1) for es in range(n_cut, blocks[1][3])])

    sets = {
        "hole1": BoundarySet("hole1", np.array(hole1_nodes), hole1_edges),
        "hole2": BoundarySet("hole2", np.array(hole2_nodes), hole2_edges),
        "left": BoundarySet("left", np.array(left_nodes), left_edges),
        "outer": BoundarySet("outer", np.array(sorted(outer_nodes)), outer_edges),
    }
    return Mesh(coords, elements, sets)


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "fgmopt" / "meshes"
    )
    outdir.mkdir(parents=True, exist_ok=True)

    m1 = generate_rectangle(1.0, 1.0, 20, 20)
    save_mesh(m1, outdir / "problem1.msh")
    print(f"problem1: {m1.n_elements} elements, {m1.n_nodes} nodes, area {m1.total_area():.8f}")

    m2 = make_problem2()
    save_mesh(m2, outdir / "problem2.msh")
    exact2 = 0.5 - np.pi * 0.25 ** 2 / 2
    print(f"problem2: {m2.n_elements} elements, {m2.n_nodes} nodes, "
          f"area {m2.total_area():.8f} (exact {exact2:.8f}, "
          f"err {abs(m2.total_area() - exact2) / exact2:.2e})")

    m3 = make_problem3()
    save_mesh(m3, outdir / "problem3.msh")
    exact3 = np.pi * 1.0 * 0.5 / 2 - 2 * np.pi * 0.1 ** 2
    print(f"problem3: {m3.n_elements} elements, {m3.n_nodes} nodes, "
          f"area {m3.total_area():.8f} (exact {exact3:.8f}, "
          f"err {abs(m3.total_area() - exact3) / exact3:.2e})")


if __name__ == "__main__":
    main()

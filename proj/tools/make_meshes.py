#!/usr/bin/env python3
"""Deterministic generator for the committed mesh files.

Writes macro quadrilateral meshes (L-shaped domain, patch squares) and
periodic unit-cell triangle meshes (two-phase with a circular inclusion,
homogeneous, and small structured grids) in the plain text format the solver
reads.  All randomness is seeded; rerunning reproduces byte-identical files.

Usage: python3 tools/make_meshes.py [data_dir]
"""

import os
import sys

import numpy as np
from scipy.spatial import Delaunay


def fmt(v):
    return "%.17g" % v


def write_mesh(path, nodes, elements, facets=None):
    """elements: list of (kind, [node ids], region); facets: list of (n0, n1, tag)."""
    with open(path, "w") as f:
        f.write("nodes %d\n" % len(nodes))
        for i, (x, y) in enumerate(nodes):
            f.write("%d %s %s\n" % (i, fmt(x), fmt(y)))
        f.write("elements %d\n" % len(elements))
        for i, (kind, conn, region) in enumerate(elements):
            f.write("%d %s %s %d\n" % (i, kind, " ".join(str(c) for c in conn), region))
        if facets:
            f.write("facets %d\n" % len(facets))
            for i, (a, b, tag) in enumerate(facets):
                f.write("%d %d %d %d\n" % (i, a, b, tag))
    print("wrote %-28s nodes=%-5d elements=%-5d facets=%d"
          % (os.path.relpath(path), len(nodes), len(elements), len(facets or [])))


# ---- macro meshes -----------------------------------------------------------

def lshape(k):
    """L-shaped domain [0,0.3]x[0,0.1] + [0,0.1]x[0.1,0.2]; k*k quads per
    0.1-square.  Facet tag 1: left edge (x=0); tag 2: right edge (x=0.3)."""
    h = 0.1 / k
    ids = {}
    nodes = []

    def nid(i, j):
        if (i, j) not in ids:
            ids[(i, j)] = len(nodes)
            nodes.append((i * h, j * h))
        return ids[(i, j)]

    elements = []
    cells = []
    for ci in range(3):          # bottom arm: 3 squares
        cells.append((ci, 0))
    cells.append((0, 1))         # upper square
    for (cx, cy) in cells:
        for jj in range(k):
            for ii in range(k):
                i0, j0 = cx * k + ii, cy * k + jj
                conn = [nid(i0, j0), nid(i0 + 1, j0), nid(i0 + 1, j0 + 1), nid(i0, j0 + 1)]
                elements.append(("quad4", conn, 1))

    facets = []
    for j in range(2 * k):  # left edge, y in [0, 0.2]
        facets.append((nid(0, j), nid(0, j + 1), 1))
    for j in range(k):      # right edge, y in [0, 0.1]
        facets.append((nid(3 * k, j), nid(3 * k, j + 1), 2))
    return nodes, elements, facets


def patch_square(n, distort_seed=None):
    """Unit square, n*n quads.  Tags: 1 left, 2 right, 3 bottom, 4 top."""
    h = 1.0 / n
    nodes = [(i * h, j * h) for j in range(n + 1) for i in range(n + 1)]
    if distort_seed is not None:
        rng = np.random.default_rng(distort_seed)
        pts = np.array(nodes)
        interior = (pts[:, 0] > 1e-12) & (pts[:, 0] < 1 - 1e-12) & \
                   (pts[:, 1] > 1e-12) & (pts[:, 1] < 1 - 1e-12)
        pts[interior] += rng.uniform(-0.25 * h, 0.25 * h, size=(interior.sum(), 2))
        nodes = [tuple(p) for p in pts]

    def nid(i, j):
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            elements.append(("quad4", [nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)], 1))
    facets = []
    for j in range(n):
        facets.append((nid(0, j), nid(0, j + 1), 1))
        facets.append((nid(n, j), nid(n, j + 1), 2))
    for i in range(n):
        facets.append((nid(i, 0), nid(i + 1, 0), 3))
        facets.append((nid(i, n), nid(i + 1, n), 4))
    return nodes, elements, facets


# ---- periodic unit cells ----------------------------------------------------

def structured_cell(n, inclusion):
    """n*n quad grid on [0,1]^2; inclusion: set of (i,j) element indices with
    region 2."""
    h = 1.0 / n
    nodes = [(i * h, j * h) for j in range(n + 1) for i in range(n + 1)]

    def nid(i, j):
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            region = 2 if (i, j) in inclusion else 1
            elements.append(("quad4", [nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)],
                             region))
    return nodes, elements, []


def unstructured_cell(side_div, ring_n, grid_n, seed, target_total=None, inclusion=True,
                      radius=0.25, smooth_passes=2):
    """Triangular periodic cell on [0,1]^2 with an optional circular inclusion
    interface resolved by a fixed ring of points at `radius`."""
    rng = np.random.default_rng(seed)

    # Boundary: identical subdivisions on opposite sides (periodic matching).
    t = np.linspace(0.0, 1.0, side_div + 1)
    boundary = []
    for ti in t:
        boundary.append((ti, 0.0))
    for ti in t[1:-1]:
        boundary.append((1.0, ti))
    for ti in t[::-1]:
        boundary.append((ti, 1.0))
    for ti in t[1:-1][::-1]:
        boundary.append((0.0, ti))
    boundary = np.array(sorted(set(boundary)))
    n_b = len(boundary)
    assert n_b == 4 * side_div

    fixed = [boundary]
    if inclusion:
        ang = 2.0 * np.pi * (np.arange(ring_n) + 0.5) / ring_n
        ring = np.stack([0.5 + radius * np.cos(ang), 0.5 + radius * np.sin(ang)], axis=1)
        fixed.append(ring)
        ring_gap = 0.55 * (2.0 * np.pi * radius / ring_n)
    fixed = np.concatenate(fixed)

    margin = 0.55 / side_div
    h = 1.0 / grid_n
    xs = (np.arange(grid_n) + 0.5) * h
    gx, gy = np.meshgrid(xs, xs)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    pts += rng.uniform(-0.3 * h, 0.3 * h, size=pts.shape)

    def admissible(p):
        ok = (p[:, 0] > margin) & (p[:, 0] < 1 - margin) & \
             (p[:, 1] > margin) & (p[:, 1] < 1 - margin)
        if inclusion:
            r = np.hypot(p[:, 0] - 0.5, p[:, 1] - 0.5)
            ok &= np.abs(r - radius) > ring_gap
        return ok

    pts = pts[admissible(pts)]

    free_target = None
    if target_total is not None:
        free_target = target_total - n_b - (len(fixed) - n_b)
        if len(pts) < free_target:
            raise SystemExit("not enough candidate points (%d < %d); increase grid_n"
                             % (len(pts), free_target))
        # Deterministic thinning: evenly strided drop of the lexicographic order.
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        pts = pts[order]
        drop = len(pts) - free_target
        if drop > 0:
            drop_idx = np.linspace(0, len(pts) - 1, drop).astype(int)
            keep = np.ones(len(pts), dtype=bool)
            keep[drop_idx] = False
            pts = pts[keep]

    points = np.concatenate([fixed, pts])
    n_fixed = len(fixed)

    for _ in range(smooth_passes):
        tri = Delaunay(points)
        neigh = [[] for _ in range(len(points))]
        for simplex in tri.simplices:
            for a in range(3):
                for b in range(3):
                    if a != b:
                        neigh[simplex[a]].append(simplex[b])
        new_pts = points.copy()
        for i in range(n_fixed, len(points)):
            if neigh[i]:
                cand = points[np.unique(neigh[i])].mean(axis=0)
                if admissible(cand[None, :])[0]:
                    new_pts[i] = cand
        points = new_pts

    tri = Delaunay(points)
    used = np.unique(tri.simplices)
    assert len(used) == len(points), "triangulation dropped input points"

    elements = []
    for simplex in tri.simplices:
        p = points[simplex]
        d1, d2 = p[1] - p[0], p[2] - p[0]
        area2 = d1[0] * d2[1] - d1[1] * d2[0]
        conn = list(simplex) if area2 > 0 else [simplex[0], simplex[2], simplex[1]]
        if abs(area2) < 1e-14:
            raise SystemExit("degenerate triangle produced; change the seed")
        region = 1
        if inclusion:
            c = p.mean(axis=0)
            if np.hypot(c[0] - 0.5, c[1] - 0.5) < radius:
                region = 2
        elements.append(("tri3", [int(c) for c in conn], region))

    nodes = [tuple(p) for p in points]
    if target_total is not None:
        assert len(nodes) == target_total, (len(nodes), target_total)
        n_i = len(nodes) - n_b
        expect_t = 2 * n_i + n_b - 2
        assert len(elements) == expect_t, (len(elements), expect_t)
    return nodes, elements, []


def main():
    data = sys.argv[1] if len(sys.argv) > 1 else "data"
    macro = os.path.join(data, "macro")
    micro = os.path.join(data, "micro")
    os.makedirs(macro, exist_ok=True)
    os.makedirs(micro, exist_ok=True)

    write_mesh(os.path.join(macro, "lshape36.txt"), *lshape(3))
    write_mesh(os.path.join(macro, "lshape16.txt"), *lshape(2))
    write_mesh(os.path.join(macro, "patch4.txt"), *patch_square(2))
    write_mesh(os.path.join(macro, "patch_distorted.txt"), *patch_square(3, distort_seed=11))

    # Fine two-phase cell: exact vertex/triangle counts (152 boundary points,
    # 2160 total, Euler count 4166 triangles).
    write_mesh(os.path.join(micro, "cell_fine.txt"),
               *unstructured_cell(side_div=38, ring_n=64, grid_n=47, seed=2024,
                                  target_total=2160))
    write_mesh(os.path.join(micro, "cell_1k.txt"),
               *unstructured_cell(side_div=26, ring_n=48, grid_n=33, seed=7))
    write_mesh(os.path.join(micro, "cell_500.txt"),
               *unstructured_cell(side_div=18, ring_n=40, grid_n=23, seed=5))
    write_mesh(os.path.join(micro, "cell_hom.txt"),
               *unstructured_cell(side_div=14, ring_n=0, grid_n=17, seed=3, inclusion=False))

    # Small structured cells: an asymmetric two-phase 5x5 grid and a symmetric
    # 8x8 grid with a centered inclusion block.
    tiny_inc = {(1, 1), (2, 1), (1, 2), (3, 3), (2, 3)}
    write_mesh(os.path.join(micro, "cell_tiny.txt"), *structured_cell(5, tiny_inc))
    sym_inc = {(i, j) for i in (3, 4) for j in (3, 4)}
    write_mesh(os.path.join(micro, "cell_sym.txt"), *structured_cell(8, sym_inc))


if __name__ == "__main__":
    main()

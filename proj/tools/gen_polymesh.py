#!/usr/bin/env python3
"""Clipped Voronoi meshes of a square in the POLYMESH 2 format.

Seeds start on a jittered n x n grid and are smoothed by Lloyd iterations.
Cells are clipped to the box by mirroring the seeds across its four sides.
"""

import argparse
import pathlib

import numpy as np
from scipy.spatial import Voronoi


def mirrored(seeds, lo, hi):
    x, y = seeds[:, 0], seeds[:, 1]
    return np.vstack([
        seeds,
        np.column_stack([2 * lo - x, y]),
        np.column_stack([2 * hi - x, y]),
        np.column_stack([x, 2 * lo - y]),
        np.column_stack([x, 2 * hi - y]),
    ])


def cells(seeds, lo, hi):
    vor = Voronoi(mirrored(seeds, lo, hi))
    out = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise RuntimeError(f"unbounded cell for seed {i}")
        out.append(vor.vertices[region])
    return out


def centroid(poly):
    x, y = poly[:, 0], poly[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cross = x * ys - xs * y
    area = cross.sum() / 2
    return np.array([((x + xs) * cross).sum(), ((y + ys) * cross).sum()]) / (6 * area)


def generate(n, lo, hi, jitter, lloyd, seed):
    rng = np.random.default_rng(seed)
    h = (hi - lo) / n
    g = lo + h * (np.arange(n) + 0.5)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    seeds = np.column_stack([xx.ravel(), yy.ravel()])
    seeds += rng.uniform(-jitter * h, jitter * h, seeds.shape)
    for _ in range(lloyd):
        seeds = np.array([centroid(c) for c in cells(seeds, lo, hi)])
    polys = cells(seeds, lo, hi)

    tol = 1e-9 * (hi - lo)
    keys, verts, elems = {}, [], []
    for poly in polys:
        poly = np.where(np.abs(poly - lo) < tol, lo, poly)
        poly = np.where(np.abs(poly - hi) < tol, hi, poly)
        ids = []
        for p in poly:
            key = (round(p[0] / tol), round(p[1] / tol))
            if key not in keys:
                keys[key] = len(verts)
                verts.append(p)
            vid = keys[key]
            if not ids or ids[-1] != vid:
                ids.append(vid)
        if ids[0] == ids[-1]:
            ids.pop()
        elems.append(ids)
    return np.array(verts), elems


def write(path, verts, elems):
    with open(path, "w", encoding="ascii") as f:
        f.write(f"POLYMESH 2\n{len(verts)} {len(elems)}\n")
        for x, y in verts:
            f.write(f"{x:.17g} {y:.17g}\n")
        for e in elems:
            f.write(f"{len(e)} " + " ".join(map(str, e)) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[8, 16, 32, 64], help="seeds per axis")
    ap.add_argument("--lo", type=float, default=-1.0)
    ap.add_argument("--hi", type=float, default=1.0)
    ap.add_argument("--jitter", type=float, default=0.35, help="seed jitter as a fraction of the spacing")
    ap.add_argument("--lloyd", type=int, default=3)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for n in args.n:
        verts, elems = generate(n, args.lo, args.hi, args.jitter, args.lloyd, args.seed + n)
        path = args.out / f"voronoi_{n}x{n}.poly"
        write(path, verts, elems)
        print(f"{path}: {len(elems)} cells, {len(verts)} vertices")


if __name__ == "__main__":
    main()

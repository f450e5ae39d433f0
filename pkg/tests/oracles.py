"""Reference computations written without the package, by plain enumeration.

Run as a script to regenerate ``data/oracle_values.json``::

    python tests/oracles.py --freeze

Tests compare the package against the frozen file and check that these
functions still reproduce it.
"""

from __future__ import annotations

import argparse
import json
import math
from collections import deque
from pathlib import Path

FROZEN = Path(__file__).parent / "data" / "oracle_values.json"


def square(r0, c0, size):
    return {(r, c) for r in range(r0, r0 + size) for c in range(c0, c0 + size)}


def rect_pixels(rmin, rmax, cmin, cmax):
    return {(r, c) for r in range(rmin, rmax + 1) for c in range(cmin, cmax + 1)}


def iou(a: set, b: set) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 1.0


def centroid(pixels: set) -> tuple[float, float]:
    n = len(pixels)
    return (sum(p[0] for p in pixels) / n, sum(p[1] for p in pixels) / n)


def project_top(center, half, scale, u0, v0):
    """Top view: x to columns, y to rows, pixel bounds rounded outward."""
    x, y, _ = center
    hx, hy, _ = half
    cols = (u0 + scale * (x - hx), u0 + scale * (x + hx))
    rows = (v0 + scale * (y - hy), v0 + scale * (y + hy))
    return [math.floor(rows[0]), math.ceil(rows[1]), math.floor(cols[0]), math.ceil(cols[1])]


def min_pixel_distance(a: set, b: set) -> float:
    return min(math.hypot(p[0] - q[0], p[1] - q[1]) for p in a for q in b)


def box_gap(c1, h1, c2, h2) -> float:
    gaps = [max(0.0, abs(a - b) - (ha + hb)) for a, b, ha, hb in zip(c1, c2, h1, h2)]
    return math.sqrt(sum(g * g for g in gaps))


def components(pixels: set) -> list[set]:
    """8-connected components by breadth-first flood fill."""
    left, out = set(pixels), []
    while left:
        seed = min(left)
        comp, queue = {seed}, deque([seed])
        left.discard(seed)
        while queue:
            r, c = queue.popleft()
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    q = (r + dr, c + dc)
                    if q in left:
                        left.discard(q)
                        comp.add(q)
                        queue.append(q)
        out.append(comp)
    return out


def boundary(pixels: set) -> set:
    """Foreground pixels with a 4-neighbour outside the set."""
    return {(r, c) for r, c in pixels
            if any(n not in pixels for n in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)))}


def clockwise_ring(pixels: set) -> list:
    """Boundary of a filled rectangle walked clockwise from its top-left pixel."""
    rmin, rmax = min(p[0] for p in pixels), max(p[0] for p in pixels)
    cmin, cmax = min(p[1] for p in pixels), max(p[1] for p in pixels)
    ring = [(rmin, c) for c in range(cmin, cmax + 1)]
    ring += [(r, cmax) for r in range(rmin + 1, rmax + 1)]
    ring += [(rmax, c) for c in range(cmax - 1, cmin - 1, -1)]
    ring += [(r, cmin) for r in range(rmax - 1, rmin, -1)]
    return ring


def gate_walk(present: list[bool], max_streak: int) -> list[str]:
    """State machine for a static object: substitute up to ``max_streak`` times, then lost."""
    out, have_valid, streak = [], False, 0
    for p in present:
        if p:
            out.append("fresh")
            have_valid, streak = True, 0
        elif have_valid and streak < max_streak:
            streak += 1
            out.append("substituted")
        else:
            out.append("lost")
            have_valid, streak = False, 0
    return out


def greedy_assign(matrix, threshold):
    cells = sorted(((-v, i, j) for i, row in enumerate(matrix) for j, v in enumerate(row) if v >= threshold))
    used_i, used_j, pairs = set(), set(), []
    for _, i, j in cells:
        if i not in used_i and j not in used_j:
            used_i.add(i)
            used_j.add(j)
            pairs.append([i, j])
    return sorted(pairs)


def majority(masks: list[set]) -> set:
    need = (len(masks) + 1) // 2
    votes = {}
    for m in masks:
        for p in m:
            votes[p] = votes.get(p, 0) + 1
    return {p for p, v in votes.items() if v >= need}


def compute() -> dict:
    a, b = square(0, 0, 10), square(0, 5, 10)
    r1, r2 = rect_pixels(0, 10, 0, 10), rect_pixels(14, 20, 13, 20)
    two = square(0, 0, 3) | square(10, 10, 2)
    jitter = [square(5, 4 + d, 6) for d in (-1, 0, 1)]
    sq11 = rect_pixels(0, 10, 0, 10)
    sq11b = rect_pixels(0, 10, 17, 27)
    return {
        "iou_shifted_squares": iou(a, b),
        "centroid_l_shape": list(centroid({(0, 0), (1, 0), (1, 1)})),
        "project_unit_cube_top": project_top((0, 0, 0), (1, 1, 1), 10, 100, 100),
        "rect_distance_3_4_5": min_pixel_distance(r1, r2),
        "world_gap_cubes": box_gap((0, 0, 0), (1, 1, 1), (3, 0, 0), (1, 1, 1)),
        "ring_3x3": [list(p) for p in clockwise_ring(square(0, 0, 3))],
        "largest_component_size": max(len(c) for c in components(two)),
        "largest_component_boundary": sorted(list(p) for p in boundary(max(components(two), key=len))),
        "gate_six_dropouts": gate_walk([True] + [False] * 6, 5),
        "greedy_diagonal": greedy_assign([[0.8, 0.1], [0.2, 0.7]], 0.3),
        "majority_translates": sorted(list(p) for p in majority(jitter)),
        "square_ring_points": len(boundary(sq11)),
        "square_pair_exact": min_pixel_distance(boundary(sq11), boundary(sq11b)),
        "calibrate_worst_cell": math.ceil(3.9 + 2 * 2.8),
        "calibrate_two_one": math.ceil(2.0 + 2 * 1.0),
        "p_combined_r2_k1": 0.002 ** 2,
        "p_combined_r2_k2": 0.002 ** 4,
        "mtbf_years_r2_k2_10fps": 1.0 / (0.002 ** 4 * 10) / (365.25 * 86400),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--freeze", action="store_true")
    values = compute()
    if ap.parse_args().freeze:
        FROZEN.parent.mkdir(exist_ok=True)
        FROZEN.write_text(json.dumps(values, indent=1, sort_keys=True) + "\n")
    else:
        print(json.dumps(values, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()

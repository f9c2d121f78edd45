"""Compare plain and refined decomposition budgets on random point sets.

For every instance the script reports the face dimension k of the target
and the largest block size of both decompositions, so the saving from the
face certificate (k + 1 versus m + 1) can be read off directly.

    python3 scripts/refined_budgets.py --instances 200 --seed 0
"""
from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from generators import random_hull_point, random_sets  # noqa: E402

from sfgap.hulls import minimal_face  # noqa: E402
from sfgap.sfdecomp import decompose_plain, decompose_refined  # noqa: E402


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    by_face = Counter()
    max_plain, max_ref = Counter(), Counter()
    violations = 0
    for i in range(args.instances):
        rng = np.random.default_rng(args.seed + i)
        sets = random_sets(rng)
        z = random_hull_point(rng, sets)
        m, n = z.size, len(sets)
        plain = decompose_plain(sets, z)
        face = minimal_face(sets, z)
        ref = decompose_refined(sets, z, face)
        violations += not (plain.total <= m + n and ref.total <= face.k + n and max(ref.k) <= face.k + 1)
        by_face[(m, face.k)] += 1
        max_plain[(m, face.k)] = max(max_plain[(m, face.k)], max(plain.k))
        max_ref[(m, face.k)] = max(max_ref[(m, face.k)], max(ref.k))
    print("m  face_k  count  max k_i plain (cap m+1)  max k_i refined (cap k+1)")
    for key in sorted(by_face):
        print(f"{key[0]}  {key[1]:6d}  {by_face[key]:5d}  {max_plain[key]:24d}  {max_ref[key]:26d}")
    print(f"budget violations: {violations}")
    return 1 if violations else 0


if __name__ == "__main__":
    sys.exit(main())

"""Generate fully symmetric positive quadrature rules on the reference triangle.

Solves the moment equations for a fixed orbit structure by bounded nonlinear
least squares with random restarts, then prints a Python table literal.
Output is pasted into ``src/kvbf/quadrature.py``.
"""
import math
import sys

import numpy as np
from scipy.optimize import least_squares

# (n_centroid, n_s21, n_s111) per degree
STRUCTURE = {
    1: (1, 0, 0),
    2: (0, 1, 0),
    3: (0, 2, 0),
    4: (0, 2, 0),
    5: (1, 2, 0),
    6: (0, 2, 1),
    7: (0, 3, 1),
    8: (1, 3, 1),
    9: (1, 4, 1),
    10: (1, 2, 3),
}


def expand(params, struct):
    n0, n21, n111 = struct
    pts, wts = [], []
    k = 0
    if n0:
        pts.append((1 / 3, 1 / 3, 1 / 3))
        wts.append(params[k])
        k += 1
    for _ in range(n21):
        a, w = params[k], params[k + 1]
        k += 2
        for p in [(a, a, 1 - 2 * a), (a, 1 - 2 * a, a), (1 - 2 * a, a, a)]:
            pts.append(p)
            wts.append(w)
    for _ in range(n111):
        a, b, w = params[k], params[k + 1], params[k + 2]
        k += 3
        c = 1 - a - b
        for p in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]:
            pts.append(p)
            wts.append(w)
    return np.array(pts), np.array(wts)


def residual(params, struct, degree):
    pts, wts = expand(params, struct)
    x, y = pts[:, 1], pts[:, 2]
    out = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
            out.append((wts @ (x**i * y**j) - exact) / exact)
    # keep S111 points inside: c = 1 - a - b > 0
    return np.array(out)


def bounds(struct):
    n0, n21, n111 = struct
    lo, hi = [], []
    lo += [0.0] * n0
    hi += [1.0] * n0
    for _ in range(n21):
        lo += [1e-6, 0.0]
        hi += [0.5 - 1e-6, 1.0]
    for _ in range(n111):
        lo += [1e-6, 1e-6, 0.0]
        hi += [0.5, 1.0, 1.0]
    return np.array(lo), np.array(hi)


def solve(degree, seed=0, tries=4000):
    struct = STRUCTURE[degree]
    lo, hi = bounds(struct)
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        x0 = lo + (hi - lo) * rng.random(lo.size)
        x0 = np.clip(x0, lo + 1e-9, hi - 1e-9)
        sol = least_squares(residual, x0, bounds=(lo, hi), args=(struct, degree),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, method="trf")
        if np.max(np.abs(sol.fun)) > 1e-6:
            continue
        # polish without bounds; the constraints are re-checked below
        sol = least_squares(residual, sol.x, args=(struct, degree), method="lm",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        pts, wts = expand(sol.x, struct)
        if (np.max(np.abs(sol.fun)) < 1e-14 and np.all(wts > 0)
                and np.all(pts > 0) and np.all(pts < 1)):
            return pts, wts
    raise RuntimeError(f"no rule found for degree {degree}")


if __name__ == "__main__":
    print("RULES = {")
    for d in range(1, 11):
        pts, wts = solve(d)
        print(f"    {d}: (")
        print("        [")
        for p in pts:
            print(f"            ({float(p[0])!r}, {float(p[1])!r}, {float(p[2])!r}),")
        print("        ],")
        print("        [" + ", ".join(repr(float(w)) for w in wts) + "],")
        print("    ),")
        sys.stderr.write(f"degree {d}: {len(wts)} points\n")
    print("}")

"""Fit convolution-pyramid filters so that CPB membranes match MVC membranes.

Training set: assorted simply-connected regions inside a 64x64 domain with
random low-frequency boundary data.  The loss is the mean absolute
difference between the ratio-of-pyramids membrane and the exact mean-value
membrane.  Symmetric taps are parameterised by their off-centre values; the
overall scale of ``h1`` and ``g`` cancels in the ratio and is fixed.

Usage::

    python tools/fit_convpyr_filters.py [--out src/panoblend/data/convpyr_filters.json]
"""

import argparse
import json

import numpy as np
from scipy import ndimage, optimize

from panoblend.convpyr import ConvPyrFilters, convolve_pyramid
from panoblend.mvc import precompute_mvc
from panoblend.seams import BoundaryChain, trace_boundary

PUBLISHED = dict(
    h1=[0.1507, 0.6836, 1.0, 0.6836, 0.1507],
    h2=list(np.sqrt(0.0270) * np.array([0.1507, 0.6836, 1.0, 0.6836, 0.1507])),
    g=[0.0312, 0.7753, 0.0312],
)


def training_regions(rng, size=64):
    yy, xx = np.mgrid[:size, :size]
    c = (size - 1) / 2
    regions = [
        ((yy - c) ** 2 + (xx - c) ** 2) < (size / 2 - 3) ** 2,
        ((yy - c) ** 2 / 0.45 + (xx - c) ** 2) < (size / 2 - 3) ** 2,
        (np.abs(yy - c) < size / 2 - 4) & (np.abs(xx - c) < size / 3),
    ]
    for _ in range(3):
        noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), 6)
        blob = noise > np.quantile(noise, 0.45)
        blob[:3], blob[-3:], blob[:, :3], blob[:, -3:] = False, False, False, False
        lab, _ = ndimage.label(blob)
        big = lab == np.argmax(np.bincount(lab.ravel())[1:]) + 1
        big = ndimage.binary_fill_holes(ndimage.binary_opening(big, iterations=2))
        lab, _ = ndimage.label(big)
        regions.append(lab == np.argmax(np.bincount(lab.ravel())[1:]) + 1)
    return regions


def boundary_data(rng, pts, size):
    v = np.zeros(len(pts))
    for _ in range(3):
        fx, fy = rng.uniform(0.3, 1.5, 2)
        ph = rng.uniform(0, 2 * np.pi, 2)
        v += rng.uniform(0.03, 0.1) * np.sin(2 * np.pi * fx * pts[:, 1] / size + ph[0]) * np.cos(
            2 * np.pi * fy * pts[:, 0] / size + ph[1]
        )
    return v


def build_cases(seed=12345, size=64):
    rng = np.random.default_rng(seed)
    cases = []
    for region in training_regions(rng, size):
        pts = trace_boundary(region)
        table = precompute_mvc(BoundaryChain(pts, 0), region, 0.0)
        for _ in range(3):
            vals = boundary_data(rng, pts, size)
            mem = np.zeros(region.shape)
            mem.flat[table.pixels] = table.evaluate(vals[:, None])[:, 0]
            cases.append((region, pts, vals, mem))
    return cases


def filters_from(p):
    a1, b1, c2, a2, b2, g1 = p
    return ConvPyrFilters(
        np.array([b1, a1, 1.0, a1, b1]), c2 * np.array([b2, a2, 1.0, a2, b2]), np.array([g1, 1.0, g1])
    )


def params_from(d):
    h1, h2, g = (np.asarray(d[k], float) for k in ("h1", "h2", "g"))
    h1, g = h1 / h1[2], g / g[1]
    return np.array([h1[1], h1[0], h2[2], h2[1] / h2[2], h2[0] / h2[2], g[0]])


def loss(p, cases):
    f = filters_from(p)
    errs = []
    for region, pts, vals, mem in cases:
        num = np.zeros(region.shape)
        den = np.zeros(region.shape)
        num[pts[:, 0], pts[:, 1]] = vals
        den[pts[:, 0], pts[:, 1]] = 1.0
        d = convolve_pyramid(den, f)
        if np.any(d[region] <= 0):
            return 1.0
        errs.append(np.abs(convolve_pyramid(num, f) / d - mem)[region].mean())
    return float(np.mean(errs))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None)
    ap.add_argument("--maxiter", type=int, default=600)
    args = ap.parse_args()
    cases = build_cases()
    p0 = params_from(PUBLISHED)
    print(f"published filters: loss {loss(p0, cases):.5f}")
    res = optimize.minimize(loss, p0, args=(cases,), method="Nelder-Mead",
                            options=dict(maxiter=args.maxiter, xatol=1e-5, fatol=1e-7))
    f = filters_from(res.x)
    print(f"fitted filters:    loss {res.fun:.5f}")
    doc = {
        "source": "fitted to exact mean-value membranes on a 64x64 training domain "
                  "(tools/fit_convpyr_filters.py), starting from the published interpolation filters",
        "training_loss_mae": round(res.fun, 6),
        "h1": [round(v, 6) for v in f.h1],
        "h2": [round(v, 6) for v in f.h2],
        "g": [round(v, 6) for v in f.g],
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")


if __name__ == "__main__":
    main()

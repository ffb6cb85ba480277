"""Score offset maps with the bleeding metric.

The metric splits the energy of an offset map into a low and a high class
with Otsu's threshold, then measures how far high-class pixels rise above
a multiple of the high-class mean. A broad, gentle offset scores zero. A
narrow bump on top of it stands out from the rest of the high class and
scores high. A bump so strong that it forms the whole high class is
judged against itself and scores zero again, which is why the metric
rewards spread-out corrections rather than penalising all large ones.

    python3 demos/bleeding_metric.py
"""

import numpy as np

from panoblend import bleeding_degree, energy_map, otsu_threshold


def main():
    rng = np.random.default_rng(3)
    h, w = 120, 240
    yy, xx = np.mgrid[:h, :w]
    broad = 0.04 * np.sin(xx / 40.0)[:, :, None] + 0.005 * rng.standard_normal((h, w, 3))
    bump = np.exp(-((yy - 56) ** 2 + (xx - 106) ** 2) / 32.0)[:, :, None]
    maps = {
        "zero": np.zeros((h, w, 3)),
        "broad": broad,
        "bump": broad + 0.2 * bump,
        "spike": broad + 0.6 * bump,
    }
    for name, off in maps.items():
        e = energy_map(off)
        thr = otsu_threshold(e) if e.max() > e.min() else 0.0
        degree = bleeding_degree([off]).averaged_degree
        print(f"{name:>6}: peak energy {e.max():6.1f}, Otsu threshold {thr:5.1f}, degree {degree:10.1f}")


if __name__ == "__main__":
    main()

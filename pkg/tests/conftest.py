import numpy as np
import pytest
from scipy import ndimage

from panoblend.core import MappedStream


def smooth_image(rng, h, w, c=3, sigma=3.0, lo=0.2, hi=0.8):
    x = ndimage.gaussian_filter(rng.random((h, w, c)), (sigma, sigma, 0))
    x = (x - x.min()) / max(np.ptp(x), 1e-12)
    return lo + (hi - lo) * x


def strip_masks(h, w, spans):
    out = []
    for x0, x1 in spans:
        m = np.zeros((h, w), dtype=bool)
        m[:, x0:x1] = True
        out.append(m)
    return out


def two_strip_masks(h=64, w=64, left=38, right=26):
    return strip_masks(h, w, [(0, left), (right, w)])


def streams_from(frames_per_stream, masks, indices=None):
    indices = indices or list(range(1, len(masks) + 1))
    return [MappedStream(list(f), m, i) for f, m, i in zip(frames_per_stream, masks, indices)]


def disk(size, margin=2):
    c = (size - 1) / 2
    yy, xx = np.mgrid[:size, :size]
    return (yy - c) ** 2 + (xx - c) ** 2 < (size / 2 - margin) ** 2


def square(size, margin=2):
    m = np.zeros((size, size), dtype=bool)
    m[margin:size - margin, margin:size - margin] = True
    return m


def blob(size, seed=0):
    rng = np.random.default_rng(seed)
    noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), size / 10)
    b = noise > np.quantile(noise, 0.45)
    b[:2], b[-2:], b[:, :2], b[:, -2:] = False, False, False, False
    lab, _ = ndimage.label(b)
    big = lab == np.argmax(np.bincount(lab.ravel())[1:]) + 1
    big = ndimage.binary_fill_holes(ndimage.binary_opening(big, iterations=2))
    lab, _ = ndimage.label(big)
    return lab == np.argmax(np.bincount(lab.ravel())[1:]) + 1


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

"""Mean-value coordinates over a closed pixel chain.

For a point ``x`` inside a closed polygon ``p_0 .. p_{m-1}`` the unnormalised
weight of vertex ``k`` is ``(tan(a_{k-1}/2) + tan(a_k/2)) / |p_k - x|`` where
``a_k`` is the signed angle subtended at ``x`` by edge ``p_k -> p_{k+1}``.
Normalised weights reproduce affine functions exactly for any polygon.

Two evaluation modes:

* exact: every region pixel is a node and every chain point a sample; the
  table is a dense ``pixels x m`` matrix.
* adaptive: each node sees a hierarchically coarsened polygon (chain
  segments are merged while they stay far from the node relative to their
  length), and nodes form a graded lattice, dense near the boundary and
  sparse inside.  Pixels are interpolated barycentrically from a Delaunay
  triangulation of the nodes, so evaluation is linear in the pixel count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse
from scipy.spatial import Delaunay

from .errors import StructuralError

EXACT_BUDGET = 4_000_000  # max pixels * chain points for the dense table
DEFAULT_TOLERANCE = 0.5


@dataclass(frozen=True, eq=False)
class MvcTable:
    """Precomputed mean-value weights of one region.

    Attributes:
        chain_points: ``(m, 2)`` ``(row, col)`` boundary samples ``x_k``.
        pixels: flat indices of all region pixels (the interior points).
        shape: panorama ``(H, W)``.
        node_weights: normalised weights of the nodes over the samples;
            dense ``(N, m)`` in exact mode, CSR ``(V, m)`` otherwise.
        interp: CSR ``(N, V)`` barycentric interpolation from nodes to
            pixels, ``None`` in exact mode (nodes are the pixels).
        tolerance: boundary sampling tolerance used (0 means all samples).
    """

    chain_points: np.ndarray
    pixels: np.ndarray
    shape: tuple
    node_weights: object
    interp: object = None
    tolerance: float = 0.0

    @property
    def exact(self) -> bool:
        return self.interp is None

    @property
    def boundary_samples(self) -> np.ndarray:
        return self.chain_points

    @property
    def n_samples(self) -> int:
        return len(self.chain_points)

    @property
    def interior_points(self) -> np.ndarray:
        return np.stack(np.unravel_index(self.pixels, self.shape), axis=1)

    def pixel_weights(self):
        """Effective ``(N, m)`` weights of every region pixel."""
        if self.exact:
            return self.node_weights
        return self.interp @ self.node_weights

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """Interpolate ``(m, C)`` boundary values to the ``(N, C)`` region pixels."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.n_samples:
            raise StructuralError(
                f"{values.shape[0]} boundary values for a table of {self.n_samples} samples"
            )
        node_vals = self.node_weights @ values
        if self.exact:
            return node_vals
        return self.interp @ node_vals

    def save(self, path) -> None:
        arrays = dict(
            chain_points=self.chain_points,
            pixels=self.pixels,
            shape=np.asarray(self.shape),
            tolerance=np.asarray(self.tolerance),
        )
        if self.exact:
            arrays["dense"] = self.node_weights
        else:
            for name, mat in (("nw", self.node_weights), ("ip", self.interp)):
                mat = mat.tocsr()
                arrays[f"{name}_data"] = mat.data
                arrays[f"{name}_indices"] = mat.indices
                arrays[f"{name}_indptr"] = mat.indptr
                arrays[f"{name}_shape"] = np.asarray(mat.shape)
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "MvcTable":
        z = np.load(path)

        def csr(name):
            return sparse.csr_matrix(
                (z[f"{name}_data"], z[f"{name}_indices"], z[f"{name}_indptr"]),
                shape=tuple(z[f"{name}_shape"]),
            )

        if "dense" in z:
            nw, ip = z["dense"], None
        else:
            nw, ip = csr("nw"), csr("ip")
        return cls(z["chain_points"], z["pixels"], tuple(int(s) for s in z["shape"]), nw, ip,
                   float(z["tolerance"]))


def _xy(points):
    """(row, col) integer points -> float (x, y)."""
    return np.stack([points[:, 1], points[:, 0]], axis=1).astype(np.float64)


def _tan_half(ea, eb, ra, rb):
    cross = ea[..., 0] * eb[..., 1] - ea[..., 1] * eb[..., 0]
    dot = ea[..., 0] * eb[..., 0] + ea[..., 1] * eb[..., 1]
    return cross / (ra * rb + dot)


def mvc_weights_dense(nodes_xy: np.ndarray, poly_xy: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Normalised mean-value coordinates of points strictly inside a polygon."""
    m = len(poly_xy)
    out = np.empty((len(nodes_xy), m))
    for s in range(0, len(nodes_xy), chunk):
        x = nodes_xy[s:s + chunk]
        e = poly_xy[None, :, :] - x[:, None, :]
        r = np.hypot(e[..., 0], e[..., 1])
        e_next = np.roll(e, -1, axis=1)
        r_next = np.roll(r, -1, axis=1)
        t = _tan_half(e, e_next, r, r_next)
        w = (np.roll(t, 1, axis=1) + t) / r
        out[s:s + chunk] = w / w.sum(axis=1, keepdims=True)
    return out


def _arclength(poly_xy):
    seg = np.hypot(*np.diff(np.vstack([poly_xy, poly_xy[:1]]), axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def mvc_weights_adaptive(nodes_xy: np.ndarray, poly_xy: np.ndarray, tolerance: float):
    """Sparse mean-value coordinates with hierarchical boundary sampling.

    A chain segment ``[a, b)`` is used as a single polygon edge for node ``x``
    when ``len <= tolerance * (|x - p_mid| - len / 2)`` (``len`` being its arc
    length), i.e. the whole segment is far from ``x`` compared to its own
    length.  Otherwise it is split in half, down to single chain steps.
    Returns a CSR matrix of normalised weights.
    """
    m = len(poly_xy)
    v = len(nodes_xy)
    arc = _arclength(poly_xy)
    top = 1
    while top * 8 < m:
        top *= 2
    starts = np.arange(0, m, top)
    ends = np.minimum(starts + top, m)
    node = np.repeat(np.arange(v), len(starts))
    a = np.tile(starts, v)
    b = np.tile(ends, v)
    acc_node, acc_a, acc_b = [], [], []
    while len(node):
        length = arc[b] - arc[a]
        mid = (a + b) // 2
        dmid = np.hypot(*(nodes_xy[node] - poly_xy[mid]).T)
        ok = (b - a == 1) | (length <= tolerance * (dmid - 0.5 * length))
        acc_node.append(node[ok])
        acc_a.append(a[ok])
        acc_b.append(b[ok])
        node, a, b, mid = node[~ok], a[~ok], b[~ok], mid[~ok]
        node = np.concatenate([node, node])
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    node = np.concatenate(acc_node)
    a = np.concatenate(acc_a)
    b = np.concatenate(acc_b) % m
    x = nodes_xy[node]
    ea, eb = poly_xy[a] - x, poly_xy[b] - x
    ra, rb = np.hypot(*ea.T), np.hypot(*eb.T)
    t = _tan_half(ea, eb, ra, rb)
    rows = np.concatenate([node, node])
    cols = np.concatenate([a, b])
    vals = np.concatenate([t / ra, t / rb])
    w = sparse.csr_matrix((vals, (rows, cols)), shape=(v, m))
    w.sum_duplicates()
    inv = 1.0 / np.asarray(w.sum(axis=1)).ravel()
    return sparse.diags(inv) @ w


def _graded_nodes(region, chain_raster, max_spacing, band=2.0):
    """Interior lattice nodes whose spacing doubles with distance to the boundary."""
    dist = ndimage.distance_transform_edt(~chain_raster)
    interior = region & ~chain_raster
    yy, xx = np.nonzero(interior)
    d = dist[yy, xx]
    keep = np.zeros(len(yy), dtype=bool)
    step = 1
    lo = 0.0
    while True:
        hi = band * 2 * step if step < max_spacing else np.inf
        on_lattice = (yy % step == 0) & (xx % step == 0)
        keep |= on_lattice & (d >= lo) & (d < hi)
        if step >= max_spacing:
            break
        lo = hi
        step *= 2
    return yy[keep], xx[keep]


def _barycentric_matrix(nodes_xy, pix_xy):
    tri = Delaunay(nodes_xy)
    simplex = tri.find_simplex(pix_xy, tol=1e-9)
    miss = simplex < 0
    if miss.any():
        # numerically outside the hull: snap to the closest triangle vertex
        from scipy.spatial import cKDTree

        _, nearest = cKDTree(nodes_xy).query(pix_xy[miss])
    s = np.where(miss, 0, simplex)
    trans = tri.transform[s]
    bary2 = np.einsum("nij,nj->ni", trans[:, :2], pix_xy - trans[:, 2])
    bary = np.column_stack([bary2, 1.0 - bary2.sum(axis=1)])
    verts = tri.simplices[s]
    if miss.any():
        bary[miss] = [1.0, 0.0, 0.0]
        verts[miss, 0] = nearest
    n = len(pix_xy)
    rows = np.repeat(np.arange(n), 3)
    return sparse.csr_matrix((bary.ravel(), (rows, verts.ravel())), shape=(n, len(nodes_xy)))


def precompute_mvc(chain, region: np.ndarray, sampling_tolerance: float | None = None,
                   max_spacing: int | None = None) -> MvcTable:
    """Precompute mean-value weights of every pixel of ``region``.

    Args:
        chain: :class:`~panoblend.seams.BoundaryChain` of the region.
        region: boolean panorama-sized mask of the region.
        sampling_tolerance: 0 uses all chain points for every pixel (exact
            dense table).  ``None`` picks exact when the dense table stays
            below ``EXACT_BUDGET`` entries and ``DEFAULT_TOLERANCE``
            otherwise.
        max_spacing: coarsest lattice spacing of the adaptive node mesh
            (default grows with the region so interior nodes stay ~4096).
    """
    pts = np.asarray(chain.points)
    m = len(pts)
    if m < 3:
        raise StructuralError(f"boundary chain needs at least 3 points, got {m}")
    region = np.asarray(region, dtype=bool)
    pixels = np.flatnonzero(region)
    n = len(pixels)
    if sampling_tolerance is None:
        sampling_tolerance = 0.0 if n * m <= EXACT_BUDGET else DEFAULT_TOLERANCE
    poly = _xy(pts)
    chain_index = np.full(region.size, -1, dtype=np.int64)
    chain_index[pts[:, 0] * region.shape[1] + pts[:, 1]] = np.arange(m)

    if sampling_tolerance == 0 and n * m <= EXACT_BUDGET:
        on_chain = chain_index[pixels] >= 0
        w = np.zeros((n, m))
        inner = ~on_chain
        yy, xx = np.unravel_index(pixels[inner], region.shape)
        w[inner] = mvc_weights_dense(np.column_stack([xx, yy]).astype(np.float64), poly)
        w[np.nonzero(on_chain)[0], chain_index[pixels[on_chain]]] = 1.0
        return MvcTable(pts, pixels, region.shape, w, None, 0.0)

    chain_raster = np.zeros(region.shape, dtype=bool)
    chain_raster[pts[:, 0], pts[:, 1]] = True
    if max_spacing is None:
        max_spacing = 4
        while n / (max_spacing * max_spacing) > 4096:
            max_spacing *= 2
    ny, nx = _graded_nodes(region, chain_raster, max_spacing)
    inner_xy = np.column_stack([nx, ny]).astype(np.float64)
    if sampling_tolerance == 0:
        w_inner = sparse.csr_matrix(mvc_weights_dense(inner_xy, poly))
    else:
        w_inner = mvc_weights_adaptive(inner_xy, poly, sampling_tolerance)
    w_chain = sparse.identity(m, format="csr")
    node_weights = sparse.vstack([w_chain, w_inner], format="csr")
    nodes_xy = np.vstack([poly, inner_xy])
    yy, xx = np.unravel_index(pixels, region.shape)
    interp = _barycentric_matrix(nodes_xy, np.column_stack([xx, yy]).astype(np.float64))
    return MvcTable(pts, pixels, region.shape, node_weights, interp, float(sampling_tolerance))

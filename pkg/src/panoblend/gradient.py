"""Gradient-domain blenders: multi-spline blending and modified Poisson blending.

Multi-spline blending (MSB) looks for one smooth offset field per stream
such that, across every seam, the jump in offsets cancels the jump in
colour, while inside each region the offset stays as flat as possible.  The
fields are tensor-product splines on a coarse lattice, so the least-squares
problem has one unknown per active control point instead of one per pixel.

Modified Poisson blending (MPB) solves the screened Poisson equation
``(eps - Lap) P = eps I - div g`` over the whole panorama, where ``I`` is the
trimmed composite and ``g`` the composited stream gradients.  Neumann
boundaries make the 5-point Laplacian diagonal in the orthonormal DCT-II
basis, so the solve is two forward transforms, a division and an inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft, sparse
from scipy.sparse import csgraph
from scipy.sparse import linalg as spla

from .core import MappedStream, compose_frames, frames_at, mask_box
from .errors import DataUnavailableError, NumericalError, ParameterError, RankDeficiencyError, StructuralError
from .seams import SeamLayout

DEFAULT_SPACING = 64
DEFAULT_EPSILON = 0.01
DIRECT_LIMIT = 20_000  # unknowns; larger systems use Jacobi-preconditioned CG
CG_RTOL = 1e-8


# ---------------------------------------------------------------- seam gradients


@dataclass(frozen=True)
class SeamGradients:
    """Modified gradients across seams.

    ``gx[y, x]`` belongs to the pixel pair ``(y, x) -> (y, x + 1)`` and
    ``gy[y, x]`` to ``(y, x) -> (y + 1, x)``.  Both are zero except where the
    pair crosses from one trimmed region into another.
    """

    gx: np.ndarray
    gy: np.ndarray


@dataclass(frozen=True)
class _Pairs:
    """Flat indices and region positions of neighbouring pixel pairs."""

    p: np.ndarray
    q: np.ndarray
    lp: np.ndarray
    lq: np.ndarray
    axis: np.ndarray  # 0 for +x pairs, 1 for +y pairs


def _pairs(label_map: np.ndarray, rows: slice | None = None) -> _Pairs:
    """All labelled 4-neighbour pairs whose first pixel lies in ``rows``."""
    h, w = label_map.shape
    r0, r1 = (0, h) if rows is None else (rows.start, rows.stop)
    lab = label_map[r0:r1]
    out = []
    # +x pairs
    a, b = lab[:, :-1], lab[:, 1:]
    yy, xx = np.nonzero((a >= 0) & (b >= 0))
    p = (yy + r0) * w + xx
    out.append((p, p + 1, a[yy, xx], b[yy, xx], np.zeros(len(p), np.int8)))
    # +y pairs (second row may lie just below the block)
    below = label_map[r0 + 1:min(r1 + 1, h)]
    a = lab[:len(below)]
    yy, xx = np.nonzero((a >= 0) & (below >= 0))
    p = (yy + r0) * w + xx
    out.append((p, p + w, a[yy, xx], below[yy, xx], np.ones(len(p), np.int8)))
    return _Pairs(*(np.concatenate(parts) for parts in zip(*out)))


def _seam_pairs(layout: SeamLayout) -> _Pairs:
    pr = _pairs(layout.label_map)
    s = pr.lp != pr.lq
    return _Pairs(pr.p[s], pr.q[s], pr.lp[s], pr.lq[s], pr.axis[s])


def _check_seam_data(layout: SeamLayout, pairs: _Pairs):
    flat = [m.ravel() for m in layout.masks]
    for which, (pix, lab) in enumerate(((pairs.q, pairs.lp), (pairs.p, pairs.lq))):
        for pos in np.unique(lab):
            sel = np.flatnonzero(lab == pos)
            bad = sel[~flat[pos][pix[sel]]]
            if len(bad):
                k = int(bad[0])
                yx = divmod(int(pix[k]), layout.shape[1])
                raise DataUnavailableError(
                    f"stream {layout.stream_indices[pos]} has no data at seam pixel {yx}", index=k
                )


def _seam_values(frames, pairs: _Pairs, n_ch) -> np.ndarray:
    """Halved symmetric seam jump ``((P_a - P_b)(p) + (P_a - P_b)(q)) / 2``."""
    flat = [f.reshape(-1, n_ch) for f in frames]
    g = np.empty((len(pairs.p), n_ch))
    for a in np.unique(pairs.lp):
        for b in np.unique(pairs.lq[pairs.lp == a]):
            sel = np.flatnonzero((pairs.lp == a) & (pairs.lq == b))
            p, q = pairs.p[sel], pairs.q[sel]
            # the plain sum counts the jump twice; half of it is the target
            g[sel] = 0.5 * ((flat[a][p] - flat[b][p]) + (flat[a][q] - flat[b][q]))
    return g


def seam_gradients(streams: Sequence[MappedStream], layout: SeamLayout, frame_index: int) -> SeamGradients:
    """Modified seam gradients of one frame, zero off the seams."""
    if len(streams) != layout.n_streams:
        raise StructuralError(f"{len(streams)} streams for a layout of {layout.n_streams}")
    frames = frames_at(streams, frame_index)
    pairs = _seam_pairs(layout)
    _check_seam_data(layout, pairs)
    n_ch = frames[0].shape[-1]
    vals = _seam_values(frames, pairs, n_ch)
    h, w = layout.shape
    gx = np.zeros((h * w, n_ch))
    gy = np.zeros((h * w, n_ch))
    gx[pairs.p[pairs.axis == 0]] = vals[pairs.axis == 0]
    gy[pairs.p[pairs.axis == 1]] = vals[pairs.axis == 1]
    return SeamGradients(gx.reshape(h, w, n_ch), gy.reshape(h, w, n_ch))


# ---------------------------------------------------------------- spline lattice


def _bspline3(t):
    t = np.abs(t)
    return np.where(t < 1, 2 / 3 - t * t + 0.5 * t ** 3, np.where(t < 2, (2 - t) ** 3 / 6, 0.0))


def _basis_entries(n: int, spacing: int, kind: str):
    """Fixed-width ``(n, k)`` node columns and weights of the 1-D basis (zero weights kept)."""
    if spacing < 1:
        raise ParameterError(f"spline spacing must be >= 1, got {spacing}")
    nodes = -(-(n - 1) // spacing) + 3
    t = np.arange(n) / spacing + 1.0
    base = np.floor(t).astype(np.int64)
    if kind == "bilinear":
        offs = (0, 1)
        vals = [1.0 - (t - base), t - base]
    elif kind == "cubic":
        offs = (-1, 0, 1, 2)
        vals = [_bspline3(t - (base + o)) for o in offs]
    else:
        raise ParameterError(f"unknown spline basis {kind!r}")
    cols = np.stack([base + o for o in offs], axis=1)
    data = np.stack(vals, axis=1)
    outside = (cols < 0) | (cols >= nodes)
    data[outside] = 0.0
    cols[outside] = 0
    return cols, data, nodes


def basis_1d(n: int, spacing: int, kind: str = "bilinear"):
    """``(n, nodes)`` CSR matrix of 1-D basis values; node ``k`` sits at pixel ``(k - 1) * spacing``."""
    cols, data, nodes = _basis_entries(n, spacing, kind)
    keep = data > 0
    rows = np.broadcast_to(np.arange(n)[:, None], cols.shape)
    return sparse.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(n, nodes))


@dataclass
class SplineGrid:
    """Control points of every stream's offset spline.

    ``coeffs`` has shape ``(n_streams, ny, nx, C)``; node ``(k, m)`` sits at
    pixel ``((k - 1) R, (m - 1) R)``, so the lattice overhangs the panorama
    by one cell on every side.
    """

    spacing: int
    shape: tuple
    coeffs: np.ndarray
    kind: str = "bilinear"
    _by: object = field(default=None, repr=False)
    _bx: object = field(default=None, repr=False)

    def __post_init__(self):
        if self._by is None:
            self._by = basis_1d(self.shape[0], self.spacing, self.kind)
            self._bx = basis_1d(self.shape[1], self.spacing, self.kind)

    @classmethod
    def zeros(cls, shape, n_streams, spacing=DEFAULT_SPACING, channels=1, kind="bilinear"):
        by = basis_1d(shape[0], spacing, kind)
        bx = basis_1d(shape[1], spacing, kind)
        coeffs = np.zeros((n_streams, by.shape[1], bx.shape[1], channels))
        return cls(spacing, tuple(shape), coeffs, kind, by, bx)

    @property
    def node_shape(self):
        return self._by.shape[1], self._bx.shape[1]

    def evaluate(self, stream: int, rows=slice(None), cols=slice(None)) -> np.ndarray:
        """Offset spline of one stream (array position) over a window."""
        by, bx = self._by[rows], self._bx[cols]
        c = self.coeffs[stream]
        out = np.empty((by.shape[0], bx.shape[0], c.shape[-1]))
        for ch in range(c.shape[-1]):
            out[:, :, ch] = (bx @ (by @ c[:, :, ch]).T).T
        return out


def msb_reconstruct(grid: SplineGrid, layout: SeamLayout) -> np.ndarray:
    """Offset map: each stream's spline evaluated on its trimmed region."""
    if tuple(grid.shape) != tuple(layout.shape) or grid.coeffs.shape[0] != layout.n_streams:
        raise StructuralError("spline grid does not match the layout")
    out = np.zeros(tuple(layout.shape) + (grid.coeffs.shape[-1],))
    for l, region in enumerate(layout.trimmed_masks):
        ys = np.flatnonzero(region.any(axis=1))
        xs = np.flatnonzero(region.any(axis=0))
        if len(ys) == 0:
            continue
        box = slice(ys[0], ys[-1] + 1), slice(xs[0], xs[-1] + 1)
        np.copyto(out[box], grid.evaluate(l, *box), where=region[box][:, :, None])
    return out


def combined_energy(offset: np.ndarray, grads: SeamGradients, layout: SeamLayout) -> float:
    """Least-squares objective of a combined offset map over all labelled pairs."""
    pr = _pairs(layout.label_map)
    n_ch = offset.shape[-1]
    o = offset.reshape(-1, n_ch)
    g = np.where(pr.axis[:, None] == 0, grads.gx.reshape(-1, n_ch)[pr.p], grads.gy.reshape(-1, n_ch)[pr.p])
    return float(np.sum((o[pr.q] - o[pr.p] - g) ** 2))


class MultiSplineBlender:
    """Multi-spline blending over a fixed seam layout.

    The normal matrix ``A = D^T D`` of the spline least-squares problem and
    its factorisation depend only on the layout and are built once; each
    frame only needs the seam rows of ``D^T g`` and a back substitution.

    Args:
        layout: seam layout of the scene.
        spacing: control-point spacing ``R`` in pixels.
        kind: ``"bilinear"`` (default) or ``"cubic"`` basis.
        gauge_stream: stream index whose offsets are pinned to zero
            (default: camera 1, or the lowest index present).
    """

    def __init__(self, layout: SeamLayout, spacing: int = DEFAULT_SPACING, kind: str = "bilinear",
                 gauge_stream: int | None = None, chunk_rows: int = 256):
        spacing = int(spacing)
        if spacing < 1:
            raise ParameterError(f"spline spacing must be >= 1, got {spacing}")
        self.layout = layout
        self.spacing = spacing
        self.kind = kind
        self.gauge_stream = min(layout.stream_indices) if gauge_stream is None else int(gauge_stream)
        self._gauge = layout.position_of(self.gauge_stream)
        h, w = layout.shape
        self._by = basis_1d(h, spacing, kind)
        self._bx = basis_1d(w, spacing, kind)
        self._ey = _basis_entries(h, spacing, kind)[:2]
        self._ex = _basis_entries(w, spacing, kind)[:2]
        ny, nx = self._by.shape[1], self._bx.shape[1]

        self.seams = _seam_pairs(layout)
        _check_seam_data(layout, self.seams)
        self._check_connected()

        # unknown numbering: active nodes of every non-gauge stream
        by_on = (self._by > 0).astype(np.float64).T.tocsr()
        bx_on = (self._bx > 0).astype(np.float64).tocsc()
        self.active = []
        col = np.full((layout.n_streams, ny * nx), -1, dtype=np.int64)
        n_unk = 0
        for l, region in enumerate(layout.trimmed_masks):
            act = (by_on @ sparse.csr_matrix(region.astype(np.float64)) @ bx_on).toarray() > 0
            self.active.append(act)
            if l == self._gauge:
                continue
            idx = np.flatnonzero(act.ravel())
            col[l, idx] = np.arange(n_unk, n_unk + len(idx))
            n_unk += len(idx)
        self._col = col
        self.n_unknowns = n_unk

        a = sparse.csr_matrix((n_unk, n_unk))
        for r0 in range(0, h, chunk_rows):
            d = self._design(_pairs(layout.label_map, slice(r0, min(r0 + chunk_rows, h))))
            a = a + (d.T @ d).tocsr()
        self.normal_matrix = a
        self._d_seam_t = self._design(self.seams).T.tocsr()
        self._factor()

    def _check_connected(self):
        n = self.layout.n_streams
        covered = [l for l in range(n) if self.layout.trimmed_masks[l].any()]
        s = self.seams
        graph = sparse.coo_matrix((np.ones(len(s.lp)), (s.lp, s.lq)), shape=(n, n))
        _, comp = csgraph.connected_components(graph, directed=False)
        if len({comp[l] for l in covered}) > 1:
            raise RankDeficiencyError("seam graph is disconnected; offsets are not determined")

    def _node_entries(self, flat_pix, labels):
        """Unknown columns (-1 for pinned or absent) and weights of the basis at each pixel."""
        y, x = np.divmod(flat_pix, self.layout.shape[1])
        ky, wy = self._ey[0][y], self._ey[1][y]
        kx, wx = self._ex[0][x], self._ex[1][x]
        nodes = (ky[:, :, None] * self._bx.shape[1] + kx[:, None, :]).reshape(len(y), -1)
        weights = (wy[:, :, None] * wx[:, None, :]).reshape(len(y), -1)
        cols = self._col[labels[:, None], nodes]
        cols[weights == 0] = -1
        return cols, weights

    def _design(self, pairs: _Pairs):
        """Rows ``B(q) c_{l(q)} - B(p) c_{l(p)}``, one per pair."""
        cq, wq = self._node_entries(pairs.q, pairs.lq)
        cp, wp = self._node_entries(pairs.p, pairs.lp)
        cols = np.concatenate([cq, cp], axis=1)
        vals = np.concatenate([wq, -wp], axis=1)
        rows = np.broadcast_to(np.arange(len(pairs.p))[:, None], cols.shape)
        keep = cols >= 0
        d = sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(len(pairs.p), self.n_unknowns))
        d.sum_duplicates()
        return d

    def _factor(self):
        a = self.normal_matrix
        self._lu = None
        if self.n_unknowns == 0:
            return
        diag = a.diagonal()
        if np.any(diag <= 0):
            raise RankDeficiencyError("a control point has no energy term")
        if self.n_unknowns <= DIRECT_LIMIT:
            try:
                self._lu = spla.splu(a.tocsc(), permc_spec="MMD_AT_PLUS_A")
            except RuntimeError as exc:
                raise RankDeficiencyError(f"normal equations are singular: {exc}") from exc
            u = self._lu.U.diagonal()
            if np.any(np.abs(u) <= 1e-12 * np.abs(u).max()):
                raise RankDeficiencyError("normal equations are numerically singular")
        self._jacobi = sparse.diags(1.0 / diag)

    def rhs(self, grads: SeamGradients) -> np.ndarray:
        """``b = D^T g``; only seam rows carry a nonzero target."""
        s = self.seams
        n_ch = grads.gx.shape[-1]
        g = np.where(s.axis[:, None] == 0, grads.gx.reshape(-1, n_ch)[s.p], grads.gy.reshape(-1, n_ch)[s.p])
        return self._d_seam_t @ g

    def _solve(self, b):
        if self.n_unknowns == 0:
            return b
        if self._lu is not None:
            return self._lu.solve(b)
        out = np.empty_like(b)
        for ch in range(b.shape[1]):
            z, info = spla.cg(self.normal_matrix, b[:, ch], rtol=CG_RTOL, atol=0.0, M=self._jacobi,
                              maxiter=10 * self.n_unknowns)
            if info != 0:
                raise NumericalError(f"conjugate gradients did not converge (info={info})")
            out[:, ch] = z
        return out

    def solve(self, grads: SeamGradients) -> SplineGrid:
        b = self.rhs(grads)
        z = self._solve(b)
        self.last_residual = float(np.abs(self.normal_matrix @ z - b).max()) if len(z) else 0.0
        n_ch = b.shape[1]
        grid = SplineGrid.zeros(self.layout.shape, self.layout.n_streams, self.spacing, n_ch, self.kind)
        flat = grid.coeffs.reshape(self.layout.n_streams, -1, n_ch)
        for l in range(self.layout.n_streams):
            on = self._col[l] >= 0
            flat[l, on] = z[self._col[l, on]]
        return grid

    def gradients(self, frames: Sequence[np.ndarray]) -> SeamGradients:
        n_ch = frames[0].shape[-1]
        vals = _seam_values(frames, self.seams, n_ch)
        h, w = self.layout.shape
        gx = np.zeros((h * w, n_ch))
        gy = np.zeros((h * w, n_ch))
        s = self.seams
        gx[s.p[s.axis == 0]] = vals[s.axis == 0]
        gy[s.p[s.axis == 1]] = vals[s.axis == 1]
        return SeamGradients(gx.reshape(h, w, n_ch), gy.reshape(h, w, n_ch))

    def offsets(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        if len(frames) != self.layout.n_streams:
            raise StructuralError(f"{len(frames)} frames for {self.layout.n_streams} streams")
        return msb_reconstruct(self.solve(self.gradients(frames)), self.layout)

    def blend_frames(self, frames: Sequence[np.ndarray], return_offsets: bool = False):
        composite = compose_frames(frames, self.layout.trimmed_masks)
        offset = self.offsets(frames)
        out = composite + offset
        return (out, offset) if return_offsets else out


def msb_solve(grads: SeamGradients, layout: SeamLayout, spacing: int = DEFAULT_SPACING,
              kind: str = "bilinear") -> SplineGrid:
    """Least-squares spline offsets for the given seam gradients."""
    return MultiSplineBlender(layout, spacing, kind).solve(grads)


# ---------------------------------------------------------------- modified Poisson


@dataclass(frozen=True)
class GradientMap:
    """Composited forward-difference gradients and their backward-difference divergence."""

    gx: np.ndarray
    gy: np.ndarray
    laplacian: np.ndarray


@dataclass(frozen=True)
class SpectralField:
    """DCT-domain quantities of one screened Poisson solve."""

    u: np.ndarray
    v: np.ndarray
    d: np.ndarray
    p: np.ndarray


def divergence(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Backward-difference divergence with zero flux through the image border."""
    div = gx.copy()
    div[:, 1:] -= gx[:, :-1]
    div += gy
    div[1:] -= gy[:-1]
    return div


def laplacian_eigenvalues(shape) -> np.ndarray:
    """Eigenvalues of the Neumann 5-point Laplacian in the DCT-II basis (all <= 0)."""
    h, w = shape
    ky = 2.0 * np.cos(np.pi * np.arange(h) / h) - 2.0
    kx = 2.0 * np.cos(np.pi * np.arange(w) / w) - 2.0
    return ky[:, None] + kx[None, :]


class _GradientAssembler:
    """Source pixels for composited forward differences, fixed per layout.

    The gradient at ``p`` toward ``q = p + e`` comes from the stream owning
    ``p``.  If that stream does not cover ``q`` the composite is used, and
    uncovered ``p`` takes the composite difference too.  At the image
    border the gradient is 0.
    """

    def __init__(self, layout: SeamLayout):
        self.layout = layout
        lab = layout.label_map
        self.plans = []
        for axis in (1, 0):
            p_lab = lab[:, :-1] if axis == 1 else lab[:-1]
            own = []
            for l, m in enumerate(layout.masks):
                sel = (p_lab == l) & (m[:, 1:] if axis == 1 else m[1:])
                box = mask_box(sel)
                if box is not None:
                    own.append((l, box, sel[box]))
            covered = np.zeros(p_lab.shape, dtype=bool)
            for _, box, sel in own:
                covered[box] |= sel
            self.plans.append((own, ~covered))

    def gradients(self, frames, composite):
        out = []
        for axis, (own, rest) in zip((1, 0), self.plans):
            g = np.zeros(composite.shape)
            inner = g[:, :-1] if axis == 1 else g[:-1]
            for l, (rows, cols), sel in own:
                if axis == 1:
                    src = frames[l][rows, cols.start:cols.stop + 1]
                else:
                    src = frames[l][rows.start:rows.stop + 1, cols]
                np.copyto(inner[rows, cols], np.diff(src, axis=axis), where=sel[:, :, None])
            if rest.any():
                np.copyto(inner, np.diff(composite, axis=axis), where=rest[:, :, None])
            out.append(g)
        return out[0], out[1]


def build_gradient_map(streams: Sequence[MappedStream], layout: SeamLayout, frame_index: int) -> GradientMap:
    """Composited gradient field ``g = sum_i M'_i grad P_i`` and its divergence."""
    if len(streams) != layout.n_streams:
        raise StructuralError(f"{len(streams)} streams for a layout of {layout.n_streams}")
    frames = frames_at(streams, frame_index)
    composite = compose_frames(frames, layout.trimmed_masks)
    gx, gy = _GradientAssembler(layout).gradients(frames, composite)
    return GradientMap(gx, gy, divergence(gx, gy))


def _dct(x, workers):
    return fft.dctn(x, type=2, norm="ortho", axes=(0, 1), workers=workers)


def _idct(x, workers):
    return fft.idctn(x, type=2, norm="ortho", axes=(0, 1), workers=workers)


def _check_epsilon(epsilon):
    if not (epsilon > 0 and np.isfinite(epsilon)):
        raise ParameterError(f"epsilon must be a positive finite number, got {epsilon}")


def mpb_solve(composite: np.ndarray, gmap: GradientMap, epsilon: float = DEFAULT_EPSILON,
              workers: int | None = None, return_spectral: bool = False):
    """Screened Poisson solution ``P^T = (v^T - eps u^T) / (d^T - eps)``."""
    _check_epsilon(epsilon)
    composite = np.asarray(composite, dtype=np.float64)
    if composite.shape != gmap.laplacian.shape:
        raise StructuralError(f"composite {composite.shape} and gradient map {gmap.laplacian.shape} differ")
    d = laplacian_eigenvalues(composite.shape[:2])
    den = d - epsilon
    if np.any(np.abs(den) < 1e-12):
        raise NumericalError("screened Poisson operator is ill-conditioned")
    u = _dct(composite, workers)
    v = _dct(gmap.laplacian, workers)
    pt = (v - epsilon * u) / den[:, :, None]
    p = _idct(pt, workers)
    if return_spectral:
        return p, SpectralField(u, v, d, pt)
    return p


class ModifiedPoissonBlender:
    """Modified Poisson blending over a fixed seam layout.

    The whole panorama is re-solved, so every stream (the anchor included)
    moves.  Anchor order does not enter the solve.
    """

    def __init__(self, layout: SeamLayout, epsilon: float = DEFAULT_EPSILON, workers: int | None = None):
        _check_epsilon(epsilon)
        self.layout = layout
        self.epsilon = float(epsilon)
        self.workers = workers
        self._assembler = _GradientAssembler(layout)
        self._den = (laplacian_eigenvalues(layout.shape) - self.epsilon)[:, :, None]

    def blend_frames(self, frames: Sequence[np.ndarray], return_offsets: bool = False):
        if len(frames) != self.layout.n_streams:
            raise StructuralError(f"{len(frames)} frames for {self.layout.n_streams} streams")
        composite = compose_frames(frames, self.layout.trimmed_masks)
        gx, gy = self._assembler.gradients(frames, composite)
        u = _dct(composite, self.workers)
        v = _dct(divergence(gx, gy), self.workers)
        out = _idct((v - self.epsilon * u) / self._den, self.workers)
        return (out, out - composite) if return_offsets else out


def mpb_blend(streams: Sequence[MappedStream], layout: SeamLayout, epsilon: float = DEFAULT_EPSILON,
              frame_index: int = 0) -> np.ndarray:
    return ModifiedPoissonBlender(layout, epsilon).blend_frames(frames_at(streams, frame_index))


def msb_blend(streams: Sequence[MappedStream], layout: SeamLayout, spacing: int = DEFAULT_SPACING,
              frame_index: int = 0) -> np.ndarray:
    return MultiSplineBlender(layout, spacing).blend_frames(frames_at(streams, frame_index))

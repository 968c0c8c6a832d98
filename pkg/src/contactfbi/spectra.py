"""Spectral measurements for the lifted transfer operators.

Four groups of tools live here:

* weighted norm measurements of the model operator L0_hat on a grid over
  R^(2d), with the interpolating family of weights V_s;
* dense spectra of the lift matrix at several refinement levels, with
  bookkeeping for which eigenvalues persist under refinement;
* a family of localized packets concentrated at the point of maximal
  expansion, whose Rayleigh ratios bound the operator norm from below;
* a matrix-free audit of one frequency block of the weighted lift around
  eta0 ~ k^2 against its linearized surrogate.

The refinement-stable eigenvalue counts reported by SpectrumReport are an
empirical proxy for the discrete part of the spectrum, never a claim about
the true essential spectral radius.
"""

import json

import numpy as np

from .aniso_norm import (bracket, cal_w_aniso, chi, cutoff_triple, q_block,
                         q_tilde, q_tilde_support, v_s)
from .contact_geometry import alpha0_covector, det_on_unstable
from .fbi_core import PhaseAxis, PhaseGrid, l0_hat_kernel
from .numerics import operator_norm
from .partial_fbi import (_slice_adjoint, _slice_forward,
                          check_transversal_spacing, partial_packet,
                          reconstruct_slice, sample_volume, scatter_slice)
from .transfer_ops import (_flow_shift_values, _map_points,
                           flow_fourier_coeffs, lift_kernel, transfer_apply)


class SpectrumReport:
    """Eigenvalue listing at one refinement level, sorted by modulus.

    stable_count is the number of eigenvalues outside the disk of radius
    lambda_t_bound (1 + margin); comparing it across refinement levels is
    the persistence proxy used everywhere in this module.
    """

    def __init__(self, eigenvalues, refinement, lambda_t_bound, margin=0.1):
        eigs = np.asarray(eigenvalues, dtype=complex).ravel()
        assert np.all(np.isfinite(eigs.real)) and np.all(np.isfinite(eigs.imag))
        order = np.argsort(-np.abs(eigs))
        self.eigenvalues = eigs[order]
        self.refinement = dict(refinement)
        self.lambda_t_bound = float(lambda_t_bound)
        self.margin = float(margin)

    @property
    def moduli(self):
        return np.abs(self.eigenvalues)

    @property
    def stable_count(self):
        cut = self.lambda_t_bound * (1.0 + self.margin)
        return int(np.sum(self.moduli > cut))

    def outliers(self):
        return self.eigenvalues[:self.stable_count]

    def inside_fraction(self):
        cut = self.lambda_t_bound * (1.0 + self.margin)
        return float(np.mean(self.moduli <= cut))

    def to_dict(self):
        return {"eigenvalues_re": self.eigenvalues.real.tolist(),
                "eigenvalues_im": self.eigenvalues.imag.tolist(),
                "moduli": self.moduli.tolist(),
                "lambda_t_bound": self.lambda_t_bound,
                "margin": self.margin,
                "stable_count": self.stable_count,
                "refinement": self.refinement}

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    def save_csv(self, path):
        meta = " ".join("%s=%s" % (k, self.refinement[k])
                        for k in sorted(self.refinement))
        lines = ["# %s" % meta,
                 "# bound=%.17g margin=%.17g stable_count=%d" % (
                     self.lambda_t_bound, self.margin, self.stable_count),
                 "index,re,im,modulus"]
        for i, z in enumerate(self.eigenvalues):
            lines.append("%d,%.17g,%.17g,%.17g"
                         % (i, z.real, z.imag, abs(z)))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def persistent_outliers(rep_a, rep_b, rel=0.05):
    """Pairwise comparison of the outlier sets of two reports.

    The counts must agree and the sorted outlier moduli must match within
    the relative tolerance for the pair to count as persistent.
    """
    ca, cb = rep_a.stable_count, rep_b.stable_count
    out = {"count_a": ca, "count_b": cb, "counts_match": ca == cb,
           "max_rel_gap": 0.0}
    if ca == cb and ca > 0:
        ma = np.abs(rep_a.outliers())
        mb = np.abs(rep_b.outliers())
        gap = float(np.max(np.abs(ma - mb) / np.maximum(ma, mb)))
        out["max_rel_gap"] = gap
        out["persistent"] = gap <= rel
    else:
        out["persistent"] = ca == cb
    return out


def _axis_lattice(half_width, step):
    """Symmetric half-offset lattice of the given step covering the box."""
    assert half_width > 0 and step > 0
    n = max(2, int(np.ceil(2.0 * half_width / step)))
    return (np.arange(n) + 0.5 - n / 2.0) * step


def weighted_norm_measure(b, s, r, half_widths=None, spacing=0.7,
                          iters=300, restarts=3, seed=0):
    """Power-iteration norm of L0_hat on the V_s-weighted grid over R^(2d).

    With r = 0 the weight is identically one and the value measures the
    plain L2 norm of the model operator.  half_widths gives the box size
    per axis, so the grid may be anisotropic.
    """
    bm = np.asarray(getattr(b, "matrix", b), dtype=float)
    dim = bm.shape[0]
    assert s >= 1
    if half_widths is None:
        half_widths = (12.0,) * dim
    assert len(half_widths) == dim
    lattices = [_axis_lattice(hw, spacing) for hw in half_widths]
    mesh = np.meshgrid(*lattices, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    mu = float(spacing ** dim)
    kern = l0_hat_kernel(bm, pts, pts)
    w = np.asarray(v_s(pts, s, r), dtype=float)
    assert np.all(w > 0)
    scaled = (w[:, None] / w[None, :]) * kern
    sig = operator_norm(lambda v: scaled @ v,
                        lambda v: scaled.conj().T @ v,
                        pts.shape[0], iters=iters, restarts=restarts,
                        seed=seed)
    return mu * sig


def weight_diagonal(flow, pg, r):
    """The phase space weight on the lift index set, flow-slice major."""
    pts = pg.points()
    d2 = pg.dim
    npts = pg.num_points
    out = np.empty(flow.n_points * npts)
    for s, xi0 in enumerate(flow.freqs()):
        xi = np.concatenate([np.full((npts, 1), xi0), pts[:, d2:]], axis=1)
        out[s * npts:(s + 1) * npts] = cal_w_aniso(pts[:, :d2], xi, r)
    return out


def conjugated_operator(matrix, wspec):
    """Dense W-conjugated operator W (A mu) W^{-1} of a lift matrix.

    The conjugation is a similarity of the finite matrix, so the computed
    eigenvalues coincide with those of the unconjugated operator; keeping
    the weight explicit matches the weighted-space formulation and keeps
    the eigenvectors meaningful.
    """
    assert matrix.phase_out is matrix.phase_in or \
        matrix.phase_out.shape() == matrix.phase_in.shape()
    w = weight_diagonal(matrix.flow, matrix.phase_in, wspec.r)
    a = matrix.values * matrix.in_measure
    return (w[:, None] / w[None, :]) * a


def model_spectrum(spec, wspec, levels, bound, margin=0.1, max_size=4000):
    """Dense spectra of the weighted lift at the given refinement levels.

    levels is a list of (flow, trans, pg) triples from coarse to fine;
    each yields one SpectrumReport against the same bound.
    """
    reports = []
    for flow, trans, pg in levels:
        mat = lift_kernel(spec, flow, trans, pg)
        n = mat.values.shape[0]
        if n > max_size:
            raise ValueError("matrix size %d exceeds the dense eigenvalue "
                             "guard %d" % (n, max_size))
        eigs = np.linalg.eigvals(conjugated_operator(mat, wspec))
        refinement = {"n0": flow.n_points,
                      "half_period": flow.half_period,
                      "trans_n": trans.points_per_axis,
                      "trans_half_width": trans.half_width,
                      "n_centers": mat.phase_in.axes[0].centers.size,
                      "n_freqs": mat.phase_in.axes[0].freqs.size,
                      "rows": n}
        reports.append(SpectrumReport(eigs, refinement, bound, margin))
    return reports


def slice_block_defect(matrix):
    """Largest cross-slice entry relative to the largest diagonal-block
    entry; near zero exactly when the lift is block diagonal over xi0."""
    n0 = matrix.flow.n_points
    npo = matrix.phase_out.num_points
    npi = matrix.phase_in.num_points
    diag = 0.0
    off = 0.0
    for s in range(n0):
        for t in range(n0):
            block = matrix.values[s * npo:(s + 1) * npo,
                                  t * npi:(t + 1) * npi]
            peak = float(np.max(np.abs(block)))
            if s == t:
                diag = max(diag, peak)
            else:
                off = max(off, peak)
    assert diag > 0, "empty operator has no diagonal scale"
    return off / diag


def expansion_argmax(spec, flow, trans):
    """Transversal grid point maximizing |g| / sqrt(det DF on E^+)."""
    gv = np.abs(spec.g_values(flow, trans)).reshape(flow.n_points, -1)
    roots = np.sqrt(np.array([det_on_unstable(spec.map, p)
                              for p in trans.nodes()]))
    score = gv.max(axis=0) / roots
    return trans.nodes()[int(np.argmax(score))]


def _windowed_packet(x_star, xi, m):
    """Packet at (0, x_star) with frequency xi, windowed by chi(m |y - x|)."""
    phi = partial_packet(x_star, xi)
    x_full = np.concatenate([[0.0], x_star])

    def u(pts):
        pts = np.asarray(pts, dtype=float)
        dist = np.linalg.norm(pts - x_full, axis=-1)
        return phi(pts) * chi(m * dist)

    return u


def weighted_gram(vols, pg, wspec):
    """Gram matrix of volume fields in the W^r-weighted transform metric.

    Streams one flow frequency slice at a time so the full transform of
    the fields is never materialized.
    """
    assert len(vols) > 0
    flow, trans = vols[0].flow, vols[0].trans
    check_transversal_spacing(trans, flow)
    dft = flow.dft_matrix()
    hats = [np.tensordot(dft, v.values, axes=([1], [0])) for v in vols]
    pts = pg.points()
    d2 = pg.dim
    mu = flow.freq_spacing * pg.weight
    gram = np.zeros((len(vols), len(vols)), dtype=complex)
    for s, xi0 in enumerate(flow.freqs()):
        kappa = float(bracket(xi0))
        xi = np.concatenate([np.full((pts.shape[0], 1), xi0), pts[:, d2:]],
                            axis=1)
        w = cal_w_aniso(pts[:, :d2], xi, wspec.r)
        coeffs = np.stack([
            (_slice_forward(h[s], pg, kappa, trans).ravel() * w)
            for h in hats])
        gram += mu * (coeffs.conj() @ coeffs.T)
    return gram


def lower_bound_family(spec, flow, trans, pg, n_ks, wspec, m=4,
                       x_star=None):
    """Rayleigh ratios of localized packets at the expansion maximizer.

    Each test function is a packet at (0, x_star) with frequency
    n_k alpha0(x_star), windowed by chi(m |y - x|) and normalized in the
    weighted transform metric.  Returns the ratios together with the Gram
    matrices of the normalized family and of its image under the transfer
    operator.
    """
    fs = flow.freq_spacing
    fmax = float(np.max(flow.freqs()))
    for nk in n_ks:
        if abs(nk / fs - round(nk / fs)) > 1e-9:
            raise ValueError("frequency %r is not on the flow frequency "
                             "lattice of spacing %.4g" % (nk, fs))
        if nk > fmax or nk < float(np.min(flow.freqs())):
            raise ValueError("frequency %r exceeds the flow grid Nyquist "
                             "range [%.4g, %.4g]"
                             % (nk, float(np.min(flow.freqs())), fmax))
    if x_star is None:
        x_star = expansion_argmax(spec, flow, trans)
    x_star = np.asarray(x_star, dtype=float)
    alpha = alpha0_covector(x_star)
    vols = []
    for nk in n_ks:
        u = _windowed_packet(x_star, float(nk) * alpha, m)
        vols.append(sample_volume(u, flow, trans))
        vols.append(transfer_apply(spec, u, flow=flow, trans=trans))
    gram = weighted_gram(vols, pg, wspec)
    nk_count = len(n_ks)
    norms_phi = np.sqrt(np.abs(np.diag(gram)[0::2]))
    norms_img = np.sqrt(np.abs(np.diag(gram)[1::2]))
    assert np.all(norms_phi > 0), "degenerate test packet"
    c_k = 1.0 / norms_phi
    ratios = norms_img / norms_phi
    gram_phi = gram[0::2, 0::2] / np.outer(norms_phi, norms_phi)
    if np.all(norms_img > 0):
        gram_img = gram[1::2, 1::2] / np.outer(norms_img, norms_img)
    else:
        gram_img = np.zeros((nk_count, nk_count), dtype=complex)
    return {"x_star": x_star, "n_ks": list(n_ks), "c_k": c_k,
            "ratios": ratios, "gram_phi": gram_phi, "gram_image": gram_img,
            "min_ratio": float(np.min(ratios))}


class _YWeight:
    """Carries the quadrature weight expected by the slice primitives."""

    def __init__(self, weight):
        self.weight = float(weight)


class CentralFrame:
    """Index sets, quadrature and amplitude data for one frequency block.

    Everything that the block and its linearized surrogate share is built
    once here: the eta0 lattice inside the q-tilde slab, anisotropic
    center/frequency/quadrature lattices scaled to the packet width 1/k,
    the flow Fourier data of the amplitude, the mapped quadrature points
    and the column cutoff.
    """

    def __init__(self, spec, k, wspec, flow, c_margin=3.2, f_margin=1.5,
                 ghat_offsets=6, spacing_factor=0.7):
        assert k >= 1
        self.spec = spec
        self.k = int(k)
        self.wspec = wspec
        self.flow = flow
        d2 = 2 * spec.d
        self.d2 = d2
        kk = float(k * k)
        self.kk = kk
        fs = flow.freq_spacing
        self.fs = fs
        lo, hi = q_tilde_support(k)
        t0, t1 = int(np.ceil(lo / fs)), int(np.floor(hi / fs))
        if t1 < t0:
            raise ValueError("flow frequency lattice of spacing %.4g "
                             "misses the q-tilde slab [%.4g, %.4g]"
                             % (fs, lo, hi))
        self.eta_idx = np.arange(t0, t1 + 1)
        pad = int(min(flow.n_points - 1, ghat_offsets))
        self.dmax = pad
        self.xi_idx = np.arange(t0 - pad, t1 + 1 + pad)
        self.eta0 = fs * self.eta_idx
        self.xi0 = fs * self.xi_idx
        bmat = np.asarray(spec.map.f_dag_jac(np.zeros(d2)), dtype=float)
        self.bmat = bmat

        width = 1.0 / k
        c_h = spacing_factor * width
        f_h = spacing_factor * k
        z_half = (2.0 / 3.0) * float(k) ** (wspec.delta - 1.0) + 0.5 * width
        f_half_in = 2.0 * float(bracket(self.xi0.max())) ** wspec.tau \
            + f_margin * k
        babs = np.abs(bmat)
        binv_abs = np.abs(np.linalg.inv(bmat))
        y_half = binv_abs @ np.full(d2, z_half + c_margin * width)
        out_f_half = babs.T @ np.full(d2, f_half_in) + f_margin * k
        # the quadrature step must keep the whole out frequency window
        # inside one alias period
        y_h = np.minimum(c_h, np.pi / (1.05 * out_f_half))
        x_half = y_half + c_margin * width

        y_lattices = [_axis_lattice(y_half[j], y_h[j]) for j in range(d2)]
        in_axes = [PhaseAxis(_axis_lattice(z_half, c_h),
                             _axis_lattice(f_half_in, f_h),
                             y_lattices[j]) for j in range(d2)]
        out_axes = [PhaseAxis(_axis_lattice(x_half[j], c_h),
                              _axis_lattice(out_f_half[j], f_h),
                              y_lattices[j]) for j in range(d2)]
        self.pg_in = PhaseGrid(in_axes)
        self.pg_out = PhaseGrid(out_axes)
        self.y_shape = tuple(lat.size for lat in y_lattices)
        mesh = np.meshgrid(*y_lattices, indexing="ij")
        self.ypts = np.stack([mm.ravel() for mm in mesh], axis=-1)
        self.y_weight = float(np.prod([lat[1] - lat[0]
                                       for lat in y_lattices]))

        # amplitude data: flow Fourier coefficients on the quadrature
        # points and at the origin of the transversal slice
        y0 = flow.nodes()
        ny = self.ypts.shape[0]
        vol_pts = np.concatenate(
            [np.repeat(y0, ny)[:, None],
             np.tile(self.ypts, (flow.n_points, 1))], axis=1)
        gv = np.asarray(spec.g(vol_pts), dtype=complex)
        self.ghat = flow_fourier_coeffs(gv, flow)
        zero_pts = np.concatenate([y0[:, None],
                                   np.zeros((flow.n_points, d2))], axis=1)
        g0 = np.asarray(spec.g(zero_pts), dtype=complex)
        self.ghat0 = flow_fourier_coeffs(g0, flow)[:, 0]

        self.fy = _map_points(spec.map, self.ypts)
        self.fv = _flow_shift_values(spec.map, self.ypts)
        self.by = self.ypts @ bmat.T

        # column cutoff q~_k(eta0) Q_{k,0}(z) X_ctr0(z, eta), and the
        # weights in both the true and the frozen frequency
        pts_in = self.pg_in.points()
        zs = pts_in[:, :d2]
        fd_in = pts_in[:, d2:]
        npi = self.pg_in.num_points
        qb = np.asarray(q_block(zs, k, (0,) * d2, wspec.delta), dtype=float)
        self.col_cut = np.empty((self.eta0.size, npi))
        self.w_in = np.empty((self.eta0.size, npi))
        for t, e0 in enumerate(self.eta0):
            xi = np.concatenate([np.full((npi, 1), e0), fd_in], axis=1)
            _, _, ctr0 = cutoff_triple(zs, xi, wspec)
            self.col_cut[t] = float(q_tilde(e0, k)) * qb * ctr0
            self.w_in[t] = cal_w_aniso(zs, xi, wspec.r)
        xi_frozen = np.concatenate([np.full((npi, 1), kk), fd_in], axis=1)
        self.w_in_frozen = np.broadcast_to(
            cal_w_aniso(zs, xi_frozen, wspec.r), (self.eta0.size, npi))

        pts_out = self.pg_out.points()
        xs = pts_out[:, :d2]
        fd_out = pts_out[:, d2:]
        npo = self.pg_out.num_points
        self.w_out = np.empty((self.xi0.size, npo))
        for s, x0 in enumerate(self.xi0):
            xi = np.concatenate([np.full((npo, 1), x0), fd_out], axis=1)
            self.w_out[s] = cal_w_aniso(xs, xi, wspec.r)
        xi_frozen = np.concatenate([np.full((npo, 1), kk), fd_out], axis=1)
        self.w_out_frozen = np.broadcast_to(
            cal_w_aniso(xs, xi_frozen, wspec.r), (self.xi0.size, npo))

    def sizes(self):
        return {"n_eta": int(self.eta0.size), "n_xi": int(self.xi0.size),
                "phase_in": int(self.pg_in.num_points),
                "phase_out": int(self.pg_out.num_points),
                "quad": int(self.ypts.shape[0])}


class CentralBlock:
    """One frequency block of the weighted lift, applied matrix free.

    primed=False gives the true block: amplitude Fourier data on the
    quadrature points, the nonlinear transversal map and the flow shift,
    packet widths <xi0> and <eta0>, weights at the true frequencies.
    primed=True gives the linearized surrogate: frozen Jacobian at the
    origin, amplitude data at y = 0, both widths k^2, no flow shift and
    weights at the frozen frequency.
    """

    def __init__(self, frame, primed):
        self.frame = frame
        self.primed = bool(primed)
        f = frame
        if primed:
            self.kap_i = np.full(f.eta0.size, f.kk)
            self.kap_o = np.full(f.xi0.size, f.kk)
            self.mapped = f.by
            self.shift = np.zeros(f.ypts.shape[0])
            self.col = f.col_cut / f.w_in_frozen
            self.row = f.w_out_frozen
        else:
            self.kap_i = np.asarray(bracket(f.eta0), dtype=float)
            self.kap_o = np.asarray(bracket(f.xi0), dtype=float)
            self.mapped = f.fy
            self.shift = f.fv
            self.col = f.col_cut / f.w_in
            self.row = f.w_out
        self.scale = f.fs / np.sqrt(2.0 * np.pi)
        self._yw = _YWeight(f.y_weight)

    def _ghat_row(self, moff):
        f = self.frame
        idx = moff + f.flow.n_points - 1
        if self.primed:
            return f.ghat0[idx]
        return f.ghat[idx]

    def _pairs(self):
        f = self.frame
        n0 = f.flow.n_points
        for t in range(f.eta0.size):
            for s in range(f.xi0.size):
                moff = int(f.xi_idx[s] - f.eta_idx[t])
                if abs(moff) <= f.dmax and abs(moff) <= n0 - 1:
                    yield s, t, moff

    def apply(self, u):
        f = self.frame
        u = np.asarray(u, dtype=complex)
        assert u.shape == (f.eta0.size, f.pg_in.num_points)
        v = u * self.col
        out = np.zeros((f.xi0.size, f.pg_out.num_points), dtype=complex)
        recs = {}
        for s, t, moff in self._pairs():
            if t not in recs:
                rec = reconstruct_slice(v[t].reshape(f.pg_in.shape()),
                                        f.pg_in, self.kap_i[t], self.mapped)
                recs[t] = rec * np.exp(1j * f.eta0[t] * self.shift)
            mid = (self._ghat_row(moff) * recs[t]).reshape(f.y_shape)
            out[s] += self.scale * _slice_forward(
                mid, f.pg_out, self.kap_o[s], self._yw).ravel()
        return out * self.row

    def apply_adjoint(self, w):
        f = self.frame
        w = np.asarray(w, dtype=complex)
        assert w.shape == (f.xi0.size, f.pg_out.num_points)
        wr = w * self.row
        acc = np.zeros((f.eta0.size, f.pg_in.num_points), dtype=complex)
        backs = {}
        back_factor = f.y_weight / f.pg_out.weight
        for s, t, moff in self._pairs():
            if s not in backs:
                backs[s] = back_factor * _slice_adjoint(
                    wr[s].reshape(f.pg_out.shape()), f.pg_out,
                    self.kap_o[s]).ravel()
            gfac = self._ghat_row(moff) * np.exp(1j * f.eta0[t] * self.shift)
            mid = np.conj(gfac) * backs[s]
            acc[t] += self.scale * scatter_slice(
                mid, f.pg_in, self.kap_i[t], self.mapped).ravel()
        ratio = f.pg_out.weight / f.pg_in.weight
        return ratio * acc * self.col


def _pair_norm(matvec, rmatvec, shape, iters=20, restarts=2, seed=0):
    """Largest singular value via power iteration on A* A.

    The in-space quadrature weight is uniform over the index set, so it
    cancels in the Rayleigh quotient and plain vdot inner products apply.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        v /= np.linalg.norm(v.ravel())
        est = 0.0
        for _ in range(iters):
            av = matvec(v)
            v2 = rmatvec(av)
            num = float(np.real(np.vdot(v.ravel(), v2.ravel())))
            size = float(np.linalg.norm(v2.ravel()))
            if size == 0.0 or num <= 0.0:
                est = max(est, 0.0)
                break
            est = np.sqrt(num)
            v = v2 / size
        best = max(best, est)
    return best


def central_block_audit(spec, k, wspec, flow, iters=20, seed=0,
                        **frame_kwargs):
    """Compare one frequency block of the weighted lift with its
    linearized surrogate.

    Returns the power-iteration norms of the surrogate and of the
    difference; for k^2 <= N/2 both blocks vanish identically because the
    compact cutoff swallows the whole q-tilde slab.
    """
    if k * k <= wspec.big_n / 2.0:
        return {"k": int(k), "vanishes": True, "norm_primed": 0.0,
                "norm_diff": 0.0, "sizes": {}}
    frame = CentralFrame(spec, k, wspec, flow, **frame_kwargs)
    if float(np.max(np.abs(frame.col_cut))) == 0.0:
        return {"k": int(k), "vanishes": True, "norm_primed": 0.0,
                "norm_diff": 0.0, "sizes": frame.sizes()}
    block = CentralBlock(frame, primed=False)
    surrogate = CentralBlock(frame, primed=True)
    shape = (frame.eta0.size, frame.pg_in.num_points)
    norm_p = _pair_norm(surrogate.apply, surrogate.apply_adjoint, shape,
                        iters=iters, seed=seed)
    norm_d = _pair_norm(
        lambda u: block.apply(u) - surrogate.apply(u),
        lambda w: block.apply_adjoint(w) - surrogate.apply_adjoint(w),
        shape, iters=iters, seed=seed)
    return {"k": int(k), "vanishes": False, "norm_primed": float(norm_p),
            "norm_diff": float(norm_d), "sizes": frame.sizes(),
            "eta0": frame.eta0.copy(), "xi0": frame.xi0.copy()}

"""Partial wave packet transform on R^(2d+1).

The transform treats the flow coordinate y0 and the transversal block
y_dag differently: a Fourier transform in y0 followed, slice by slice in
the flow frequency xi0, by a transversal wave packet transform whose
packets have width <xi0>^(-1/2),

    Phi_{x_dag,xi}(y) = (<xi0>^(d/2) a_2d / (2 pi)^(1/2))
        * exp(i xi0 y0 + i xi_dag.(y_dag - x_dag/2)
              - <xi0> |y_dag - x_dag|^2 / 2).

Discretely the flow axis is periodic with an integer-type frequency grid,
which makes the Fourier factor exactly unitary, and each transversal slice
reuses the dual-lattice construction of the plain transform.  Since the
packet width shrinks with <xi0>, the transversal spacing must satisfy
h <= 0.7 <xi0>^(-1/2) for the largest flow frequency on the grid.
"""

import string

import numpy as np

from .aniso_norm import bracket
from .fbi_core import PhaseField, PhaseGrid, dual_phase_grid, normalization
from .numerics import GridSpec


class FlowGrid:
    """Periodic grid on [-L0, L0) for the flow coordinate with the dual
    integer-type frequency lattice k pi / L0."""

    def __init__(self, half_period, n_points):
        assert n_points >= 2 and n_points % 2 == 0
        self.half_period = float(half_period)
        self.n_points = int(n_points)
        self.spacing = 2.0 * self.half_period / self.n_points

    def nodes(self):
        return -self.half_period + self.spacing * np.arange(self.n_points)

    def freqs(self):
        k = np.arange(self.n_points) - self.n_points // 2
        return k * np.pi / self.half_period

    @property
    def freq_spacing(self):
        return np.pi / self.half_period

    def dft_matrix(self):
        """Forward factor: rows are (2 pi)^(-1/2) h0 exp(-i xi0 y0)."""
        y = self.nodes()
        f = self.freqs()
        return (2.0 * np.pi) ** (-0.5) * self.spacing * \
            np.exp(-1j * np.outer(f, y))

    def idft_matrix(self):
        """Adjoint factor with the frequency weight; exact inverse of the
        forward factor on this grid."""
        y = self.nodes()
        f = self.freqs()
        return (2.0 * np.pi) ** (-0.5) * self.freq_spacing * \
            np.exp(1j * np.outer(y, f))


class VolumeField:
    """Function on the periodic-flow times transversal-box grid, stored
    with shape (n0, n_t, ..., n_t)."""

    def __init__(self, flow, trans, values):
        values = np.asarray(values, dtype=complex)
        expect = (flow.n_points,) + trans.shape()
        assert values.shape == expect, \
            "shape %s does not match %s" % (values.shape, expect)
        self.flow = flow
        self.trans = trans
        self.values = values

    def norm(self):
        w = self.flow.spacing * self.trans.weight
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))


def sample_volume(f, flow, trans):
    """Sample f on the product grid; f gets points (N, 2d+1) as (y0, y_dag)."""
    y0 = flow.nodes()
    yd = trans.nodes()
    pts = np.concatenate([
        np.repeat(y0, yd.shape[0])[:, None],
        np.tile(yd, (flow.n_points, 1))], axis=1)
    vals = np.asarray(f(pts), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise ValueError("sampled function produced non-finite values")
    return VolumeField(flow, trans, vals.reshape((flow.n_points,) + trans.shape()))


class PartialPhaseField:
    """Transform data indexed by (xi0 slice, centers..., transversal freqs...)."""

    def __init__(self, flow, phase, values):
        values = np.asarray(values, dtype=complex)
        expect = (flow.n_points,) + phase.shape()
        assert values.shape == expect
        self.flow = flow
        self.phase = phase
        self.values = values

    def norm(self):
        w = self.flow.freq_spacing * self.phase.weight
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))


class PartialPacketIndex:
    """Label (x_dag, xi0, xi_dag) of a single partial packet."""

    def __init__(self, x_dag, xi0, xi_dag):
        self.x_dag = np.asarray(x_dag, dtype=float)
        self.xi0 = float(xi0)
        self.xi_dag = np.asarray(xi_dag, dtype=float)
        assert self.x_dag.shape == self.xi_dag.shape
        assert np.all(np.isfinite(self.x_dag))
        assert np.isfinite(self.xi0)
        assert np.all(np.isfinite(self.xi_dag))

    @property
    def xi(self):
        return np.concatenate([[self.xi0], self.xi_dag])


def partial_packet(x_dag, xi=None):
    """Pointwise packet Phi_{x_dag, xi} on R^(2d+1) for oracle checks.

    Accepts either a PartialPacketIndex or the pair (x_dag, xi)."""
    if xi is None:
        idx = x_dag
        x_dag, xi = idx.x_dag, idx.xi
    x_dag = np.asarray(x_dag, dtype=float)
    xi = np.asarray(xi, dtype=float)
    d2 = x_dag.size
    kappa = float(bracket(xi[0]))
    pref = kappa ** (d2 / 4.0) * normalization(d2) / np.sqrt(2.0 * np.pi)

    def phi(y):
        y = np.asarray(y, dtype=float)
        y0 = y[..., 0]
        yd = y[..., 1:]
        phase = xi[0] * y0 + (yd - x_dag / 2.0) @ xi[1:]
        env = np.sum((yd - x_dag) ** 2, axis=-1)
        return pref * np.exp(1j * phase - kappa * env / 2.0)

    return phi


def check_transversal_spacing(trans, flow):
    kappa_max = float(np.max(bracket(flow.freqs())))
    if trans.spacing > 0.7 / np.sqrt(kappa_max):
        raise ValueError(
            "transversal spacing %.4g too coarse for flow frequencies up to "
            "<xi0> = %.4g (need <= %.4g)" % (
                trans.spacing, kappa_max, 0.7 / np.sqrt(kappa_max)))


def _slice_axis_matrix(ax, kappa, conj):
    x = ax.centers[:, None, None]
    f = ax.freqs[None, :, None]
    y = ax.y[None, None, :]
    sgn = -1.0 if conj else 1.0
    return np.exp(sgn * 1j * f * (y - x / 2.0) - kappa * (y - x) ** 2 / 2.0)


def _slice_forward(slice_vals, pg, kappa, trans):
    d2 = pg.dim
    work = slice_vals
    for a in range(d2):
        m = _slice_axis_matrix(pg.axes[a], kappa, conj=True)
        work = np.tensordot(work, m, axes=([0], [2]))
    perm = list(range(0, 2 * d2, 2)) + list(range(1, 2 * d2, 2))
    work = np.transpose(work, perm)
    pref = kappa ** (d2 / 4.0) * normalization(d2) * trans.weight
    return pref * work


def _slice_adjoint(slice_vals, pg, kappa):
    d2 = pg.dim
    work = slice_vals
    for a in range(d2):
        m = _slice_axis_matrix(pg.axes[a], kappa, conj=False)
        work = np.tensordot(work, m, axes=([0, d2 - a], [0, 1]))
    pref = kappa ** (d2 / 4.0) * normalization(d2) * pg.weight
    return pref * work


def reconstruct_slice(slice_vals, pg, kappa, pts):
    """Evaluate the adjoint superposition of one frequency slice at
    arbitrary transversal points.

    Same prefactor and measure as _slice_adjoint, but the evaluation
    points need not lie on the quadrature grid, so the per-axis structure
    is contracted with one factor per axis through einsum.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d2 = pg.dim
    assert pts.shape[1] == d2
    letters = string.ascii_lowercase
    cs, fs = letters[:d2], letters[d2:2 * d2]
    operands = [np.asarray(slice_vals, dtype=complex)]
    subscripts = [cs + fs]
    for a, ax in enumerate(pg.axes):
        p = pts[:, a][:, None, None]
        c = ax.centers[None, :, None]
        f = ax.freqs[None, None, :]
        operands.append(np.exp(1j * f * (p - c / 2.0)
                               - kappa * (p - c) ** 2 / 2.0))
        subscripts.append("z" + cs[a] + fs[a])
    out = np.einsum(",".join(subscripts) + "->z", *operands, optimize=True)
    return kappa ** (d2 / 4.0) * normalization(d2) * pg.weight * out


def scatter_slice(vals, pg, kappa, pts):
    """Adjoint companion of reconstruct_slice: push values sitting at
    arbitrary transversal points back onto the phase lattice of one
    slice, with the same prefactor and measure."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vals = np.asarray(vals, dtype=complex).ravel()
    d2 = pg.dim
    assert pts.shape[1] == d2
    assert vals.size == pts.shape[0]
    letters = string.ascii_lowercase
    cs, fs = letters[:d2], letters[d2:2 * d2]
    operands = [vals]
    subscripts = ["z"]
    for a, ax in enumerate(pg.axes):
        p = pts[:, a][:, None, None]
        c = ax.centers[None, :, None]
        f = ax.freqs[None, None, :]
        operands.append(np.exp(-1j * f * (p - c / 2.0)
                               - kappa * (p - c) ** 2 / 2.0))
        subscripts.append("z" + cs[a] + fs[a])
    out = np.einsum(",".join(subscripts) + "->" + cs + fs,
                    *operands, optimize=True)
    return kappa ** (d2 / 4.0) * normalization(d2) * pg.weight * out


def pfbi_forward(vol, pg=None, n_freq=None):
    """Apply the partial transform, materializing all flow slices."""
    if pg is None:
        pg = dual_phase_grid(vol.trans, n_freq=n_freq)
    check_transversal_spacing(vol.trans, vol.flow)
    f0 = vol.flow.dft_matrix()
    hat = np.tensordot(f0, vol.values, axes=([1], [0]))
    out = np.empty((vol.flow.n_points,) + pg.shape(), dtype=complex)
    for s, xi0 in enumerate(vol.flow.freqs()):
        kappa = float(bracket(xi0))
        out[s] = _slice_forward(hat[s], pg, kappa, vol.trans)
    return PartialPhaseField(vol.flow, pg, out)


def pfbi_adjoint(pf, trans=None):
    """Adjoint of the partial transform back to the volume grid."""
    pg = pf.phase
    if trans is None:
        trans = pg.space_grid()
    hat = np.empty((pf.flow.n_points,) + trans.shape(), dtype=complex)
    for s, xi0 in enumerate(pf.flow.freqs()):
        kappa = float(bracket(xi0))
        hat[s] = _slice_adjoint(pf.values[s], pg, kappa)
    inv = pf.flow.idft_matrix()
    vals = np.tensordot(inv, hat, axes=([1], [0]))
    return VolumeField(pf.flow, trans, vals)


def pfbi_roundtrip(vol, pg=None, n_freq=None, weight=None):
    """Streamed T* (W .) T application, one flow slice at a time.

    With weight None this is the resolution of identity; a callable
    weight(xi0, pg) returning an array of the phase grid shape turns it
    into a multiplier sandwiched between the transform pair.
    """
    if pg is None:
        pg = dual_phase_grid(vol.trans, n_freq=n_freq)
    check_transversal_spacing(vol.trans, vol.flow)
    f0 = vol.flow.dft_matrix()
    inv = vol.flow.idft_matrix()
    hat = np.tensordot(f0, vol.values, axes=([1], [0]))
    out_hat = np.empty_like(hat)
    for s, xi0 in enumerate(vol.flow.freqs()):
        kappa = float(bracket(xi0))
        coeff = _slice_forward(hat[s], pg, kappa, vol.trans)
        if weight is not None:
            coeff = coeff * weight(xi0, pg)
        out_hat[s] = _slice_adjoint(coeff, pg, kappa)
    vals = np.tensordot(inv, out_hat, axes=([1], [0]))
    return VolumeField(vol.flow, vol.trans, vals)


def pcal_apply(pf, trans=None):
    """The projection onto the transform range, block diagonal over xi0:
    each slice goes through the adjoint and forward of its own width."""
    pg = pf.phase
    if trans is None:
        trans = pg.space_grid()
    out = np.empty_like(pf.values)
    for s, xi0 in enumerate(pf.flow.freqs()):
        kappa = float(bracket(xi0))
        mid = _slice_adjoint(pf.values[s], pg, kappa)
        out[s] = _slice_forward(mid, pg, kappa, trans)
    return PartialPhaseField(pf.flow, pg, out)

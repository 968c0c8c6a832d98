"""Tests for the transfer operator, its lift and the audits."""

import numpy as np
import pytest

from contactfbi.aniso_norm import WeightSpec
from contactfbi.contact_geometry import ContactMap
from contactfbi.fbi_core import dual_phase_grid
from contactfbi.numerics import make_grid
from contactfbi.partial_fbi import (FlowGrid, PartialPhaseField,
                                    pcal_apply, pfbi_forward, sample_volume)
from contactfbi.transfer_ops import (OperatorMatrix, TransferSpec,
                                     cutoff_diagonals, decompose,
                                     flow_fourier_coeffs,
                                     kernel_bound_audit, kernel_entry_direct,
                                     lambda_delta, lambda_global, lift_apply,
                                     lift_kernel, phase_index, transfer_apply)


def gauss_amp(sigma, amp=1.0):
    def g(pts):
        r2 = np.sum(pts[:, 1:] ** 2, axis=-1)
        return amp * np.exp(-r2 / (2.0 * sigma ** 2))
    return g


def ones_amp(pts):
    return np.ones(pts.shape[0], dtype=complex)


def zero_amp(pts):
    return np.zeros(pts.shape[0], dtype=complex)


def gauss_u(sigma, k0=1.0):
    def u(pts):
        r2 = np.sum(pts[:, 1:] ** 2, axis=-1)
        return np.exp(1j * k0 * pts[:, 0] - r2 / (2.0 * sigma ** 2))
    return u


class TestTransferApply:

    def setup_method(self):
        self.flow = FlowGrid(np.pi, 6)
        self.trans = make_grid(2, 4.0, 16)

    def test_identity_map_unit_amplitude(self):
        spec = TransferSpec(ContactMap.linear(np.eye(2)), ones_amp)
        vol = sample_volume(gauss_u(0.8), self.flow, self.trans)
        out = transfer_apply(spec, vol)
        assert np.max(np.abs(out.values - vol.values)) <= 1e-12

    def test_zero_amplitude(self):
        spec = TransferSpec(ContactMap.shear(2.0, 0.1), zero_amp)
        out = transfer_apply(spec, gauss_u(0.8), self.flow, self.trans)
        assert np.max(np.abs(out.values)) == 0.0

    def test_interpolated_matches_callable(self):
        spec = TransferSpec(ContactMap.shear(1.2, 0.1), gauss_amp(0.35))
        u = gauss_u(0.9)
        vol = sample_volume(u, self.flow, self.trans)
        exact = transfer_apply(spec, u, self.flow, self.trans)
        approx = transfer_apply(spec, vol, method="cubic")
        err = np.linalg.norm((approx.values - exact.values).ravel())
        ref = np.linalg.norm(exact.values.ravel())
        assert err / ref <= 5e-3

    def test_escape_raises(self):
        spec = TransferSpec(ContactMap.linear(np.diag([4.0, 0.25])), ones_amp)
        small = make_grid(2, 1.5, 6)
        vol = sample_volume(gauss_u(0.8), self.flow, small)
        with pytest.raises(ValueError):
            transfer_apply(spec, vol)

    def test_l2_contraction(self):
        # unimodular map, so the continuum bound is sup|g| times the norm
        spec = TransferSpec(ContactMap.linear(np.diag([2.0, 0.5])),
                            gauss_amp(0.6, amp=0.7))
        u = gauss_u(0.6)
        vol = sample_volume(u, self.flow, self.trans)
        out = transfer_apply(spec, u, self.flow, self.trans)
        assert out.norm() <= 0.7 * vol.norm() * 1.01

    def test_support_check(self):
        wide = TransferSpec(ContactMap.linear(np.eye(2)), ones_amp)
        with pytest.raises(ValueError):
            wide.support_check(self.flow, self.trans)
        narrow = TransferSpec(ContactMap.linear(np.eye(2)), gauss_amp(0.5))
        narrow.support_check(self.flow, self.trans)


class TestFlowFourier:

    def test_single_mode(self):
        flow = FlowGrid(np.pi, 6)
        trans = make_grid(2, 1.2, 4)

        def g(pts):
            return np.exp(1j * pts[:, 0])
        spec = TransferSpec(ContactMap.linear(np.eye(2)), g)
        ghat = flow_fourier_coeffs(spec.g_values(flow, trans), flow)
        # the m = +1 offset carries mass 2 L0 / sqrt(2 pi); on the periodic
        # grid the same mode reappears at the offset m = 1 - n0
        n0 = flow.n_points
        full = 2.0 * np.pi / np.sqrt(2.0 * np.pi)
        for m in range(-(n0 - 1), n0):
            row = np.max(np.abs(ghat[m + n0 - 1]))
            if m in (1, 1 - n0):
                assert row == pytest.approx(full, rel=1e-12)
            else:
                assert row <= 1e-12


def small_setting():
    flow = FlowGrid(np.pi, 2)
    trans = make_grid(2, 1.2, 4)
    pg = dual_phase_grid(trans, n_freq=4)
    return flow, trans, pg


def shear_spec():
    def g(pts):
        r2 = np.sum(pts[:, 1:] ** 2, axis=-1)
        return np.exp(1j * pts[:, 0]) * np.exp(-r2 / 0.5)
    return TransferSpec(ContactMap.shear(2.0, 0.3), g, name="shear-bump")


class TestLiftKernel:

    def test_zero_amplitude_zero_matrix(self):
        flow, trans, pg = small_setting()
        spec = TransferSpec(ContactMap.shear(2.0, 0.3), zero_amp)
        mat = lift_kernel(spec, flow, trans, pg)
        assert np.max(np.abs(mat.values)) == 0.0

    def test_two_kernel_forms_agree(self):
        # factored flow-summed assembly vs direct volume quadrature
        flow, trans, pg = small_setting()
        spec = shear_spec()
        mat = lift_kernel(spec, flow, trans, pg)
        rng = np.random.default_rng(3)
        scale = np.max(np.abs(mat.values))
        for _ in range(10):
            row = int(rng.integers(mat.values.shape[0]))
            col = int(rng.integers(mat.values.shape[1]))
            direct = kernel_entry_direct(spec, flow, trans,
                                         phase_index(flow, pg, row),
                                         phase_index(flow, pg, col))
            assert abs(mat.values[row, col] - direct) <= 1e-10 * scale

    def test_identity_lift_is_projection(self):
        flow, trans, pg = small_setting()
        spec = TransferSpec(ContactMap.linear(np.eye(2)), ones_amp)
        mat = lift_kernel(spec, flow, trans, pg)
        rng = np.random.default_rng(5)
        shape = (flow.n_points,) + pg.shape()
        pf = PartialPhaseField(flow, pg, rng.standard_normal(shape)
                               + 1j * rng.standard_normal(shape))
        lifted = mat.apply(pf)
        proj = pcal_apply(pf, trans=trans)
        err = np.linalg.norm((lifted.values - proj.values).ravel())
        ref = np.linalg.norm(proj.values.ravel())
        assert err / ref <= 1e-10

    def test_matrix_free_matches_dense(self):
        flow, trans, pg = small_setting()
        spec = shear_spec()
        mat = lift_kernel(spec, flow, trans, pg)
        rng = np.random.default_rng(6)
        shape = (flow.n_points,) + pg.shape()
        pf = PartialPhaseField(flow, pg, rng.standard_normal(shape)
                               + 1j * rng.standard_normal(shape))
        dense = mat.apply(pf)
        free = lift_apply(spec, flow, trans, pg, pf)
        err = np.linalg.norm((dense.values - free.values).ravel())
        ref = np.linalg.norm(dense.values.ravel())
        assert err / ref <= 1e-10

    def test_memory_guard(self):
        flow, trans, pg = small_setting()
        with pytest.raises(ValueError):
            lift_kernel(shear_spec(), flow, trans, pg, max_entries=1000)

    def test_singular_decay_of_smooth_kernel(self):
        flow, trans, pg = small_setting()
        mat = lift_kernel(shear_spec(), flow, trans, pg)
        sig = mat.singular_values()
        assert sig[49] <= 1e-3 * sig[0]


class TestDiagram:
    """matrix (T u) against T (L u) on a well-resolved grid."""

    def test_commutation(self):
        flow = FlowGrid(np.pi, 4)
        trans = make_grid(2, 3.84, 16)
        pg = dual_phase_grid(trans, n_freq=16, center_margin=3.0)

        def g(pts):
            r2 = np.sum(pts[:, 1:] ** 2, axis=-1)
            return (0.6 + 0.4 * np.cos(pts[:, 0])) * np.exp(-r2 / 0.5)
        spec = TransferSpec(ContactMap.shear(2.0, 0.2), g)
        u = gauss_u(0.8)
        vol = sample_volume(u, flow, trans)
        tu = pfbi_forward(vol, pg=pg)
        lhs = lift_apply(spec, flow, trans, pg, tu)
        lu = transfer_apply(spec, u, flow, trans)
        rhs = pfbi_forward(lu, pg=pg)
        err = np.linalg.norm((lhs.values - rhs.values).ravel())
        ref = np.linalg.norm(rhs.values.ravel())
        assert err / ref <= 1e-4


class TestDecompose:

    def test_parts_sum_to_whole(self):
        flow, trans, pg = small_setting()
        mat = lift_kernel(shear_spec(), flow, trans, pg)
        wspec = WeightSpec(big_n=2.0)
        cpt, ctr, hyp = decompose(mat, wspec)
        total = cpt.values + ctr.values + hyp.values
        assert np.max(np.abs(total - mat.values)) <= 1e-12 * \
            np.max(np.abs(mat.values))

    def test_diagonals_partition_unity(self):
        flow, trans, pg = small_setting()
        x0, ctr, hyp = cutoff_diagonals(flow, pg, WeightSpec(big_n=2.0))
        assert np.max(np.abs(x0 + ctr + hyp - 1.0)) <= 1e-12
        assert np.min(x0) >= 0.0 and np.min(ctr) >= 0.0 and np.min(hyp) >= 0.0

    def test_large_cutoff_all_compact(self):
        # grid frequencies far below N: everything lands in the compact part
        flow, trans, pg = small_setting()
        mat = lift_kernel(shear_spec(), flow, trans, pg)
        cpt, ctr, hyp = decompose(mat, WeightSpec(big_n=32.0))
        assert np.max(np.abs(ctr.values)) == 0.0
        assert np.max(np.abs(hyp.values)) == 0.0
        assert np.max(np.abs(cpt.values - mat.values)) == 0.0


class TestKernelBoundAudit:

    def setup_method(self):
        self.flow = FlowGrid(np.pi, 6)
        self.trans = make_grid(2, 1.6, 8)
        self.pg = dual_phase_grid(self.trans, n_freq=8)

        def g(pts):
            r2 = np.sum(pts[:, 1:] ** 2, axis=-1)
            return np.exp(0.3 * np.cos(pts[:, 0])) * np.exp(-r2 / 0.32)
        self.spec = TransferSpec(ContactMap.shear(2.0, 0.3), g)

    def test_bound_holds_with_fitted_constant(self):
        res = kernel_bound_audit(self.spec, self.flow, self.trans, self.pg,
                                 rho=2.0, n_per_stratum=3, rng_seed=1)
        assert res["c_rho"] > 0.0
        assert np.all(res["ratios"] <= res["c_rho"] + 1e-15)
        assert len(res["entries"]) == len(res["ratios"])

    def test_mismatch_decay(self):
        # a matched diagonal entry vs one with maximal flow mismatch
        mid = self.pg.num_points // 2
        matched_out = phase_index(self.flow, self.pg,
                                  3 * self.pg.num_points + mid)
        far_in = phase_index(self.flow, self.pg, 0 * self.pg.num_points + mid)
        k_diag = kernel_entry_direct(self.spec, self.flow, self.trans,
                                     matched_out, matched_out)
        k_far = kernel_entry_direct(self.spec, self.flow, self.trans,
                                    matched_out, far_in)
        assert abs(k_far) <= 0.1 * abs(k_diag)

    def test_zero_amplitude(self):
        spec = TransferSpec(ContactMap.shear(2.0, 0.3), zero_amp)
        res = kernel_bound_audit(spec, self.flow, self.trans, self.pg,
                                 rho=2.0, n_per_stratum=2, rng_seed=2)
        assert np.max(res["ratios"]) == 0.0


class TestLambdaDelta:

    def setup_method(self):
        self.flow = FlowGrid(np.pi, 4)
        self.trans = make_grid(2, 2.0, 8)

    def test_linear_anchor(self):
        spec = TransferSpec(ContactMap.linear(np.diag([4.0, 0.25])), ones_amp)
        lam_fg, delta_fg, bound = lambda_delta(spec, self.flow, self.trans,
                                               lam=4.0, r=4.0)
        assert lam_fg == pytest.approx(0.5)
        assert delta_fg == pytest.approx(2.0)
        assert bound == pytest.approx(0.5)

    def test_amplitude_scaling(self):
        cmap = ContactMap.linear(np.diag([4.0, 0.25]))
        a = lambda_delta(TransferSpec(cmap, gauss_amp(0.5)),
                         self.flow, self.trans, lam=4.0, r=4.0)
        b = lambda_delta(TransferSpec(cmap, gauss_amp(0.5, amp=3.0)),
                         self.flow, self.trans, lam=4.0, r=4.0)
        assert b[0] == pytest.approx(3.0 * a[0])
        assert b[1] == pytest.approx(a[1])
        assert b[2] == pytest.approx(3.0 * a[2])

    def test_zero_amplitude(self):
        spec = TransferSpec(ContactMap.linear(np.diag([4.0, 0.25])), zero_amp)
        assert lambda_delta(spec, self.flow, self.trans, 4.0, 4.0) == \
            (0.0, 0.0, 0.0)

    def test_global_anchor(self):
        assert lambda_global(1.0, np.e) == pytest.approx(np.exp(-0.5))


class TestOperatorMatrixIO:

    def test_save_load_roundtrip(self, tmp_path):
        flow, trans, pg = small_setting()
        mat = lift_kernel(shear_spec(), flow, trans, pg)
        base = tmp_path / "lift"
        mat.save(base)
        back = OperatorMatrix.load(base)
        assert np.array_equal(back.values, mat.values)
        rng = np.random.default_rng(9)
        shape = (flow.n_points,) + pg.shape()
        pf = PartialPhaseField(flow, pg, rng.standard_normal(shape) + 0j)
        assert np.allclose(back.apply(pf).values, mat.apply(pf).values)
        assert back.fingerprint() == mat.fingerprint()

    def test_singular_value_export(self, tmp_path):
        flow, trans, pg = small_setting()
        mat = lift_kernel(shear_spec(), flow, trans, pg)
        path = tmp_path / "sv.csv"
        sig = mat.export_singular_values(path)
        lines = path.read_text().strip().splitlines()
        assert lines[1] == "index,sigma"
        assert len(lines) == 2 + len(sig)
        assert float(lines[2].split(",")[1]) == pytest.approx(sig[0])

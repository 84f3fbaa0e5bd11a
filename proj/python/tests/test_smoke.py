import math

import pytest

import mvtraffic as mvt


def test_view_stats():
    t = mvt.trace_from_sizes([[1000, 2000, 3000]], representation="FS")
    s = mvt.view_stats(t, 1)
    assert s.mean_frame_size == pytest.approx(2000.0, rel=1e-12)
    assert s.cov == pytest.approx(0.5, rel=1e-12)
    assert s.mean_bitrate == pytest.approx(384000.0, rel=1e-12)


def test_multiview_statistics():
    t = mvt.trace_from_sizes([[4, 2], [2, 0]])
    assert mvt.sequential_variability(t).variance == pytest.approx(8.0)
    assert mvt.sequential_variability(t, "standard").variance == pytest.approx(8.0 / 3.0)
    assert mvt.combined_variability(t).cov == pytest.approx(math.sqrt(8.0) / 4.0)
    assert mvt.sequential_merge(t) == [4, 2, 2, 0]
    assert mvt.combine(t) == [6, 2]
    assert mvt.demand(t) == [48, 16]
    assert mvt.merged_mean(mvt.trace_from_sizes([[1000, 3000], [500, 1500]])) == pytest.approx((1500.0, 576000.0))


def test_gop_smooth():
    assert mvt.gop_smooth([0, 0, 10, 5, 0], 3) == [4, 3, 3, 3, 2]
    assert mvt.gop_smooth([10, 0, 4, 2], 2, offset=1) == [6, 2, 2, 6]
    with pytest.raises(mvt.PreconditionError):
        mvt.gop_smooth([1, 2], 3)


def test_mux():
    assert mvt.simulate_replication([1000, 3000], 2, 4000, [1, 1]) == (2000, 8000, 0.25)
    assert mvt.exact_loss_oracle([1000, 3000], 2, 4000) == 0.125
    est = mvt.estimate_loss([1000, 3000], 2, 4000, seed=3, target=0.02)
    assert abs(est.p_hat - 0.125) <= 3 * est.ci_half_width
    assert mvt.estimate_loss([1000, 3000], 2, 4000, seed=3, target=0.02, threads=4).p_hat == est.p_hat


def test_search():
    assert mvt.find_cmin([6000] * 12, 24.0, 3) == pytest.approx(432000.0, rel=1e-3)
    assert mvt.find_jmax([6000] * 12, 24.0, 1e6) == 6


def test_trace_round_trip_and_errors():
    t = mvt.synthesize_trace(frames=48, psnr_db=38.0, seed=4)
    assert mvt.parse_trace(mvt.serialize_trace(t)) == t
    assert t.frame_types(1).startswith("IBPB")
    assert mvt.validate(t) == []
    assert mvt.average_psnr(t) == pytest.approx(38.0, abs=0.5)
    with pytest.raises(mvt.ParseError):
        mvt.parse_trace("#!video=x\n1,1,I,10\n")

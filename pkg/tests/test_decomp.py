import pytest

from perfmodel import (
    BatchCurve, batch_curve, batch_throughput, chunk_profile, fit_chunk_model, format_profile,
    model_throughput, parse_measurements, pipeline_depth, recommend_config, saturation_point,
    sensitivity,
)
from perfmodel.decomp import DEFAULT_CONCURRENCIES, with_fitted_profile
from utils.errors import (
    IllConditioned, MissingCalibration, NoPoint, ParseError, PreconditionError, UnknownChunk,
    UnknownFormat,
)

KIB = 1024


def test_batching_law_regions(b200):
    profile = chunk_profile(b200, 32 * KIB)
    assert model_throughput(profile, 1) == pytest.approx(0.75)
    assert model_throughput(profile, 16) == pytest.approx(12.0)
    assert 12.0 < model_throughput(profile, 64) < 53.8
    assert model_throughput(profile, 1024) == pytest.approx(53.8)
    assert model_throughput(profile, 4096) == pytest.approx(53.8)
    with pytest.raises(PreconditionError):
        model_throughput(profile, 0)


@pytest.mark.parametrize('chunk_kib,depth,saturation', [
    (32, 16, 1024),
    (64, 1, 1024),
    (128, 8, 256),
    (256, 4, 1024),
])
def test_curve_recovers_depth_and_saturation(b200, chunk_kib, depth, saturation):
    curve = batch_curve(b200, chunk_kib * KIB)
    assert len(curve) == len(DEFAULT_CONCURRENCIES)
    assert pipeline_depth(curve) == depth
    sat = saturation_point(curve)
    assert sat.saturated
    assert sat.concurrency == saturation


def test_max_speedup(b200):
    pred = batch_throughput(b200, 32 * KIB, 1024)
    assert pred.value == pytest.approx(53.8)
    assert pred.extras['speedup_vs_sequential'] == pytest.approx(71.95, rel=0.005)
    assert pred.bottleneck == 'input_bw'


def test_unsaturated_curve():
    curve = BatchCurve.from_measurements([(1, 1.0), (2, 2.0), (4, 4.0)])
    assert saturation_point(curve).saturated is False
    assert pipeline_depth(curve) == 4


def test_depth_is_largest_passing_concurrency():
    curve = BatchCurve.from_measurements([(1, 1.0), (2, 1.2), (4, 3.6), (8, 4.0)])
    assert pipeline_depth(curve) == 4


def test_depth_needs_a_point():
    curve = BatchCurve.from_measurements([(1, 1.0), (2, 1.0)])
    with pytest.raises(NoPoint):
        pipeline_depth(curve, threshold=1.5)


def test_curve_must_increase():
    with pytest.raises(PreconditionError):
        BatchCurve.from_measurements([(2, 1.0), (4, 2.0)])


def test_lookups(b200, h200):
    assert format_profile(b200, 'ZSTD').compression_ratio == 2.0
    with pytest.raises(UnknownFormat):
        format_profile(b200, 'brotli')
    with pytest.raises(UnknownChunk):
        chunk_profile(b200, 4 * KIB)
    with pytest.raises(MissingCalibration, match='software decompression'):
        chunk_profile(h200, 32 * KIB)


def test_unpublished_format_fields(b200):
    cascaded = format_profile(b200, 'cascaded')
    assert cascaded.input_gbps is None
    with pytest.raises(MissingCalibration):
        cascaded.require_ratio()


@pytest.mark.parametrize('ratio,output,latency', [
    (1.00, 172.55, 0.608),
    (15.02, 219.80, 0.477),
    (245.45, 209.83, 0.500),
])
def test_sensitivity_latency(b200, ratio, output, latency):
    pred = sensitivity(b200, ratio, output)
    assert pred.value == pytest.approx(output / ratio)
    assert pred.extras['latency_ms_per_100MB'] == pytest.approx(latency, rel=0.03)


def test_sensitivity_rejects_expansion(b200):
    with pytest.raises(PreconditionError):
        sensitivity(b200, 0.5, 100.0)


CHUNKS_KIB = (32, 64, 128, 256)


def _profile_fields(profile):
    return (profile.single_rate_gbps, profile.pipeline_depth, profile.peak_gbps,
            profile.saturation_batch)


@pytest.mark.parametrize('chunk_kib', CHUNKS_KIB)
def test_fit_recovers_profile(b200, chunk_kib):
    truth = chunk_profile(b200, chunk_kib * KIB)
    points = [(b, model_throughput(truth, b)) for b in DEFAULT_CONCURRENCIES]
    fit = fit_chunk_model(points, chunk_bytes=chunk_kib * KIB)
    assert _profile_fields(fit.profile) == pytest.approx(_profile_fields(truth), rel=0.01)
    assert fit.profile.chunk_bytes == chunk_kib * KIB
    assert fit.residual_rms < 1e-3
    assert fit.points == 12


@pytest.mark.parametrize('chunk_kib', CHUNKS_KIB)
def test_fit_with_noise(b200, rng, chunk_kib):
    truth = chunk_profile(b200, chunk_kib * KIB)
    points = [(b, model_throughput(truth, b) * (1 + 0.02 * rng.standard_normal()))
              for b in DEFAULT_CONCURRENCIES]
    fit = fit_chunk_model(points)
    assert _profile_fields(fit.profile) == pytest.approx(_profile_fields(truth), rel=0.05)
    assert fit.residual_rms < 0.05


def test_fit_is_ill_conditioned():
    with pytest.raises(IllConditioned):
        fit_chunk_model([(1, 1.0), (2, 2.0), (4, 3.0)])
    with pytest.raises(IllConditioned):
        fit_chunk_model([(2, 1.0), (4, 2.0), (8, 3.0), (16, 3.1)])
    with pytest.raises(IllConditioned):
        fit_chunk_model([(1, 1.0), (1, 1.1), (2, 2.0), (2, 2.1)])


def test_fitted_profile_replaces_calibration(b200):
    truth = chunk_profile(b200, 256 * KIB)
    points = [(b, model_throughput(truth, b) * 2) for b in DEFAULT_CONCURRENCIES]
    patched = with_fitted_profile(b200, fit_chunk_model(points, chunk_bytes=256 * KIB))
    assert chunk_profile(patched, 256 * KIB).peak_gbps == pytest.approx(303.2, rel=1e-3)
    assert chunk_profile(b200, 256 * KIB).peak_gbps == 151.6


def test_parse_measurements():
    assert parse_measurements('concurrency,gbps\n1,3.2\n\n2,6.4\n') == [(1, 3.2), (2, 6.4)]
    with pytest.raises(ParseError) as exc:
        parse_measurements('b,t\n1,2\n')
    assert exc.value.line == 1
    with pytest.raises(ParseError) as exc:
        parse_measurements('concurrency,gbps\n1,3.2\nx,1\n', source='m.csv')
    assert exc.value.line == 3
    with pytest.raises(ParseError):
        parse_measurements('concurrency,gbps\n0.5,1\n')


def test_recommend_small_objects(b200):
    rec = recommend_config(b200, 48 * KIB, 1.0, 'numeric')
    assert rec.format == 'bitcomp'
    assert rec.chunk_bytes == 32 * KIB
    assert rec.concurrency == 16
    assert rec.within_budget
    assert rec.batch_latency_ms == pytest.approx(16 * 32 * KIB / 12e9 * 1e3)


def test_recommend_large_objects(b200):
    rec = recommend_config(b200, 4 * KIB * KIB, 1.0, 'realtime')
    assert rec.format == 'snappy'
    assert rec.chunk_bytes == 256 * KIB
    assert rec.concurrency == 4
    assert rec.ceiling_gbps == 151.6


def test_recommend_tight_budget(b200):
    rec = recommend_config(b200, 48 * KIB, 0.01)
    assert rec.format == 'zstd'
    assert rec.concurrency == 1
    assert not rec.within_budget

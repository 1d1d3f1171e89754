import numpy as np
import pytest

from gaincast.predictor import (BASELINE_PARAM_COUNT, PredictorConfig,
                                PredictorModel, REFERENCE_COMPLEXITY_TABLE,
                                SEPlacement, complexity_audit, param_count,
                                param_reduction)


def test_baseline_param_count():
    assert BASELINE_PARAM_COUNT == 548872
    cfg = PredictorConfig(256, 256, SEPlacement.NONE)
    assert param_count(cfg) == 548872
    assert param_reduction(cfg) == 0.0


@pytest.mark.parametrize("f,b", sorted(REFERENCE_COMPLEXITY_TABLE))
@pytest.mark.parametrize("placement", ["before", "pre-fc", "after-fc"])
def test_closed_form_matches_instantiated_model(f, b, placement):
    cfg = PredictorConfig(f, b, SEPlacement.parse(placement))
    model = PredictorModel(cfg, seed=0)
    assert model.param_count() == param_count(cfg)


def test_reference_table_audit_passes():
    report = complexity_audit()
    assert len(report.cells) == 19 * 3 == 57
    assert report.passed
    assert report.mismatches == []


def test_spot_check_published_cells():
    assert param_count(PredictorConfig(64, 128, SEPlacement.BEFORE)) == 91169
    assert param_count(PredictorConfig(32, 32, SEPlacement.PRE_FC)) == 12368
    assert param_count(PredictorConfig(96, 128, SEPlacement.PRE_FC)) == 125956
    assert param_count(PredictorConfig(192, 192, SEPlacement.PRE_FC)) == 350648
    assert param_reduction(PredictorConfig(64, 128, SEPlacement.BEFORE)) == \
        pytest.approx(83.39, abs=0.01)


def test_input_and_output_placements_coincide():
    # 8 inputs and 8 outputs give the SE gate identical sizes on both ends
    for (f, b) in REFERENCE_COMPLEXITY_TABLE:
        assert (param_count(PredictorConfig(f, b, SEPlacement.BEFORE))
                == param_count(PredictorConfig(f, b, SEPlacement.AFTER_FC)))


def test_pre_fc_strictly_larger_when_hidden_exceeds_io():
    for (f, b) in REFERENCE_COMPLEXITY_TABLE:
        if f + b > 8:
            assert (param_count(PredictorConfig(f, b, SEPlacement.PRE_FC))
                    > param_count(PredictorConfig(f, b, SEPlacement.BEFORE)))


def test_swapping_directions_preserves_count():
    a = param_count(PredictorConfig(64, 128, SEPlacement.BEFORE))
    b = param_count(PredictorConfig(128, 64, SEPlacement.BEFORE))
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        PredictorConfig(0, 8)
    with pytest.raises(ValueError, match="placement"):
        SEPlacement.parse("middle")
    assert SEPlacement.parse("Pre-FC") is SEPlacement.PRE_FC


@pytest.mark.parametrize("placement", list(SEPlacement))
def test_predict_shapes(placement):
    model = PredictorModel(PredictorConfig(12, 20, placement), seed=0)
    x = np.random.default_rng(0).standard_normal((5, 19, 8)).astype(np.float32)
    y = model.predict(x)
    assert y.shape == (5, 8)
    assert np.all(np.isfinite(y.data))


def test_predict_rejects_wrong_width():
    model = PredictorModel(PredictorConfig(4, 4), seed=0)
    with pytest.raises(Exception, match=r"\[B,W,8\]"):
        model.predict(np.zeros((2, 19, 7), np.float32))


@pytest.mark.parametrize("placement", list(SEPlacement))
def test_fast_path_matches_taped_path(placement):
    model = PredictorModel(PredictorConfig(10, 14, placement), seed=3)
    x = np.random.default_rng(1).standard_normal((6, 19, 8)).astype(np.float32)
    np.testing.assert_allclose(model.predict_fast(x), model.predict(x).data,
                               rtol=1e-5, atol=1e-6)


def test_batch_order_invariance():
    model = PredictorModel(PredictorConfig(8, 8), seed=0)
    x = np.random.default_rng(2).standard_normal((7, 19, 8)).astype(np.float32)
    full = model.predict_fast(x)
    perm = np.array([3, 0, 6, 1, 5, 2, 4])
    np.testing.assert_allclose(model.predict_fast(x[perm]), full[perm],
                               rtol=1e-5, atol=1e-6)


def test_direction_asymmetry_matters():
    # reversing the input changes the output when f != b
    model = PredictorModel(PredictorConfig(4, 24, SEPlacement.NONE), seed=5)
    x = np.random.default_rng(3).standard_normal((2, 19, 8)).astype(np.float32)
    y = model.predict_fast(x)
    y_rev = model.predict_fast(x[:, ::-1, :].copy())
    assert not np.allclose(y, y_rev, atol=1e-4)


def test_none_placement_has_no_se_block():
    model = PredictorModel(PredictorConfig(8, 8, SEPlacement.NONE), seed=0)
    assert model.se is None
    assert not any(k.startswith("pred.se") for k in model.params())


def test_state_round_trip():
    a = PredictorModel(PredictorConfig(6, 10), seed=0)
    b = PredictorModel(PredictorConfig(6, 10), seed=99)
    b.load_state(a.state())
    x = np.random.default_rng(4).standard_normal((3, 19, 8)).astype(np.float32)
    np.testing.assert_array_equal(a.predict_fast(x), b.predict_fast(x))

import numpy as np
import pytest

from bwlab import (LoadingHistory, envelope_history, module_history,
                   optimal_history, reference_history, table_history)
from bwlab.loading import (REFERENCE_AMPLITUDES, REFERENCE_STEPS,
                           TABLE_HISTORIES)

# independent copy of the 18-row catalog: amplitude sequence and the
# cumulative displacement it must sum to, both in u_y units
CATALOG = {
    1: ((0.5,) * 8, 4.0),
    2: ((1.0,) * 4, 4.0),
    3: ((2.0,), 2.0),
    4: ((3.0,), 3.0),
    5: ((4.0,), 4.0),
    6: ((5.0,), 5.0),
    7: ((6.0,), 6.0),
    8: ((2.0, 2.0), 4.0),
    9: ((2.0,) * 4, 8.0),
    10: ((2.0,) * 8, 16.0),
    11: ((2.0, 3.0), 5.0),
    12: ((2.0, 3.0, 4.0), 9.0),
    13: ((2.0, 3.0, 4.0, 5.0), 14.0),
    14: ((2.0, 3.0, 4.0, 5.0, 6.0), 20.0),
    15: ((2.0, 2.0, 3.0, 3.0, 4.0, 4.0), 18.0),
    16: ((2.0, 2.0, 2.0, 4.0, 4.0, 4.0), 18.0),
    17: ((2.0, 2.0, 2.0, 3.0, 4.0, 5.0), 18.0),
    18: ((2.0, 2.0, 2.0, 2.0, 5.0, 5.0), 18.0),
}


def test_catalog_matches_expected_rows():
    assert sorted(TABLE_HISTORIES) == list(range(1, 19))
    for idx, (amps, cum) in CATALOG.items():
        lh = table_history(idx, u_y=0.01)
        assert lh.amplitudes == amps
        assert lh.cumulative_amplitude == cum
        assert lh.label == f"LH{idx}"


def test_catalog_index_validation():
    with pytest.raises(ValueError, match="1..18"):
        table_history(0, u_y=0.01)
    with pytest.raises(ValueError, match="1..18"):
        table_history(19, u_y=0.01)


def test_cycle_shape_and_step_size():
    lh = table_history(3, u_y=0.01)
    pts = lh.discretize_normalized()
    # 0 -> +2 -> -2 -> 0 at 0.1 u_y per step: 20 + 40 + 20 = 80 steps
    assert lh.n_steps == 80
    assert pts[0] == 0.0 and pts[-1] == 0.0
    assert pts.max() == pytest.approx(2.0)
    assert pts.min() == pytest.approx(-2.0)
    steps = np.diff(pts)
    assert np.allclose(np.abs(steps), 0.1)
    assert np.argmax(pts) == 20
    assert np.argmin(pts) == 60


def test_discretize_scales_by_u_y():
    lh = table_history(15, u_y=0.025)
    assert lh.n_steps == 720
    assert np.allclose(lh.discretize(), 0.025 * lh.discretize_normalized())
    assert lh.path_length == pytest.approx(72.0)


def test_landing_step_on_non_divisible_amplitude():
    lh = LoadingHistory(amplitudes=(0.25,), u_y=0.01)
    pts = lh.discretize_normalized()
    # 2 full steps and a shortened landing step per 0.25-long leg
    assert pts.max() == 0.25
    assert pts.min() == -0.25
    assert pts[-1] == 0.0
    legs = np.abs(np.diff(pts))
    assert legs.max() == pytest.approx(0.1)
    assert legs.min() == pytest.approx(0.05)


def test_landing_tolerance_absorbs_fp_noise():
    # 0.7 / 0.1 is not an exact float multiple; no sliver step may appear
    lh = LoadingHistory(amplitudes=(0.7,), u_y=0.01)
    pts = lh.discretize_normalized()
    assert lh.n_steps == 28
    assert np.abs(np.diff(pts)).min() > 0.0999


def test_history_validation():
    with pytest.raises(ValueError):
        LoadingHistory(amplitudes=(), u_y=0.01)
    with pytest.raises(ValueError):
        LoadingHistory(amplitudes=(-1.0,), u_y=0.01)
    with pytest.raises(ValueError):
        LoadingHistory(amplitudes=(2.0,), u_y=0.0)
    with pytest.raises(ValueError):
        LoadingHistory(amplitudes=(2.0,), u_y=0.01, step_size=0.0)


def test_module_histories():
    bsc = module_history("BSC", u_y=0.01)
    assert bsc.amplitudes == (3.0, 3.0)
    dgd = module_history("DGD", u_y=0.01)
    assert dgd.amplitudes == (2.0, 2.0, 3.0, 3.0)
    assert dgd.cumulative_amplitude == 10.0
    pch = module_history("PCH", u_y=0.01)
    assert pch.amplitudes == TABLE_HISTORIES[15]
    assert pch.cumulative_amplitude == 18.0
    with pytest.raises(ValueError):
        module_history("XYZ", u_y=0.01)


def test_optimal_histories_per_variant():
    assert optimal_history("BW", u_y=0.01).amplitudes == (2.0, 2.0, 3.0, 3.0)
    assert optimal_history("BWdeg", u_y=0.01).amplitudes == (2.0, 2.0, 3.0, 3.0)
    for v in ("BWBN", "mBWBN"):
        assert optimal_history(v, u_y=0.01).amplitudes == TABLE_HISTORIES[15]
    # the degrading history is a prefix of the full one
    full = optimal_history("mBWBN", u_y=0.01).amplitudes
    assert full[:4] == optimal_history("BWdeg", u_y=0.01).amplitudes


def test_reference_history_step_budget():
    lh = reference_history(u_y=0.02)
    assert lh.amplitudes == REFERENCE_AMPLITUDES
    assert lh.n_steps == REFERENCE_STEPS == 430
    assert lh.path_length == pytest.approx(4.0 * sum(REFERENCE_AMPLITUDES))
    # strict mode rejects amplitude lists with a different step budget
    with pytest.raises(ValueError, match="430"):
        reference_history(u_y=0.02, amplitudes=(1.0, 2.0))
    relaxed = reference_history(u_y=0.02, amplitudes=(1.0, 2.0), strict=False)
    assert relaxed.n_steps == 120


def test_envelope_history_shape():
    lh = envelope_history(peak=4.0, n_cycles=8, u_y=0.01)
    amps = np.array(lh.amplitudes)
    assert len(amps) == 8
    assert amps.max() == 4.0  # plateau hits the peak exactly
    assert np.all(amps > 0.0)
    assert amps[0] < 4.0  # rising branch
    assert amps[-1] < 4.0  # decaying branch
    assert lh.cumulative_amplitude > 4.0
    assert lh.label == "ENV-4x8"


def test_serialization_round_trips(tmp_path):
    lh = optimal_history("BW", u_y=0.0137)
    d = lh.to_dict()
    assert LoadingHistory.from_dict(d) == lh
    with pytest.raises(ValueError, match="unknown"):
        LoadingHistory.from_dict({**d, "extra": 1})
    with pytest.raises(ValueError, match="missing"):
        LoadingHistory.from_dict({"label": "x"})
    path = tmp_path / "history.json"
    lh.save(path)
    assert LoadingHistory.load(path) == lh


def test_series_csv(tmp_path):
    lh = table_history(3, u_y=0.01)
    path = tmp_path / "series.csv"
    lh.write_series_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,u_m"
    assert len(lines) == lh.n_steps + 2  # header + rest point + steps
    assert lines[1] == "0,0"

import numpy as np
import pandas as pd
import pytest

from density_ratio_test.components.edrt import TestReport
from density_ratio_test.constants import results
from density_ratio_test.exceptions import InsufficientDataError
from density_ratio_test.results_processing.process_results import (detection_slope, emit_report, format_report,
                                                                   make_power_curve, make_signal_curve,
                                                                   read_report, report_table, sidecar_path,
                                                                   slope_table)


def _raw_row(n_train, theta, rep, test, reject, failed=False, sigma2=1.0, K=4):
    return {
        results.N_TRAIN_COLUMN: n_train,
        results.THETA_COLUMN: theta,
        results.REP_COLUMN: rep,
        results.TEST_COLUMN: test,
        results.REJECT_COLUMN: None if failed else reject,
        results.STATISTIC_COLUMN: np.nan if failed else 0.5,
        results.THRESHOLD_COLUMN: np.nan if failed else 0.4,
        results.SIGMA2_HAT_COLUMN: np.nan if failed else sigma2,
        results.K_STAR_COLUMN: np.nan if failed else K,
        results.FAILED_COLUMN: failed,
        results.ERROR_COLUMN: 'InsufficientDataError: too few' if failed else '',
    }


@pytest.fixture
def raw():
    rows = [
        _raw_row(1000, 0.1, 0, 'edrt', True, sigma2=2.0, K=2),
        _raw_row(1000, 0.1, 1, 'edrt', False, sigma2=4.0, K=4),
        _raw_row(1000, 0.1, 2, 'edrt', None, failed=True),
        _raw_row(1000, 0.1, 0, 'mmd', True),
        _raw_row(1000, 0.1, 1, 'mmd', True),
        _raw_row(1000, 0.1, 2, 'mmd', False),
    ]
    return pd.DataFrame(rows, columns=results.RAW_COLUMNS)


def test_make_power_curve(raw):
    curve = make_power_curve(raw)
    assert list(curve.columns) == results.POWER_CURVE_COLUMNS
    assert list(curve[results.TEST_COLUMN]) == ['edrt', 'mmd']
    edrt, mmd = curve.iloc[0], curve.iloc[1]
    assert edrt[results.REJECT_RATE_COLUMN] == pytest.approx(0.5)
    assert edrt[results.REPS_COLUMN] == 3
    assert edrt[results.FAILURES_COLUMN] == 1
    assert edrt[results.FAILED_COLUMN]
    assert edrt[results.MEAN_SIGMA2_HAT_COLUMN] == pytest.approx(3.0)
    assert edrt[results.MEAN_K_STAR_COLUMN] == pytest.approx(3.0)
    assert mmd[results.REJECT_RATE_COLUMN] == pytest.approx(2 / 3)
    assert not mmd[results.FAILED_COLUMN]


def test_make_power_curve_extra_keys(raw):
    raw.insert(0, results.WEIGHT_COLUMN, 0.7)
    raw.insert(0, results.DIRECTION_COLUMN, 'train_shift')
    curve = make_power_curve(raw, by=results.ROBUSTNESS_KEYS)
    assert list(curve.columns) == results.ROBUSTNESS_COLUMNS
    assert len(curve) == 2


def test_empty_curve_writes_header_only():
    curve = make_power_curve(pd.DataFrame(columns=results.RAW_COLUMNS))
    assert format_report(curve) == ','.join(results.POWER_CURVE_COLUMNS) + '\n'


def test_make_signal_curve():
    rows = [
        {results.N_TRAIN_COLUMN: 1000, results.REP_COLUMN: rep, results.CRITERION_COLUMN: criterion,
         results.SIGMA2_HAT_COLUMN: value, results.K_STAR_COLUMN: K, results.FAILED_COLUMN: False,
         results.ERROR_COLUMN: ''}
        for rep, (value, K) in enumerate([(1.0, 2), (3.0, 4), (2.0, 8)])
        for criterion in ('density_ratio', 'gini')
    ]
    curve = make_signal_curve(pd.DataFrame(rows, columns=results.SIGNAL_RAW_COLUMNS))
    assert list(curve.columns) == results.SIGNAL_CURVE_COLUMNS
    assert list(curve[results.MEDIAN_SIGMA2_HAT_COLUMN]) == [2.0, 2.0]
    assert list(curve[results.MEDIAN_K_STAR_COLUMN]) == [4.0, 4.0]


def _curve(exponent, test='edrt'):
    n_train = np.array([1_000, 10_000, 100_000], dtype=float)
    return pd.DataFrame({
        results.N_TRAIN_COLUMN: n_train.astype(int),
        results.THETA_COLUMN: 3.0 * n_train ** -exponent,
        results.TEST_COLUMN: test,
        results.REJECT_RATE_COLUMN: 0.5,
    })


@pytest.mark.parametrize('exponent', [1.0, 0.5])
def test_detection_slope(exponent):
    fit = detection_slope(_curve(exponent))
    assert fit.slope == pytest.approx(exponent)
    assert fit.intercept == pytest.approx(np.log(3.0))
    assert fit.points == 3


def test_detection_slope_ignores_out_of_band_cells():
    curve = pd.concat([_curve(0.5), _curve(0.5).assign(theta=0.9, reject_rate=1.0)], ignore_index=True)
    assert detection_slope(curve).slope == pytest.approx(0.5)


def test_detection_slope_needs_in_band_cells():
    curve = _curve(0.5).assign(reject_rate=0.95)
    with pytest.raises(InsufficientDataError, match=r'\[0.2, 0.8\]'):
        detection_slope(curve)
    with pytest.raises(InsufficientDataError):
        detection_slope(_curve(0.5).assign(n_train=1000))


def test_slope_table():
    curve = pd.concat([_curve(1.0, 'edrt'), _curve(0.5, 'mmd')], ignore_index=True)
    table = slope_table(curve)
    assert list(table.columns) == results.SLOPE_COLUMNS
    assert list(table['test']) == ['edrt', 'mmd']
    assert table['slope'].tolist() == pytest.approx([1.0, 0.5])
    assert list(slope_table(curve, tests=['mmd'])['test']) == ['mmd']


def test_report_table():
    report = TestReport('mmd', statistic=0.1, threshold=0.05, reject=True)
    table = report_table([report])
    assert list(table.columns) == results.REPORT_COLUMNS
    assert table.loc[0, results.REJECT_COLUMN]


def test_csv_report_with_plan_sidecar(tmp_path, raw):
    path = tmp_path / 'power.csv'
    curve = make_power_curve(raw)
    text = emit_report(curve, path, 'csv', plan={'reps': 3, 'n_train': [1000]}, seed=11)
    assert path.read_text() == text
    assert sidecar_path(path) == tmp_path / 'power.plan.yaml'
    report = read_report(path)
    assert report.seed == 11
    assert report.plan == {'reps': 3, 'n_train': [1000]}
    assert list(report.table.columns) == results.POWER_CURVE_COLUMNS
    assert report.table[results.REJECT_RATE_COLUMN].tolist() == pytest.approx([0.5, 0.666667])


def test_csv_report_without_plan_has_no_sidecar(tmp_path, raw):
    path = tmp_path / 'raw.csv'
    emit_report(raw, path)
    assert not sidecar_path(path).exists()
    assert read_report(path).plan is None


def test_json_report(tmp_path, raw):
    path = tmp_path / 'power.json'
    emit_report(make_power_curve(raw), path, 'json', plan={'reps': 3}, seed=5)
    report = read_report(path)
    assert report.seed == 5
    assert report.plan == {'reps': 3}
    assert report.table[results.TEST_COLUMN].tolist() == ['edrt', 'mmd']
    assert report.table[results.FAILURES_COLUMN].tolist() == [1, 0]


def test_unknown_format(raw):
    with pytest.raises(ValueError):
        format_report(raw, 'xml')

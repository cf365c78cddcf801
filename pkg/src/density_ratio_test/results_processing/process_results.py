import io
import json
from pathlib import Path
from typing import Any, Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from loguru import logger
from scipy import stats

from density_ratio_test.components.edrt import TestReport
from density_ratio_test.constants import metadata, results
from density_ratio_test.exceptions import InsufficientDataError
from density_ratio_test.utilities import to_significant

CSV_FLOAT_FORMAT = '%.6g'
FORMATS = ('csv', 'json')


def make_power_curve(raw: pd.DataFrame, by: Sequence[str] = ()) -> pd.DataFrame:
    """Aggregates per-rep decisions into rejection rates per grid cell.

    Failed reps are counted, not dropped; a cell with any failure is
    flagged. Extra grouping columns in ``by`` lead the output.
    """
    columns = list(by) + results.POWER_CURVE_COLUMNS
    if raw.empty:
        return pd.DataFrame(columns=columns)
    keys = list(by) + [results.N_TRAIN_COLUMN, results.THETA_COLUMN, results.TEST_COLUMN]
    data = raw.copy()
    ok = ~data[results.FAILED_COLUMN].astype(bool)
    data['_decision'] = data[results.REJECT_COLUMN].where(ok).astype(float)
    data['_sigma2'] = data[results.SIGMA2_HAT_COLUMN].where(ok).astype(float)
    data['_K'] = data[results.K_STAR_COLUMN].where(ok).astype(float)
    grouped = data.groupby(keys, sort=False)
    curve = pd.DataFrame({
        results.REJECT_RATE_COLUMN: grouped['_decision'].mean(),
        results.REPS_COLUMN: grouped['_decision'].size(),
        results.FAILURES_COLUMN: grouped[results.FAILED_COLUMN].sum().astype(int),
        results.MEAN_SIGMA2_HAT_COLUMN: grouped['_sigma2'].mean(),
        results.MEAN_K_STAR_COLUMN: grouped['_K'].mean(),
    }).reset_index()
    curve[results.FAILED_COLUMN] = curve[results.FAILURES_COLUMN] > 0
    return curve[columns]


def make_signal_curve(raw: pd.DataFrame) -> pd.DataFrame:
    """Median est-sample signal and selected size per training size and criterion."""
    if raw.empty:
        return pd.DataFrame(columns=results.SIGNAL_CURVE_COLUMNS)
    keys = [results.N_TRAIN_COLUMN, results.CRITERION_COLUMN]
    data = raw.copy()
    ok = ~data[results.FAILED_COLUMN].astype(bool)
    data['_sigma2'] = data[results.SIGMA2_HAT_COLUMN].where(ok).astype(float)
    data['_K'] = data[results.K_STAR_COLUMN].where(ok).astype(float)
    grouped = data.groupby(keys, sort=False)
    curve = pd.DataFrame({
        results.MEDIAN_SIGMA2_HAT_COLUMN: grouped['_sigma2'].median(),
        results.MEDIAN_K_STAR_COLUMN: grouped['_K'].median(),
        results.REPS_COLUMN: grouped['_sigma2'].size(),
        results.FAILURES_COLUMN: grouped[results.FAILED_COLUMN].sum().astype(int),
    }).reset_index()
    return curve[results.SIGNAL_CURVE_COLUMNS]


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    points: int


def detection_slope(curve: pd.DataFrame, power_band: Tuple[float, float] = metadata.POWER_BAND,
                    test: Optional[str] = None) -> SlopeFit:
    """Regresses ``ln theta`` on ``ln(1 / n_train)`` over cells with in-band power.

    Parameters
    ----------
    curve
        A power curve.
    power_band
        Closed interval of rejection rates kept in the fit.
    test
        Restricts the fit to one test.

    """
    low, high = power_band
    data = curve
    if test is not None:
        data = data[data[results.TEST_COLUMN] == test]
    rate = data[results.REJECT_RATE_COLUMN].astype(float)
    data = data[(rate >= low) & (rate <= high) & (data[results.THETA_COLUMN].astype(float) > 0)]

    x = np.log(1 / data[results.N_TRAIN_COLUMN].to_numpy(dtype=float))
    y = np.log(data[results.THETA_COLUMN].to_numpy(dtype=float))
    if len(data) < 3 or np.unique(x).size < 2:
        raise InsufficientDataError(
            f'Need at least 3 cells over 2 training sizes with rejection rate in [{low}, {high}]'
            f'{"" if test is None else f" for {test}"}, found {len(data)}.'
        )
    fit = stats.linregress(x, y)
    return SlopeFit(float(fit.slope), float(fit.intercept), len(data))


def slope_table(curve: pd.DataFrame, power_band: Tuple[float, float] = metadata.POWER_BAND,
                tests: Optional[Sequence[str]] = None) -> pd.DataFrame:
    tests = tests or list(pd.unique(curve[results.TEST_COLUMN]))
    rows = []
    for test in tests:
        fit = detection_slope(curve, power_band, test)
        rows.append([test, fit.slope, fit.intercept, fit.points, power_band[0], power_band[1]])
    return pd.DataFrame(rows, columns=results.SLOPE_COLUMNS)


def report_table(reports: Sequence[TestReport]) -> pd.DataFrame:
    """One row of headline numbers per test report."""
    rows = [[r.test_name, r.statistic, r.threshold, bool(r.reject), r.sigma2_hat,
             r.K, r.K0, r.K1, r.max_abs_r_minus_1, r.theta_detectable] for r in reports]
    return pd.DataFrame(rows, columns=results.REPORT_COLUMNS)


class ExperimentReport(NamedTuple):
    table: pd.DataFrame
    plan: Dict[str, Any]
    seed: Optional[int]

    def dump(self, path: Union[str, Path, None], fmt: str = 'csv') -> str:
        return emit_report(self.table, path, fmt, self.plan, self.seed)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return to_significant(float(value))
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return None
    return value


def format_report(table: pd.DataFrame, fmt: str = 'csv', plan: Optional[Dict[str, Any]] = None,
                  seed: Optional[int] = None) -> str:
    if fmt not in FORMATS:
        raise ValueError(f'Unknown report format {fmt!r}; expected one of {FORMATS}.')
    if fmt == 'csv':
        buffer = io.StringIO()
        table.to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT)
        return buffer.getvalue()
    document = {
        'plan': plan,
        'seed': seed,
        'columns': [str(c) for c in table.columns],
        'rows': [[_jsonable(v) for v in row] for row in table.itertuples(index=False, name=None)],
    }
    return json.dumps(document, indent=2) + '\n'


def emit_report(table: pd.DataFrame, path: Union[str, Path, None], fmt: str = 'csv',
                plan: Optional[Dict[str, Any]] = None, seed: Optional[int] = None) -> str:
    """Writes a report table, returning its text.

    CSV reports carry floats with 6 significant digits; the plan and seed
    go to a ``<stem>.plan.yaml`` file beside the report. JSON reports
    embed them. With no ``path`` nothing is written.
    """
    text = format_report(table, fmt, plan, seed)
    if path is None:
        return text
    path = Path(path)
    path.write_text(text)
    if fmt == 'csv' and (plan is not None or seed is not None):
        with sidecar_path(path).open('w') as f:
            yaml.safe_dump({'seed': seed, 'plan': plan}, f, sort_keys=False)
    logger.info(f'Wrote {len(table)} rows to {path}.')
    return text


def sidecar_path(path: Path) -> Path:
    return path.with_name(f'{path.stem}.plan.yaml')


def read_report(path: Union[str, Path]) -> ExperimentReport:
    """Reads a CSV or JSON report written by :func:`emit_report`."""
    path = Path(path)
    if path.suffix == '.json':
        document = json.loads(path.read_text())
        rows = [[np.nan if v is None else v for v in row] for row in document['rows']]
        table = pd.DataFrame(rows, columns=document['columns'])
        return ExperimentReport(table, document.get('plan'), document.get('seed'))

    table = pd.read_csv(path)
    plan, seed = None, None
    sidecar = sidecar_path(path)
    if sidecar.exists():
        with sidecar.open() as f:
            meta = yaml.safe_load(f) or {}
        plan, seed = meta.get('plan'), meta.get('seed')
    return ExperimentReport(table, plan, seed)

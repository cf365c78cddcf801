"""Experiment applications: power curves, robustness tables, signal curves and slopes."""
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import click
import pandas as pd
from loguru import logger

from density_ratio_test.constants import metadata, results
from density_ratio_test.results_processing import process_results
from density_ratio_test.tools import experiments

PathLike = Union[str, Path, None]


def _write(table: pd.DataFrame, out: PathLike, fmt: str, plan: Dict[str, Any], seed: Optional[int]):
    text = process_results.emit_report(table, out, fmt, plan, seed)
    if out is None:
        click.echo(text, nl=False)


def _failures(table: pd.DataFrame) -> int:
    if table.empty:
        return 0
    return int(table[results.FAILURES_COLUMN].sum())


def build_power_curve(plan_file: PathLike, overrides: Dict[str, Any], out: PathLike = None, fmt: str = 'csv',
                      raw_out: PathLike = None) -> int:
    """Runs a plan and writes its power curve; returns the number of failed reps."""
    logger.info(f'Loading plan {plan_file}.')
    plan = experiments.load_plan(plan_file, overrides)
    logger.info('Simulating the plan.')
    raw = experiments.simulate_plan(plan)
    if raw_out is not None:
        process_results.emit_report(raw, raw_out, 'csv', plan.to_dict(), plan.seed)
    logger.info('Aggregating rejection rates.')
    curve = process_results.make_power_curve(raw)
    _write(curve, out, fmt, plan.to_dict(), plan.seed)
    failures = _failures(curve)
    logger.info(f'**DONE** with {failures} failed rep(s).')
    return failures


def build_robustness(plan_file: PathLike, overrides: Dict[str, Any], robustness: Dict[str, Any],
                     out: PathLike = None, fmt: str = 'csv') -> int:
    logger.info(f'Loading plan {plan_file}.')
    config = experiments.load_configuration(plan_file, overrides, robustness)
    plan = experiments.ExperimentPlan.from_config(config.plan.to_dict())
    study = config.robustness.to_dict()
    table = experiments.robustness_mixture_study(study['weights'], study['directions'], study['theta'], plan)
    _write(table, out, fmt, {**plan.to_dict(), 'robustness': study}, plan.seed)
    failures = _failures(table)
    logger.info(f'**DONE** with {failures} failed rep(s).')
    return failures


def build_signal_curve(plan_file: PathLike, overrides: Dict[str, Any], out: PathLike = None,
                       fmt: str = 'csv') -> int:
    logger.info(f'Loading plan {plan_file}.')
    plan = experiments.load_plan(plan_file, overrides)
    curve = experiments.signal_curve(plan)
    _write(curve, out, fmt, plan.to_dict(), plan.seed)
    failures = _failures(curve)
    logger.info(f'**DONE** with {failures} failed fit(s).')
    return failures


def build_slope(report: PathLike, power_band: Tuple[float, float] = metadata.POWER_BAND,
                tests: Optional[Sequence[str]] = None, out: PathLike = None, fmt: str = 'csv'):
    logger.info(f'Reading power curve {report}.')
    curve = process_results.read_report(report)
    table = process_results.slope_table(curve.table, power_band, tests)
    for row in table.itertuples(index=False):
        logger.info(f'{row.test}: theta ~ n^{-row.slope:.3g} over {row.points} cells.')
    _write(table, out, fmt, {'report': str(report), 'power_band': list(power_band)}, curve.seed)

"""Single-dataset applications: simulate a dataset, fit a partition, run one test."""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import click
import numpy as np
from loguru import logger

from density_ratio_test.components.bootstrap import BootstrapConfig, run_bedrt
from density_ratio_test.components.drop import FittedPartition, fit_drop
from density_ratio_test.components.edrt import TestReport, run_test
from density_ratio_test.components.mmd import KernelSpec, mmd_test
from density_ratio_test.components.partition import count_points
from density_ratio_test.constants import metadata
from density_ratio_test.data.dataset import LabeledDataset, Source
from density_ratio_test.data.densities import setting_densities
from density_ratio_test.data.loader import load_csv, write_csv
from density_ratio_test.data.preprocessing import preprocess
from density_ratio_test.data.simulation import sample_sizes, simulate_dataset
from density_ratio_test.exceptions import DataError, InsufficientDataError
from density_ratio_test.results_processing import process_results
from density_ratio_test.tools.experiments import (BOOTSTRAP_STREAM, MMD_STREAM, SPLIT_STREAM, TRAIN_STREAM,
                                                  resolve_setting)
from density_ratio_test.utilities import derive_seed

PathLike = Union[str, Path, None]


def deliver(text: str, out: PathLike):
    """Writes ``text`` to ``out``, or to stdout when no path is given."""
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)
        logger.info(f'Wrote {out}.')


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def to_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, default=_json_default) + '\n'


def load_inputs(data: PathLike = None, reference: PathLike = None, contaminant: PathLike = None,
                test: PathLike = None, preprocess_data: bool = False) -> LabeledDataset:
    """Gathers rows from a tagged data file and per-source files.

    Raises
    ------
    DataError
        If no file is given, or the points lie outside the unit cube and
        ``preprocess_data`` is off.

    """
    parts = []
    if data is not None:
        parts.append(load_csv(data))
    for path, source in ((reference, Source.REFERENCE), (contaminant, Source.CONTAMINANT), (test, Source.TEST)):
        if path is not None:
            parts.append(load_csv(path, source=source))
    if not parts:
        raise DataError('No input data: give a data file or per-source files.')
    ds = parts[0]
    for part in parts[1:]:
        ds = ds.concat(part)
    if preprocess_data:
        ds = preprocess(ds)
    if not ds.in_unit_cube():
        raise DataError('Points lie outside the unit cube; preprocess them first.')
    logger.info(f'Loaded {ds.count(Source.REFERENCE)} reference, {ds.count(Source.CONTAMINANT)} contaminant '
                f'and {ds.count(Source.TEST)} test rows in {ds.d} dimensions.')
    return ds


def simulate_data(setting: str, n_train: int, theta: float, frac_n0: float = metadata.FRAC_N0,
                  frac_test: float = metadata.FRAC_TEST, seed: int = 0, out: PathLike = None):
    f0, f1 = setting_densities(resolve_setting(setting))
    _, _, n = sample_sizes(n_train, frac_n0, frac_test)
    ds = simulate_dataset(f0, f1, n_train, theta, n, frac_n0, seed=derive_seed(seed, TRAIN_STREAM))
    deliver(write_csv(ds), out)


def _test_size(ds: LabeledDataset, n: Optional[int]) -> int:
    n = ds.count(Source.TEST) if n is None else n
    if n < 1:
        raise InsufficientDataError('The test sample size is zero; add test rows or give it explicitly.')
    return n


def fit(ds: LabeledDataset, n: Optional[int] = None, alpha: float = metadata.ALPHA,
        K_max: int = metadata.K_MAX, criterion: str = metadata.SPLIT_CRITERION.DENSITY_RATIO,
        selection: str = metadata.SELECTION_MODE.FULL, frac_part: float = metadata.FRAC_PART,
        force_min_K: bool = False, seed: int = 0) -> FittedPartition:
    n = _test_size(ds, n)
    training = ds.count(Source.REFERENCE) + ds.count(Source.CONTAMINANT)
    min_K = max(1, int(np.ceil(np.log(training)))) if force_min_K else 1
    return fit_drop(ds, n, alpha, K_max, criterion, selection, frac_part,
                    seed=derive_seed(seed, SPLIT_STREAM), min_K=min_K)


def fit_partition(ds: LabeledDataset, n: Optional[int] = None, seed: int = 0, out: PathLike = None, **options):
    """Dumps the fitted partition sequence and the histogram at the selected size as JSON."""
    fitted = fit(ds, n, seed=seed, **options)
    document = {
        'seed': seed,
        'n': fitted.context.n,
        'partition': fitted.sequence.to_dict(),
        'histogram': fitted.histogram.to_dict(),
        'context': fitted.context.to_dict(),
    }
    deliver(to_json(document), out)


def _emit(report: TestReport, fmt: str, out: PathLike, plan: Dict[str, Any], seed: int,
          include_replicates: bool = False):
    if fmt == 'json':
        document = {'plan': plan, 'seed': seed, 'report': report.to_dict(include_replicates)}
        deliver(to_json(document), out)
        return
    text = process_results.emit_report(process_results.report_table([report]), out, fmt, plan, seed)
    if out is None:
        click.echo(text, nl=False)


def edrt_report(ds: LabeledDataset, seed: int = 0, fmt: str = 'json', out: PathLike = None, **options):
    fitted = fit(ds, seed=seed, **options)
    test_points = ds.select(Source.TEST)
    report = run_test(fitted.histogram, fitted.context, count_points(fitted.tree, test_points), len(test_points))
    if not report.undetectable:
        logger.info(f'Contamination above theta={report.theta_detectable:.3g} is detected with power 1 - alpha.')
    _emit(report, fmt, out, {'test': report.test_name, **options}, seed)


def bedrt_report(ds: LabeledDataset, replicates: int = metadata.BOOTSTRAP_REPLICATES,
                 quantile_level: float = metadata.BOOTSTRAP_QUANTILE, seed: int = 0, fmt: str = 'json',
                 out: PathLike = None, include_replicates: bool = False, **options):
    fitted = fit(ds, seed=seed, **options)
    cfg = BootstrapConfig(replicates, quantile_level, derive_seed(seed, BOOTSTRAP_STREAM))
    report = run_bedrt(fitted.tree, fitted.est_reference, fitted.est_contaminant, ds.select(Source.TEST),
                       fitted.context, cfg)
    plan = {'test': report.test_name, 'bootstrap_replicates': replicates, 'quantile_level': quantile_level,
            **options}
    _emit(report, fmt, out, plan, seed, include_replicates)


def mmd_report(ds: LabeledDataset, bandwidth: Union[str, float] = 'median',
               replicates: int = metadata.MMD_REPLICATES, alpha: float = metadata.ALPHA, seed: int = 0,
               fmt: str = 'json', out: PathLike = None):
    report = mmd_test(ds.select(Source.REFERENCE), ds.select(Source.TEST), KernelSpec(bandwidth=bandwidth),
                      replicates, alpha, seed=derive_seed(seed, MMD_STREAM))
    plan = {'test': report.test_name, 'bandwidth': bandwidth, 'replicates': replicates, 'alpha': alpha}
    _emit(report, fmt, out, plan, seed)

import sys
from typing import Any, Dict, Optional, Tuple

import click
from loguru import logger
from vivarium.framework.utilities import handle_exceptions

from density_ratio_test.components.drop import CRITERIA, SELECTION_MODES
from density_ratio_test.components.mmd import MEDIAN
from density_ratio_test.constants import metadata, paths, results, settings
from density_ratio_test.results_processing.process_results import FORMATS
from density_ratio_test.tools import (add_logging_sink, bedrt_report, build_power_curve, build_robustness,
                                      build_signal_curve, build_slope, configure_logging_to_terminal, edrt_report,
                                      fit_partition, load_inputs, mmd_report, simulate_data)

FAILED_CELLS_EXIT_CODE = 2


def _bandwidth(ctx, param, value):
    if value is None or value == MEDIAN:
        return value
    try:
        bandwidth = float(value)
    except ValueError:
        raise click.BadParameter(f'expected a positive number or {MEDIAN!r}.')
    if bandwidth <= 0:
        raise click.BadParameter(f'expected a positive number or {MEDIAN!r}.')
    return bandwidth


def output_options(func):
    options = [
        click.option('-o', '--out', type=click.Path(dir_okay=False), default=None,
                     help='Output file. Writes to stdout when omitted.'),
        click.option('-v', 'verbose', count=True,
                     help='Configure logging verbosity.'),
        click.option('--pdb', 'with_debugger', is_flag=True,
                     help='Drop into python debugger if an error occurs.'),
        click.option('--log-file', type=click.Path(dir_okay=False), default=None,
                     help='Also write logs to this file.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def common_options(func):
    func = output_options(func)
    return click.option('--seed', type=int, default=None,
                        help='Root seed of every random stream. [default: 0, or the plan seed]')(func)


def format_option(default: str):
    return click.option('--format', 'fmt', type=click.Choice(FORMATS), default=default, show_default=True,
                        help='Report format.')


def alpha_option(func):
    return click.option('--alpha', type=float, default=None,
                        help=f'Level of the tests. [default: {metadata.ALPHA}, or the plan level]')(func)


def data_options(func):
    options = [
        click.argument('data', required=False, type=click.Path(exists=True, dir_okay=False)),
        click.option('--reference', type=click.Path(exists=True, dir_okay=False),
                     help='CSV whose rows are all reference points.'),
        click.option('--contaminant', type=click.Path(exists=True, dir_okay=False),
                     help='CSV whose rows are all contaminant points.'),
        click.option('--test', 'test_data', type=click.Path(exists=True, dir_okay=False),
                     help='CSV whose rows are all test points.'),
        click.option('--preprocess', 'preprocess_data', is_flag=True,
                     help='Map raw measurements into the unit cube with the arcsinh transform.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def partition_options(func):
    options = [
        click.option('--K-max', 'K_max', type=int, default=metadata.K_MAX, show_default=True,
                     help='Largest number of bins.'),
        click.option('--criterion', type=click.Choice(CRITERIA), default=metadata.SPLIT_CRITERION.DENSITY_RATIO,
                     show_default=True, help='Split criterion.'),
        click.option('--selection', type=click.Choice(SELECTION_MODES), default=metadata.SELECTION_MODE.FULL,
                     show_default=True, help='Size-selection criterion.'),
        click.option('--frac-part', type=float, default=metadata.FRAC_PART, show_default=True,
                     help='Share of each labelled source used to grow the partition.'),
        click.option('--force-min-K', 'force_min_K', is_flag=True,
                     help='Select at least ceil(log(n_train)) bins.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def plan_options(default_plan):
    def decorator(func):
        options = [
            click.option('--plan', 'plan_file', type=click.Path(exists=True, dir_okay=False),
                         default=str(default_plan), show_default=True, help='YAML experiment plan.'),
            click.option('--n-train', type=int, multiple=True, help='Training sizes; repeat for a grid.'),
            click.option('--reps', type=int, default=None, help='Repetitions per grid cell.'),
            click.option('--K-max', 'K_max', type=int, default=None, help='Largest number of bins.'),
            click.option('--force-min-K', 'force_min_K', is_flag=True, default=None,
                         help='Select at least ceil(log(n_train)) bins.'),
            click.option('--workers', type=int, default=None, help='Worker processes.'),
        ]
        for option in reversed(options):
            func = option(func)
        return func
    return decorator


def _setup_logging(verbose: int, log_file: Optional[str]):
    configure_logging_to_terminal(verbose)
    if log_file is not None:
        add_logging_sink(log_file, verbose)


def _seed(seed: Optional[int]) -> int:
    return 0 if seed is None else seed


def _alpha(alpha: Optional[float]) -> float:
    return metadata.ALPHA if alpha is None else alpha


def _overrides(**options) -> Dict[str, Any]:
    overrides = {}
    for key, value in options.items():
        if value is None or value == () or value is False:
            continue
        overrides[key] = list(value) if isinstance(value, tuple) else value
    return overrides


def _exit_on_failures(failures: Optional[int]):
    if failures:
        logger.warning(f'{failures} experiment rep(s) failed; see the failed column of the report.')
        sys.exit(FAILED_CELLS_EXIT_CODE)


@click.group()
def drt():
    """Contamination detection with density-ratio oriented partitions."""


@drt.command()
@click.option('--setting', type=click.Choice(settings.GAUSSIAN_SETTINGS.labels, case_sensitive=False),
              default=settings.GAUSSIAN_SETTINGS.A.label, show_default=True, help='Simulation setting.')
@click.option('--n-train', type=int, default=10_000, show_default=True, help='Training sample size.')
@click.option('--theta', type=float, default=0.0, show_default=True, help='Contamination of the test sample.')
@click.option('--frac-n0', type=float, default=metadata.FRAC_N0, show_default=True,
              help='Reference share of the training sample.')
@click.option('--frac-test', type=float, default=metadata.FRAC_TEST, show_default=True,
              help='Test size as a share of the training size.')
@common_options
def simulate(setting: str, n_train: int, theta: float, frac_n0: float, frac_test: float,
             seed: Optional[int], out: Optional[str], verbose: int, with_debugger: bool,
             log_file: Optional[str]) -> None:
    """Writes a simulated dataset with reference, contaminant and test rows."""
    _setup_logging(verbose, log_file)
    main = handle_exceptions(simulate_data, logger, with_debugger=with_debugger)
    main(setting, n_train, theta, frac_n0, frac_test, _seed(seed), out)


@drt.command('fit-partition')
@data_options
@partition_options
@click.option('--n', 'n', type=int, default=None, help='Test sample size. [default: number of test rows]')
@alpha_option
@common_options
def fit_partition_command(data, reference, contaminant, test_data, preprocess_data, K_max, criterion, selection,
                          frac_part, force_min_K, n, alpha, seed, out, verbose, with_debugger, log_file) -> None:
    """Grows a partition, selects its size and dumps it as JSON."""
    _setup_logging(verbose, log_file)

    def run():
        ds = load_inputs(data, reference, contaminant, test_data, preprocess_data)
        fit_partition(ds, n, seed=_seed(seed), out=out, alpha=_alpha(alpha), K_max=K_max, criterion=criterion,
                      selection=selection, frac_part=frac_part, force_min_K=force_min_K)

    main = handle_exceptions(run, logger, with_debugger=with_debugger)
    main()


@drt.command()
@data_options
@partition_options
@alpha_option
@format_option('json')
@common_options
def edrt(data, reference, contaminant, test_data, preprocess_data, K_max, criterion, selection, frac_part,
         force_min_K, alpha, fmt, seed, out, verbose, with_debugger, log_file) -> None:
    """Runs the estimated density ratio test on the test rows."""
    _setup_logging(verbose, log_file)

    def run():
        ds = load_inputs(data, reference, contaminant, test_data, preprocess_data)
        edrt_report(ds, seed=_seed(seed), fmt=fmt, out=out, alpha=_alpha(alpha), K_max=K_max, criterion=criterion,
                    selection=selection, frac_part=frac_part, force_min_K=force_min_K)

    main = handle_exceptions(run, logger, with_debugger=with_debugger)
    main()


@drt.command()
@data_options
@partition_options
@click.option('--bootstrap-reps', '--replicates', 'replicates', type=int, default=metadata.BOOTSTRAP_REPLICATES,
              show_default=True, help='Bootstrap replicates.')
@click.option('--quantile', '--quantile-level', 'quantile_level', type=float, default=metadata.BOOTSTRAP_QUANTILE,
              show_default=True, help='Quantile of the null replicates used as threshold.')
@click.option('--include-replicates', is_flag=True, help='Add the null replicate statistics to JSON reports.')
@alpha_option
@format_option('json')
@common_options
def bedrt(data, reference, contaminant, test_data, preprocess_data, K_max, criterion, selection, frac_part,
          force_min_K, replicates, quantile_level, include_replicates, alpha, fmt, seed, out, verbose, with_debugger,
          log_file) -> None:
    """Runs the bootstrap-calibrated test on the test rows."""
    _setup_logging(verbose, log_file)

    def run():
        ds = load_inputs(data, reference, contaminant, test_data, preprocess_data)
        bedrt_report(ds, replicates, quantile_level, seed=_seed(seed), fmt=fmt, out=out,
                     include_replicates=include_replicates, alpha=_alpha(alpha), K_max=K_max,
                     criterion=criterion, selection=selection, frac_part=frac_part, force_min_K=force_min_K)

    main = handle_exceptions(run, logger, with_debugger=with_debugger)
    main()


@drt.command('mmd-test')
@data_options
@click.option('--kernel-bandwidth', '--bandwidth', 'bandwidth', default=MEDIAN, show_default=True,
              callback=_bandwidth,
              help=f'Kernel bandwidth, a positive number or {MEDIAN!r}.')
@click.option('--bootstrap-reps', '--replicates', 'replicates', type=int, default=metadata.MMD_REPLICATES,
              show_default=True, help='Permutation replicates.')
@alpha_option
@format_option('json')
@common_options
def mmd_test_command(data, reference, contaminant, test_data, preprocess_data, bandwidth, replicates, alpha, fmt,
                     seed, out, verbose, with_debugger, log_file) -> None:
    """Runs the linear-time MMD test of the reference rows against the test rows."""
    _setup_logging(verbose, log_file)

    def run():
        ds = load_inputs(data, reference, contaminant, test_data, preprocess_data)
        mmd_report(ds, bandwidth, replicates, _alpha(alpha), seed=_seed(seed), fmt=fmt, out=out)

    main = handle_exceptions(run, logger, with_debugger=with_debugger)
    main()


@drt.command('power-curve')
@plan_options(paths.POWER_CURVE_PLAN)
@click.option('--setting', type=click.Choice(settings.GAUSSIAN_SETTINGS.labels, case_sensitive=False),
              default=None, help='Simulation setting.')
@click.option('--reference-data', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Recorded reference points to resample instead of a setting.')
@click.option('--contaminant-data', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Recorded contaminant points to resample instead of a setting.')
@click.option('--theta', type=float, multiple=True, help='Contamination fractions; repeat for a grid.')
@click.option('--tests', type=click.Choice(results.TESTS.ALL), multiple=True, help='Tests to run; repeatable.')
@click.option('--criterion', type=click.Choice(CRITERIA), default=None, help='Split criterion.')
@click.option('--bootstrap-replicates', type=int, default=None, help='Bootstrap replicates.')
@click.option('--mmd-replicates', type=int, default=None, help='MMD permutation replicates.')
@click.option('--bandwidth', default=None, callback=_bandwidth, help=f'Kernel bandwidth or {MEDIAN!r}.')
@click.option('--raw-out', type=click.Path(dir_okay=False), default=None,
              help='Also write the per-rep decisions as CSV.')
@alpha_option
@format_option('csv')
@common_options
def power_curve(plan_file, n_train, reps, K_max, force_min_K, workers, setting, reference_data, contaminant_data,
                theta, tests, criterion, bootstrap_replicates, mmd_replicates, bandwidth, raw_out, alpha, fmt,
                seed, out, verbose, with_debugger, log_file) -> None:
    """Rejection rates of the tests over a grid of training sizes and contaminations."""
    _setup_logging(verbose, log_file)
    overrides = _overrides(
        setting=setting, reference_data=reference_data, contaminant_data=contaminant_data, n_train=n_train,
        theta=theta, reps=reps, tests=tests, alpha=alpha, K_max=K_max, criterion=criterion,
        bootstrap_replicates=bootstrap_replicates, mmd_replicates=mmd_replicates, bandwidth=bandwidth,
        force_min_K=force_min_K, seed=seed, workers=workers,
    )
    main = handle_exceptions(build_power_curve, logger, with_debugger=with_debugger)
    _exit_on_failures(main(plan_file, overrides, out, fmt, raw_out))


@drt.command()
@plan_options(paths.ROBUSTNESS_PLAN)
@click.option('--weights', type=float, multiple=True, help='Weights of g_a in the shifted mixture; repeatable.')
@click.option('--direction', 'directions', type=click.Choice(settings.SHIFT_DIRECTION), multiple=True,
              help='Phase whose reference mixture is shifted; repeatable.')
@click.option('--theta', type=float, default=None, help='Contamination fraction of the alternative.')
@click.option('--tests', type=click.Choice(results.TESTS.ALL), multiple=True, help='Tests to run; repeatable.')
@alpha_option
@format_option('csv')
@common_options
def robustness(plan_file, n_train, reps, K_max, force_min_K, workers, weights, directions, theta, tests, alpha,
               fmt, seed, out, verbose, with_debugger, log_file) -> None:
    """Rejection rates when the reference mixture shifts between training and test."""
    _setup_logging(verbose, log_file)
    overrides = _overrides(n_train=n_train, reps=reps, tests=tests, alpha=alpha, K_max=K_max,
                           force_min_K=force_min_K, seed=seed, workers=workers)
    study = _overrides(weights=weights, directions=directions, theta=theta)
    main = handle_exceptions(build_robustness, logger, with_debugger=with_debugger)
    _exit_on_failures(main(plan_file, overrides, study, out, fmt))


@drt.command('signal-curve')
@plan_options(paths.SIGNAL_CURVE_PLAN)
@click.option('--setting', type=click.Choice(settings.GAUSSIAN_SETTINGS.labels, case_sensitive=False),
              default=None, help='Simulation setting.')
@alpha_option
@format_option('csv')
@common_options
def signal_curve(plan_file, n_train, reps, K_max, force_min_K, workers, setting, alpha, fmt, seed, out, verbose,
                 with_debugger, log_file) -> None:
    """Median estimated signal of density-ratio against Gini partitions."""
    _setup_logging(verbose, log_file)
    overrides = _overrides(setting=setting, n_train=n_train, reps=reps, alpha=alpha, K_max=K_max,
                           force_min_K=force_min_K, seed=seed, workers=workers)
    main = handle_exceptions(build_signal_curve, logger, with_debugger=with_debugger)
    _exit_on_failures(main(plan_file, overrides, out, fmt))


@drt.command()
@click.argument('report', type=click.Path(exists=True, dir_okay=False))
@click.option('--band', type=(float, float), default=metadata.POWER_BAND, show_default=True,
              help='Rejection rates kept in the fit.')
@click.option('--tests', type=click.Choice(results.TESTS.ALL), multiple=True,
              help='Tests to fit. [default: every test in the report]')
@format_option('csv')
@output_options
def slope(report: str, band: Tuple[float, float], tests: Tuple[str, ...], fmt: str,
          out: Optional[str], verbose: int, with_debugger: bool, log_file: Optional[str]) -> None:
    """Fits the detection slope of ln(theta) against ln(1/n_train) on a power curve report.

    The slope report carries the seed of the power curve it was fitted on.
    """
    _setup_logging(verbose, log_file)
    main = handle_exceptions(build_slope, logger, with_debugger=with_debugger)
    main(report, band, list(tests) or None, out, fmt)

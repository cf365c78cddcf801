"""Experiment plans and the Monte Carlo loops that run them."""
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from loguru import logger
from vivarium import ConfigTree

from density_ratio_test.components.bootstrap import BootstrapConfig, bootstrap_statistics, run_bedrt
from density_ratio_test.components.drop import CRITERIA, SELECTION_MODES, fit_drop
from density_ratio_test.components.edrt import TestReport, oracle_lr_test, run_test
from density_ratio_test.components.histogram import population_signal
from density_ratio_test.components.mmd import MEDIAN, KernelSpec, mmd_test
from density_ratio_test.components.partition import count_points
from density_ratio_test.constants import metadata, results, settings
from density_ratio_test.data.dataset import Source
from density_ratio_test.data.densities import GaussianMixture, TruncatedGaussian, setting_densities
from density_ratio_test.data.loader import load_csv
from density_ratio_test.data.preprocessing import preprocess
from density_ratio_test.data.simulation import (EmpiricalSource, Sampleable, sample_contaminated,
                                                sample_sizes, simulate_dataset)
from density_ratio_test.exceptions import DensityRatioTestError, PlanError
from density_ratio_test.results_processing import process_results
from density_ratio_test.utilities import derive_seed

PLAN_LAYERS = ['base', 'plan_file', 'override']

# Stream keys under (seed, n_train index, rep).
TRAIN_STREAM = 0
TEST_STREAM = 1
BOOTSTRAP_STREAM = 2
MMD_STREAM = 3
SPLIT_STREAM = 4


@dataclass(frozen=True)
class ExperimentPlan:
    setting: Union[str, settings.GaussianSetting, None] = settings.GAUSSIAN_SETTINGS.A.label
    reference_data: Optional[str] = None
    contaminant_data: Optional[str] = None
    preprocess: bool = False
    n_train: Tuple[int, ...] = metadata.N_TRAIN_GRID
    theta: Tuple[float, ...] = metadata.THETA_GRID
    reps: int = metadata.REPS
    tests: Tuple[str, ...] = results.TESTS.PARTITIONED + (results.TESTS.MMD,)
    alpha: float = metadata.ALPHA
    frac_n0: float = metadata.FRAC_N0
    frac_test: float = metadata.FRAC_TEST
    frac_part: float = metadata.FRAC_PART
    K_max: int = metadata.K_MAX
    criterion: str = metadata.SPLIT_CRITERION.DENSITY_RATIO
    selection: str = metadata.SELECTION_MODE.FULL
    bootstrap_replicates: int = metadata.BOOTSTRAP_REPLICATES
    quantile_level: float = metadata.BOOTSTRAP_QUANTILE
    mmd_replicates: int = metadata.MMD_REPLICATES
    bandwidth: Union[str, float] = MEDIAN
    force_min_K: bool = False
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'n_train', tuple(int(n) for n in _as_sequence(self.n_train)))
        object.__setattr__(self, 'theta', tuple(float(t) for t in _as_sequence(self.theta)))
        object.__setattr__(self, 'tests', tuple(str(t).lower() for t in _as_sequence(self.tests)))
        self._validate()

    def _validate(self):
        problems = []
        if not self.n_train or min(self.n_train) < 1:
            problems.append('n_train must be a non-empty grid of positive sizes')
        if not self.theta or not all(0 <= t <= 1 for t in self.theta):
            problems.append('theta must be a non-empty grid of fractions in [0, 1]')
        if self.reps < 1:
            problems.append('reps must be at least 1')
        if not self.tests:
            problems.append('at least one test is needed')
        unknown = sorted(set(self.tests) - set(results.TESTS.ALL))
        if unknown:
            problems.append(f'unknown tests {unknown}; choose from {list(results.TESTS.ALL)}')
        if not 0 < self.alpha < 1:
            problems.append('alpha must lie in (0, 1)')
        for name in ('frac_n0', 'frac_part', 'quantile_level'):
            if not 0 < getattr(self, name) < 1:
                problems.append(f'{name} must lie in (0, 1)')
        if not self.frac_test > 0:
            problems.append('frac_test must be positive')
        for name in ('K_max', 'bootstrap_replicates', 'mmd_replicates', 'workers'):
            if getattr(self, name) < 1:
                problems.append(f'{name} must be at least 1')
        if self.criterion not in CRITERIA:
            problems.append(f'criterion must be one of {list(CRITERIA)}')
        if self.selection not in SELECTION_MODES:
            problems.append(f'selection must be one of {list(SELECTION_MODES)}')
        try:
            KernelSpec(bandwidth=self.bandwidth)
        except ValueError as e:
            problems.append(str(e))

        uses_data = self.reference_data is not None or self.contaminant_data is not None
        if uses_data:
            if self.reference_data is None or self.contaminant_data is None:
                problems.append('reference_data and contaminant_data must be given together')
            if results.TESTS.ORACLE_LR in self.tests:
                problems.append('the oracle likelihood-ratio test needs a simulation setting')
        elif self.setting is None:
            problems.append('either a setting or reference_data and contaminant_data are required')
        else:
            try:
                resolve_setting(self.setting)
            except (KeyError, TypeError, DensityRatioTestError) as e:
                problems.append(f'invalid setting {self.setting!r}: {e}')
        if problems:
            raise PlanError('Invalid experiment plan: ' + '; '.join(problems) + '.')

    @property
    def uses_data(self) -> bool:
        return self.reference_data is not None

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> 'ExperimentPlan':
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(config) - fields)
        if unknown:
            raise PlanError(f'Unknown plan keys {unknown}.')
        try:
            return cls(**config)
        except (TypeError, ValueError) as e:
            if isinstance(e, PlanError):
                raise
            raise PlanError(f'Invalid experiment plan: {e}') from e

    def to_dict(self) -> Dict[str, Any]:
        return _plain(dataclasses.asdict(self))

    def replace(self, **changes) -> 'ExperimentPlan':
        return dataclasses.replace(self, **changes)


def _plain(value):
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def _as_sequence(value) -> Sequence:
    if isinstance(value, (str, int, float)):
        return (value,)
    return tuple(value)


def resolve_setting(setting: Union[str, settings.GaussianSetting]) -> settings.GaussianSetting:
    if isinstance(setting, settings.GaussianSetting):
        return setting
    return settings.GAUSSIAN_SETTINGS[setting]


#################
# Plan loading  #
#################

def _plan_defaults() -> Dict[str, Any]:
    defaults = ExperimentPlan().to_dict()
    return {key: value for key, value in defaults.items() if value is not None}


def _robustness_defaults() -> Dict[str, Any]:
    return {
        'weights': list(settings.ROBUSTNESS_WEIGHTS),
        'directions': list(settings.SHIFT_DIRECTION),
        'theta': settings.ROBUSTNESS_THETA,
    }


def _drop_none(data: Mapping[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in data.items() if value is not None}


def load_configuration(plan_file: Union[str, Path, None] = None,
                       overrides: Optional[Mapping[str, Any]] = None,
                       robustness_overrides: Optional[Mapping[str, Any]] = None) -> ConfigTree:
    """Layers plan defaults, a YAML plan file and command-line overrides.

    The plan file keeps plan keys under a top-level ``plan`` key and may
    carry a ``robustness`` section.
    """
    config = ConfigTree(layers=PLAN_LAYERS)
    config.update({'plan': _plan_defaults(), 'robustness': _robustness_defaults()},
                  layer='base', source='defaults')
    if plan_file is not None:
        plan_file = Path(plan_file)
        with plan_file.open() as f:
            document = yaml.safe_load(f) or {}
        unknown = sorted(set(document) - {'plan', 'robustness'})
        if unknown:
            raise PlanError(f'Unknown sections {unknown} in {plan_file}.')
        if 'plan' in document:
            _check_keys(document['plan'] or {}, _plan_defaults().keys() | {'reference_data', 'contaminant_data'},
                        plan_file)
        if 'robustness' in document:
            _check_keys(document['robustness'] or {}, _robustness_defaults().keys(), plan_file)
        document = {key: _drop_none(value or {}) for key, value in document.items()}
        config.update(document, layer='plan_file', source=str(plan_file))
    layered = {}
    if overrides:
        layered['plan'] = _drop_none(overrides)
    if robustness_overrides:
        layered['robustness'] = _drop_none(robustness_overrides)
    if any(layered.values()):
        config.update({key: value for key, value in layered.items() if value}, layer='override',
                      source='command_line')
    return config


def _check_keys(section: Mapping[str, Any], allowed: Iterable[str], source: Path):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise PlanError(f'Unknown plan keys {unknown} in {source}.')


def load_plan(plan_file: Union[str, Path, None] = None,
              overrides: Optional[Mapping[str, Any]] = None) -> ExperimentPlan:
    config = load_configuration(plan_file, overrides)
    return ExperimentPlan.from_config(config.plan.to_dict())


#############
# Scenarios #
#############

class Scenario(NamedTuple):
    """Densities behind one experiment: training reference, test reference and contaminant."""
    f0_train: Sampleable
    f0_test: Sampleable
    f1: Sampleable


def make_scenario(plan: ExperimentPlan) -> Scenario:
    if plan.uses_data:
        reference = load_csv(plan.reference_data, source=Source.REFERENCE)
        contaminant = load_csv(plan.contaminant_data, source=Source.CONTAMINANT)
        ds = reference.concat(contaminant)
        if plan.preprocess:
            ds = preprocess(ds)
        if not ds.in_unit_cube():
            raise PlanError('Recorded data must lie in the unit cube; set preprocess to rescale it.')
        f0 = EmpiricalSource(ds.select(Source.REFERENCE))
        return Scenario(f0, f0, EmpiricalSource(ds.select(Source.CONTAMINANT)))
    f0, f1 = setting_densities(resolve_setting(plan.setting))
    return Scenario(f0, f0, f1)


def mixture_reference(weight: float) -> GaussianMixture:
    """``weight * g_a + (1 - weight) * g_b`` with the robustness components."""
    components = settings.MIXTURE_COMPONENTS
    return GaussianMixture(
        [TruncatedGaussian(components.G_A, components.VARIANCE),
         TruncatedGaussian(components.G_B, components.VARIANCE)],
        [weight, 1 - weight],
    )


def robustness_scenario(weight: float, direction: str) -> Scenario:
    """Reference mixture shifted between the training and the test phase.

    ``train_shift`` trains on the balanced mixture and tests on weight
    ``weight``; ``test_shift`` does the reverse.
    """
    components = settings.MIXTURE_COMPONENTS
    contaminant = TruncatedGaussian(components.CONTAMINANT, components.VARIANCE)
    balanced, shifted = mixture_reference(settings.BALANCED_WEIGHT), mixture_reference(weight)
    if direction == settings.SHIFT_DIRECTION.TRAIN_SHIFT:
        return Scenario(balanced, shifted, contaminant)
    if direction == settings.SHIFT_DIRECTION.TEST_SHIFT:
        return Scenario(shifted, balanced, contaminant)
    raise PlanError(f'Unknown shift direction {direction!r}; expected one of {list(settings.SHIFT_DIRECTION)}.')


################
# Power curves #
################

class Job(NamedTuple):
    plan: ExperimentPlan
    scenario: Scenario
    n_index: int
    rep: int


def _row(n_train: int, theta: float, rep: int, test: str, report: Optional[TestReport] = None,
         error: Optional[Exception] = None) -> Dict[str, Any]:
    row = {
        results.N_TRAIN_COLUMN: n_train,
        results.THETA_COLUMN: theta,
        results.REP_COLUMN: rep,
        results.TEST_COLUMN: test,
        results.REJECT_COLUMN: None,
        results.STATISTIC_COLUMN: np.nan,
        results.THRESHOLD_COLUMN: np.nan,
        results.SIGMA2_HAT_COLUMN: np.nan,
        results.K_STAR_COLUMN: np.nan,
        results.FAILED_COLUMN: error is not None,
        results.ERROR_COLUMN: '' if error is None else f'{type(error).__name__}: {error}',
    }
    if report is not None:
        row.update({
            results.REJECT_COLUMN: report.reject,
            results.STATISTIC_COLUMN: report.statistic,
            results.THRESHOLD_COLUMN: report.threshold,
            results.SIGMA2_HAT_COLUMN: report.sigma2_hat,
            results.K_STAR_COLUMN: np.nan if report.K is None else report.K,
        })
    return row


def min_size(plan: ExperimentPlan, n_train: int) -> int:
    return max(1, math.ceil(math.log(n_train))) if plan.force_min_K else 1


def run_job(job: Job) -> List[Dict[str, Any]]:
    """Runs every theta and test for one training size and rep.

    One partition and one set of bootstrap replicates serve all thetas;
    each theta draws its own test sample.
    """
    plan, scenario = job.plan, job.scenario
    n_train = plan.n_train[job.n_index]
    stream = (plan.seed, job.n_index, job.rep)
    _, _, n = sample_sizes(n_train, plan.frac_n0, plan.frac_test)
    partitioned = [t for t in results.TESTS.PARTITIONED if t in plan.tests]

    rows = []
    try:
        ds = simulate_dataset(scenario.f0_train, scenario.f1, n_train, frac_n0=plan.frac_n0,
                              seed=derive_seed(*stream, TRAIN_STREAM))
    except DensityRatioTestError as e:
        logger.warning(f'Training draw failed for n_train={n_train}, rep={job.rep}: {e}')
        return [_row(n_train, theta, job.rep, test, error=e) for theta in plan.theta for test in plan.tests]

    fit, fit_error, null_replicates = None, None, None
    if partitioned:
        try:
            fit = fit_drop(ds, n, plan.alpha, plan.K_max, plan.criterion, plan.selection, plan.frac_part,
                           seed=derive_seed(*stream, SPLIT_STREAM), min_K=min_size(plan, n_train))
            if results.TESTS.BEDRT in partitioned:
                cfg = BootstrapConfig(plan.bootstrap_replicates, plan.quantile_level,
                                      derive_seed(*stream, BOOTSTRAP_STREAM))
                null_replicates = bootstrap_statistics(fit.tree, fit.est_reference, fit.est_contaminant,
                                                       fit.context, cfg)
        except DensityRatioTestError as e:
            logger.warning(f'Partition fit failed for n_train={n_train}, rep={job.rep}: {e}')
            fit_error = e

    sigma2 = None
    if results.TESTS.ORACLE_LR in plan.tests:
        sigma2 = population_signal(scenario.f0_train, scenario.f1)

    reference = ds.select(Source.REFERENCE)
    for i_theta, theta in enumerate(plan.theta):
        try:
            test_points, _ = sample_contaminated(scenario.f0_test, scenario.f1, theta, n,
                                                 derive_seed(*stream, TEST_STREAM, i_theta))
        except DensityRatioTestError as e:
            rows.extend(_row(n_train, theta, job.rep, test, error=e) for test in plan.tests)
            continue
        for test in plan.tests:
            if test in partitioned and fit_error is not None:
                rows.append(_row(n_train, theta, job.rep, test, error=fit_error))
                continue
            try:
                if test == results.TESTS.EDRT:
                    report = run_test(fit.histogram, fit.context, count_points(fit.tree, test_points), n)
                elif test == results.TESTS.BEDRT:
                    cfg = BootstrapConfig(plan.bootstrap_replicates, plan.quantile_level)
                    report = run_bedrt(fit.tree, fit.est_reference, fit.est_contaminant, test_points,
                                       fit.context, cfg, replicates=null_replicates)
                elif test == results.TESTS.MMD:
                    report = mmd_test(reference, test_points, KernelSpec(bandwidth=plan.bandwidth),
                                      plan.mmd_replicates, plan.alpha,
                                      seed=derive_seed(*stream, MMD_STREAM, i_theta))
                else:
                    report = oracle_lr_test(scenario.f0_train, scenario.f1, test_points, plan.alpha, sigma2)
                rows.append(_row(n_train, theta, job.rep, test, report))
            except DensityRatioTestError as e:
                logger.warning(f'{test} failed for n_train={n_train}, theta={theta:g}, rep={job.rep}: {e}')
                rows.append(_row(n_train, theta, job.rep, test, error=e))
    logger.debug(f'Finished n_train={n_train}, rep={job.rep}.')
    return rows


def _execute(function, jobs: Sequence, workers: int) -> List[Dict[str, Any]]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(function, jobs))
    else:
        batches = [function(job) for job in jobs]
    return [row for batch in batches for row in batch]


def _sorted_frame(rows: List[Dict[str, Any]], columns: List[str], keys: List[str],
                  order: Dict[str, int]) -> pd.DataFrame:
    data = pd.DataFrame(rows, columns=columns)
    if data.empty:
        return data
    rank_column = '_rank'
    rank_source = results.TEST_COLUMN if results.TEST_COLUMN in keys else results.CRITERION_COLUMN
    data[rank_column] = data[rank_source].map(order)
    sort_keys = [rank_column if key == rank_source else key for key in keys]
    data = data.sort_values(sort_keys, kind='mergesort').drop(columns=rank_column)
    return data.reset_index(drop=True)


def simulate_plan(plan: ExperimentPlan, scenario: Optional[Scenario] = None) -> pd.DataFrame:
    """Raw per-rep decisions for every grid cell and test of a plan."""
    scenario = scenario if scenario is not None else make_scenario(plan)
    jobs = [Job(plan, scenario, i_n, rep) for i_n in range(len(plan.n_train)) for rep in range(plan.reps)]
    logger.info(f'Running {len(jobs)} jobs over {len(plan.theta)} thetas and tests {list(plan.tests)} '
                f'with {plan.workers} worker(s).')
    rows = _execute(run_job, jobs, plan.workers)
    order = {test: i for i, test in enumerate(plan.tests)}
    keys = [results.N_TRAIN_COLUMN, results.THETA_COLUMN, results.TEST_COLUMN, results.REP_COLUMN]
    return _sorted_frame(rows, results.RAW_COLUMNS, keys, order)


def run_plan(plan: ExperimentPlan) -> pd.DataFrame:
    """Power curve of a plan: rejection rates per (n_train, theta, test)."""
    return process_results.make_power_curve(simulate_plan(plan))


###############################
# Partition quality by signal #
###############################

class SignalJob(NamedTuple):
    plan: ExperimentPlan
    scenario: Scenario
    n_index: int
    rep: int
    criteria: Tuple[str, ...]


def run_signal_job(job: SignalJob) -> List[Dict[str, Any]]:
    """Fits one partition per criterion on the same training draw."""
    plan = job.plan
    n_train = plan.n_train[job.n_index]
    stream = (plan.seed, job.n_index, job.rep)
    _, _, n = sample_sizes(n_train, plan.frac_n0, plan.frac_test)
    rows = []
    try:
        ds = simulate_dataset(job.scenario.f0_train, job.scenario.f1, n_train, frac_n0=plan.frac_n0,
                              seed=derive_seed(*stream, TRAIN_STREAM))
    except DensityRatioTestError as e:
        ds, draw_error = None, e
    for criterion in job.criteria:
        row = {
            results.N_TRAIN_COLUMN: n_train,
            results.REP_COLUMN: job.rep,
            results.CRITERION_COLUMN: criterion,
            results.SIGMA2_HAT_COLUMN: np.nan,
            results.K_STAR_COLUMN: np.nan,
            results.FAILED_COLUMN: False,
            results.ERROR_COLUMN: '',
        }
        try:
            if ds is None:
                raise draw_error
            fit = fit_drop(ds, n, plan.alpha, plan.K_max, criterion, plan.selection, plan.frac_part,
                           seed=derive_seed(*stream, SPLIT_STREAM), min_K=min_size(plan, n_train))
            row[results.SIGMA2_HAT_COLUMN] = fit.histogram.sigma2_hat
            row[results.K_STAR_COLUMN] = fit.K_star
        except DensityRatioTestError as e:
            row[results.FAILED_COLUMN] = True
            row[results.ERROR_COLUMN] = f'{type(e).__name__}: {e}'
        rows.append(row)
    return rows


def simulate_signal(plan: ExperimentPlan, criteria: Sequence[str] = CRITERIA) -> pd.DataFrame:
    scenario = make_scenario(plan)
    criteria = tuple(criteria)
    jobs = [SignalJob(plan, scenario, i_n, rep, criteria)
            for i_n in range(len(plan.n_train)) for rep in range(plan.reps)]
    logger.info(f'Fitting {len(jobs) * len(criteria)} partitions for criteria {list(criteria)}.')
    rows = _execute(run_signal_job, jobs, plan.workers)
    order = {criterion: i for i, criterion in enumerate(criteria)}
    keys = [results.N_TRAIN_COLUMN, results.CRITERION_COLUMN, results.REP_COLUMN]
    return _sorted_frame(rows, results.SIGNAL_RAW_COLUMNS, keys, order)


def signal_curve(plan: ExperimentPlan, criteria: Sequence[str] = CRITERIA) -> pd.DataFrame:
    """Median est-sample signal at the selected size, per training size and split criterion."""
    return process_results.make_signal_curve(simulate_signal(plan, criteria))


##############
# Robustness #
##############

def robustness_mixture_study(weights: Sequence[float] = settings.ROBUSTNESS_WEIGHTS,
                             directions: Sequence[str] = tuple(settings.SHIFT_DIRECTION),
                             theta: float = settings.ROBUSTNESS_THETA,
                             plan: Optional[ExperimentPlan] = None) -> pd.DataFrame:
    """Rejection rates under a reference mixture that shifts between phases.

    Every (direction, weight) pair runs the plan's training sizes and reps
    at ``theta = 0`` and ``theta``, with the plan's setting replaced by the
    mixture model.

    Parameters
    ----------
    weights
        Weights of ``g_a`` in the shifted reference mixture.
    directions
        Which phase sees the shifted mixture.
    theta
        Contamination fraction of the alternative.
    plan
        Sizes, reps, tests and tuning; its setting and theta grid are
        ignored.

    """
    plan = plan if plan is not None else ExperimentPlan()
    if not 0 <= theta <= 1:
        raise PlanError(f'theta must lie in [0, 1], got {theta}.')
    plan = plan.replace(theta=(0.0, float(theta)) if theta > 0 else (0.0,))
    if not weights or not directions:
        raise PlanError('The robustness study needs at least one weight and one direction.')

    frames = []
    for direction in directions:
        for weight in weights:
            scenario = robustness_scenario(float(weight), direction)
            logger.info(f'Robustness cell: direction={direction}, pi={weight:g}.')
            raw = simulate_plan(plan, scenario)
            raw.insert(0, results.WEIGHT_COLUMN, float(weight))
            raw.insert(0, results.DIRECTION_COLUMN, direction)
            frames.append(raw)
    raw = pd.concat(frames, ignore_index=True)
    return process_results.make_power_curve(raw, by=results.ROBUSTNESS_KEYS)

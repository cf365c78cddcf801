from pathlib import Path

import density_ratio_test

BASE_DIR = Path(density_ratio_test.__file__).resolve().parent

PLAN_SPEC_DIR = BASE_DIR / 'plan_specifications'
POWER_CURVE_PLAN = PLAN_SPEC_DIR / 'power_curve.yaml'
SIGNAL_CURVE_PLAN = PLAN_SPEC_DIR / 'signal_curve.yaml'
ROBUSTNESS_PLAN = PLAN_SPEC_DIR / 'robustness.yaml'

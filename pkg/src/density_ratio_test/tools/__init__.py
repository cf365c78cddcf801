from .app_logging import add_logging_sink, configure_logging_to_terminal
from .make_reports import bedrt_report, edrt_report, fit_partition, load_inputs, mmd_report, simulate_data
from .make_results import build_power_curve, build_robustness, build_signal_curve, build_slope

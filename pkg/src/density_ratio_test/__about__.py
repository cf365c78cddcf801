__all__ = [
    "__title__", "__summary__", "__uri__", "__version__", "__author__",
    "__email__", "__license__", "__copyright__",
]

__title__ = "density_ratio_test"
__summary__ = "Supervised contamination detection with density-ratio oriented partitions."
__uri__ = ""

__version__ = "0.1.0"

__author__ = "The density_ratio_test developers"
__email__ = ""

__license__ = "GNU GPLv3"
__copyright__ = f"Copyright 2026 {__author__}"

"""Panel econometrics toolkit.

Institutional clustering of country panels, fixed-effects panel EGLS with
cross-section weights and White cross-section covariance, a 12-test panel
unit-root battery, and a residual diagnostic suite.
"""

__version__ = "0.1.0"

JSON_SCHEMA_VERSION = 1

"""
Hawkes/INAR estimator - nonparametric estimation of multivariate Hawkes processes.

Bins event streams, fits the approximating INAR(p) model by conditional least squares
and reports excitement/baseline estimates with confidence intervals, support and
bin-size selection and time-change diagnostics.
"""

__version__ = "1.0.0"

"""Residual-life estimation with feed-forward and kernel regression networks.

The package covers dataset I/O, Weibull reliability fitting, multilayer
perceptrons trained by gradient descent or Levenberg-Marquardt (optionally
with Bayesian regularization), general regression networks, covariate
construction, evaluation protocols, seeded simulators and a command-line
front end.
"""

__version__ = "0.1.0"

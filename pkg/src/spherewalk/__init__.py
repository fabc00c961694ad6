"""Random walks on PSL(2,C), hyperbolic Brownian motion, the
Furstenberg-Lyons-Sullivan discretization, and Monte Carlo experiments
on developing maps of complex projective structures."""

__version__ = "0.1.0"

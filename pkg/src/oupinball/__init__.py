"""Numerical toolkit for Poincare constants of Gaussian measures restricted
to a punctured domain (plane or space minus a hard obstacle).

Three independent routes to the constant are provided and cross-checked:

* a catalogue of closed-form upper and lower bounds (:mod:`.bounds`,
  :mod:`.isoperimetry`),
* a finite-volume spectral estimator of the true gap (:mod:`.spectral`),
* Monte Carlo of the reflected mean-reverting diffusion, including
  first-passage statistics tied to the constant (:mod:`.simulate`,
  :mod:`.special_functions`).
"""

from .geometry import (Ball, DomainSpec, Hypercube, Shell, Trap, contains,
                       inward_normal, project_to_domain, rescale_to_unit_lambda,
                       signed_distance)
from .reporting import BoundCatalogue, BoundReport
from .bounds import aggregate
from .spectral import poincare_estimate, radial_gap_oracle

__version__ = "0.1.0"

__all__ = [
    "Ball", "Hypercube", "Shell", "Trap", "DomainSpec",
    "contains", "signed_distance", "project_to_domain", "inward_normal",
    "rescale_to_unit_lambda",
    "BoundReport", "BoundCatalogue", "aggregate",
    "poincare_estimate", "radial_gap_oracle",
    "__version__",
]

"""Analytics for one-part alkali-activated slag binders.

Subpackages map onto the lab workflow: raw-material chemistry
(:mod:`aabinder.materials`), activator dosing and costing
(:mod:`aabinder.mixdesign`), flow-curve fitting (:mod:`aabinder.rheology`),
thermogravimetric bound-water analysis (:mod:`aabinder.thermo`), EDS and
strength bookkeeping (:mod:`aabinder.microanalysis`) and batch reporting
(:mod:`aabinder.report`).
"""

__version__ = "0.1.0"

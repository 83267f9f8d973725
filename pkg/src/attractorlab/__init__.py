"""Numerical laboratory for a 5-dimensional singular-hyperbolic attractor.

Subpackages build the construction bottom-up: a volume-expanding torus
endomorphism (`torus`), the solenoid skew product over it (`solenoid`),
the punctured section return map with its blow-up (`blowup`), internal
radius growth and transitivity machinery (`regiongrow`), the suspension
flow with the inserted singularity (`flow`), cross-cutting certificates
(`certify`), and configuration/CLI plumbing (`config`, `cli`).
"""

__version__ = "0.1.0"

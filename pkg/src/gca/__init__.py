"""KMS weights, conformal measures and factor types for graph C*-algebras
with a generalized gauge action."""

__version__ = "0.1.0"

"""Secret-key agreement on orthogonal directions over GF(2^n): fields, geometry,
spectral certificates, exact entropy audits and protocol simulation."""

__version__ = "0.1.0"

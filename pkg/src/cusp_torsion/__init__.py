"""Torsion of manifolds with cusps: combinatorial torsion, closed-form
analytic-torsion corrections and spectral simulations that check them."""
from . import chain_torsion, model_formulas, numerics, simplicial, spectral_sim

__version__ = "0.1.0"
__all__ = ["chain_torsion", "model_formulas", "numerics", "simplicial", "spectral_sim"]

from .particle_gibbs import particle_gibbs, update_rho_conjugate
from .pmmh import ParticleLikelihood, pmmh
from .tuning import TuningResult, tune_proposal

__all__ = [
    "ParticleLikelihood",
    "TuningResult",
    "particle_gibbs",
    "pmmh",
    "tune_proposal",
    "update_rho_conjugate",
]

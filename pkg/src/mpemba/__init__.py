"""Quantum Mpemba effect in Markovian open systems: models, figures of merit,
spectral partner states, quantum trajectories and a Gaussian bath model."""
from . import collective, gauss, lindblad, merit, partner, qops, spectral, unravel
from .errors import MpembaError
from .lindblad import LindbladModel, collective_model, davies_qubit, evolve
from .merit import MeritCurve, crossing_time, f_neq, trace_distance
from .partner import MpembaPartner, construct_partner, verify_mpemba
from .spectral import SpectralData, decompose

__version__ = "0.1.0"

__all__ = [
    "LindbladModel", "MeritCurve", "MpembaError", "MpembaPartner", "SpectralData",
    "collective", "collective_model", "construct_partner", "crossing_time", "davies_qubit",
    "decompose", "evolve", "f_neq", "gauss", "lindblad", "merit", "partner", "qops",
    "spectral", "trace_distance", "unravel", "verify_mpemba",
]

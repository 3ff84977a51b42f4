from .base import Backend, BackendDescriptor, StyleDistribution, TokenSequence
from .reference import ReferenceBackend, make_reference_backend

__all__ = [
    "Backend",
    "BackendDescriptor",
    "StyleDistribution",
    "TokenSequence",
    "ReferenceBackend",
    "make_reference_backend",
]

"""pulseforge: optimization of multi-pulse quantum-dot excitation protocols
coupled to a phonon bath, with exact adjoint gradients through a cached
process-tensor contraction."""

__version__ = "0.1.0"

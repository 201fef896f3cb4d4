"""Target speech extraction with a clean-prediction diffusion sampler."""

__version__ = "0.1.0"

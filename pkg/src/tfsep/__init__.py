"""Oracle binary-mask source separation across STFT window sizes."""

__version__ = "0.1.0"

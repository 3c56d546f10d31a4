"""faceveil: facial video de-identification with evaluation harnesses."""

__version__ = "0.1.0"

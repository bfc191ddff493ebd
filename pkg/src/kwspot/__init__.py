"""Keyword-spotting data preparation toolkit: continuous speech synthesis, MFCC features,
augmentation, sliding-window cleaning, compound scaling search and EfficientNet-A0 accounting."""

__version__ = "0.1.0"

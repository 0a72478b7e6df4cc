"""tovqa: retrainable full-reference video quality assessment for
teleoperation.

Perceptual features (multi-scale VIF, wavelet detail loss, motion) are fused
by an epsilon-SVR trained on subjective ratings; the package also runs the
subjective-study backend and its statistical validation battery.
"""

__version__ = "0.1.0"

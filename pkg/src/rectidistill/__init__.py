"""Bias-rectified knowledge distillation, desk-scale.

Subpackages:

* ``numerics``  -- stable softmax / KL / CE primitives and their gradients
* ``partition`` -- right-vs-bias batch split via the teacher mask
* ``rectify``   -- two-step rectification of biased teacher targets
* ``schedule``  -- dynamic easy/hard loss weighting (gamma = e/E)
* ``model``     -- minimal MLPs, SGD, checkpoints
* ``data``      -- blob datasets, CSV I/O, deterministic batching
* ``analysis``  -- two-class closed-form / descent verification
* ``train``     -- teacher training and distillation loops
* ``cli``       -- experiment driver (``rectidistill`` entry point)
"""

__all__ = [
    "analysis",
    "cli",
    "data",
    "errors",
    "model",
    "numerics",
    "partition",
    "rectify",
    "rng",
    "schedule",
    "train",
]

__version__ = "0.1.0"

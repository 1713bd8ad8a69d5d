"""percomp: a desk-scale perspective-composition toolkit.

Synthesizes optimal-to-suboptimal camera sequences and reverses them into
training data, scores and grades them through a quality gate, fits a
pairwise-preference reward model with ties from human judgments, computes the
preference (DPO) loss on rectified-flow velocity fields, and evaluates
sequences with PSNR / SSIM / camera-motion-matching metrics.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    aesthetics,
    config,
    flowdpo,
    frame,
    geometry,
    metrics,
    pipeline,
    preference,
    scenegen,
    trajgen,
)

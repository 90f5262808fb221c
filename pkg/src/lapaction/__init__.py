"""Action recognition for laparoscopic surgery video.

Clip extraction from temporal annotations, augmentation-based class
balancing, segment-random frame sampling, a CNN-backbone + stacked-recurrent
classifier family, one-vs-rest binary training, and evaluation/reporting.
"""

__version__ = "0.1.0"

from .actions import TARGET_ACTIONS, ActionLabel

__all__ = ["ActionLabel", "TARGET_ACTIONS", "__version__"]

"""Training side of the barkaec postfilter.

Standalone torch implementation of the engine's forward path (Bark
pooling, log features, FC/GRU mask network, mask un-mapping, masking,
synthesis, consistency re-analysis) plus the CCMSE loss, an Adam
training loop with a plateau learning-rate schedule, and export in the
engine's weights file format.

The engine itself is only touched through its external interfaces:
scenario bundle directories, the ``barkaec`` CLI (to produce the
canceller error signal) and the weights file format.
"""

__version__ = "0.1.0"

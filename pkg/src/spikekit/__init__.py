"""spikekit: spike camera simulation, spike stream codecs, and image
reconstruction via classic estimators and a windowed-attention network."""

__version__ = "0.1.0"

"""Time-domain audio-visual speech enhancement.

A noisy waveform and a synchronized stream of mouth-region frames go in;
an enhanced waveform comes out.  The package bundles the network and its
numerics, scene synthesis and mixing, intelligibility and distortion
metrics, a training loop, and a command-line front end.
"""

__version__ = "0.1.0"

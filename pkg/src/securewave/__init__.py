"""Anti-intercept OFDM waveform design: secure coding, power bisection and experiments."""

__version__ = "0.1.0"

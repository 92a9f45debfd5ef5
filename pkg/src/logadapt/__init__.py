"""Cross-system log anomaly detection with few-shot LSTM adaptation."""

__version__ = "0.1.0"

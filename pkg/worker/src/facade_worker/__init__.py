"""Training worker for the cadastre classifier bundle protocol.

Reads `<bundle>/config.json`, `train_manifest.csv`, `test_manifest.csv`,
trains a small CNN at the configured resolution, and writes
`<bundle>/predictions.csv` with softmax scores in schema label order.
Exit codes: 0 success, 2 unusable config or usage error, 3 malformed
manifest, 1 anything else. Every failure also lands in
`<bundle>/diagnostics.txt`.
"""

from .bundle import Bundle, BundleError, load_bundle
from .model import predict, train

__all__ = ["Bundle", "BundleError", "load_bundle", "train", "predict"]

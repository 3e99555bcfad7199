"""Process entry point: facade-worker <bundle_dir>."""

from __future__ import annotations

import sys
import traceback
from pathlib import Path

from .bundle import BundleError, load_bundle
from .model import TrainingFailure, predict, train, write_predictions

USAGE_EXIT = 2


def _fail(bundle_dir: Path | None, message: str, code: int) -> int:
    print(message, file=sys.stderr)
    if bundle_dir is not None and bundle_dir.is_dir():
        (bundle_dir / "diagnostics.txt").write_text(message + "\n",
                                                    encoding="utf-8")
    return code


def main(argv: list[str]) -> int:
    if len(argv) != 1:
        return _fail(None, "usage: facade-worker <bundle_dir>", USAGE_EXIT)
    bundle_dir = Path(argv[0])
    try:
        bundle = load_bundle(bundle_dir)
        model = train(bundle)
        rows = predict(model, bundle)
        write_predictions(rows, bundle.labels,
                          bundle.root / "predictions.csv")
    except BundleError as exc:
        return _fail(bundle_dir, str(exc), exc.exit_code)
    except TrainingFailure as exc:
        return _fail(bundle_dir, str(exc), 1)
    except Exception:
        return _fail(bundle_dir, traceback.format_exc(), 1)
    print(f"wrote {len(rows)} predictions to "
          f"{bundle.root / 'predictions.csv'}")
    return 0


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()

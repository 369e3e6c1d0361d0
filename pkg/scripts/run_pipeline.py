# scripts/run_pipeline.py

"""Entry point: python scripts/run_pipeline.py <subcommand> ..."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.pipeline.cli import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())

"""
Entry point for the manifold kNN experiment harness
"""

import sys

from dotenv import load_dotenv

# Load environment variables from .env file before settings are read
load_dotenv()

from app.cli import main  # noqa: E402
from app.core.logging import setup_logging  # noqa: E402


def run():
    """Console-script entry: configure logging and exit with the command's code"""
    setup_logging()
    sys.exit(main())


if __name__ == "__main__":
    run()

#!/usr/bin/env python3
import sys

from src.harness.cli import main
from src.harness.server import create_app

# uvicorn main:web
web = create_app()


if __name__ == "__main__":
    sys.exit(main())

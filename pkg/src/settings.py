#!/usr/bin/env python3
from typing import Tuple

from decouple import config

CATALOG_PATH: str = str(config("GTOC_CATALOG_PATH", default="data/GTOC12_Asteroids_Data.txt"))
BIND: str = str(config("GTOC_BIND", default="127.0.0.1:5000"))
WORKERS: int = config("GTOC_WORKERS", default=4, cast=int)
LOG_DIR: str = str(config("GTOC_LOG_DIR", default="logs"))
LOG_LEVEL: str = str(config("GTOC_LOG_LEVEL", default="INFO"))


def split_bind(bind: str) -> Tuple[str, int]:
    """'host:port' -> (host, port)"""
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"Bind address must look like host:port, got {bind!r}")
    return host, int(port)

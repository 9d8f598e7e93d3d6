"""Fixture server that accepts input but never answers, for timeout tests."""

import sys
import time

for _ in sys.stdin:
    time.sleep(60)

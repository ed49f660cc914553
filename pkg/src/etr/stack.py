"""Run deeply recursive work on a thread with a large C stack.

The checker and evaluator recurse over the program; the main thread's
default stack is too small for the recursion limit they need."""

from __future__ import annotations

import sys
import threading

STACK_BYTES = 512 * 1024 * 1024
RECURSION_LIMIT = 100_000


def run_deep(fn, *args, **kwargs):
    """``fn(*args, **kwargs)`` on a big-stack thread; exceptions propagate."""
    box: dict = {}

    def target():
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as err:  # re-raised on the calling thread
            box["error"] = err

    old_size = threading.stack_size(STACK_BYTES)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, RECURSION_LIMIT))
    try:
        t = threading.Thread(target=target, name="etr-deep")
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box.get("value")

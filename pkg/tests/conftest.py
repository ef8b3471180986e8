import os

import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("COUPLED_EQ_EXTENDED") == "1":
        return
    skip = pytest.mark.skip(reason="set COUPLED_EQ_EXTENDED=1 to run")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)

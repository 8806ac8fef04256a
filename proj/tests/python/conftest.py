import importlib
import os
import sys

import pytest


@pytest.fixture(scope="session")
def core():
    """The compiled extension module, located via LEXHMM_MODULE_DIR."""
    module_dir = os.environ.get("LEXHMM_MODULE_DIR")
    if module_dir:
        sys.path.insert(0, module_dir)
    try:
        return importlib.import_module("_core")
    except ImportError:
        return importlib.import_module("lexhmm")


@pytest.fixture(scope="session")
def cli_path():
    path = os.environ.get("LEXHMM_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("LEXHMM_CLI not set")
    return path

import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--full-scale",
        action="store_true",
        default=False,
        help="run the full-size reference reproductions (slow, lots of memory)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full-scale"):
        return
    skip = pytest.mark.skip(reason="needs --full-scale")
    for item in items:
        if "full_scale" in item.keywords:
            item.add_marker(skip)

import pytest

from holoproxy import reducer


@pytest.fixture(autouse=True)
def _coherence_checks():
    # Re-derive projection/summary after every reduce in tests.
    reducer.set_coherence_checks(True)
    yield
    reducer.set_coherence_checks(False)

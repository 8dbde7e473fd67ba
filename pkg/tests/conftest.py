import pytest

import helpers


@pytest.fixture
def sentiment():
    return helpers.sentiment_task()


@pytest.fixture
def nli():
    return helpers.nli_task()

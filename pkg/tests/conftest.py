"""Shared fixtures.

The expensive objects (explored state spaces of the shop model and its
translation) are session-scoped so the audit-style tests can walk the
same graph instead of rebuilding it per test.
"""

import pytest

from dbnet.corpus import (
    build_domviol,
    build_empty,
    build_fk,
    build_guarded,
    build_selfref,
    build_shopping_cart,
    build_touch,
)
from dbnet.cpn import cpn_build_lts
from dbnet.freshness import FreshPolicy
from dbnet.model import build_lts
from dbnet.translate import translate

BOUNDED1 = FreshPolicy.parse("bounded:1")
RECYCLING = FreshPolicy.parse("recycling")


@pytest.fixture(scope="session")
def shop():
    return build_shopping_cart(1, 1)


@pytest.fixture(scope="session")
def shop22():
    return build_shopping_cart(2, 2)


@pytest.fixture(scope="session")
def touch():
    return build_touch()


@pytest.fixture(scope="session")
def guarded():
    return build_guarded()


@pytest.fixture(scope="session")
def domviol():
    return build_domviol()


@pytest.fixture(scope="session")
def fk_net():
    return build_fk()


@pytest.fixture(scope="session")
def selfref():
    return build_selfref()


@pytest.fixture(scope="session")
def empty_net():
    return build_empty()


@pytest.fixture(scope="session")
def shop_lts(shop):
    return build_lts(shop, BOUNDED1, max_states=100_000)


@pytest.fixture(scope="session")
def shop_translation(shop):
    return translate(shop)


@pytest.fixture(scope="session")
def shop_cpn_lts(shop_translation):
    return cpn_build_lts(shop_translation.net, BOUNDED1, max_states=200_000)

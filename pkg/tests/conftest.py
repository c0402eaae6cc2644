import pytest

from fieldlog.lexicon import load_lexicon
from fieldlog.model import Role, SensorKind, SensorStream, User, Zone
from fieldlog.store import Store


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "fieldlog.db")
    yield s
    s.close()


@pytest.fixture
def seeded_store(store):
    """Store with a couple of users, zones (beacons + geofences) and streams."""
    store.put_user(User(id="u1", display_name="Owner", role=Role.OWNER))
    store.put_user(User(id="u2", display_name="Worker", role=Role.WORKER))
    store.put_user(User(id="u3", display_name="Advisor", role=Role.ADVISOR))
    store.put_zone(
        Zone(
            id="house2",
            name="House #2",
            geofence=[(43.00, 141.00), (43.00, 141.01), (43.01, 141.01), (43.01, 141.00)],
            beacon_ids={"bcn-2"},
        )
    )
    store.put_zone(
        Zone(
            id="house4",
            name="House #4",
            geofence=[(43.02, 141.00), (43.02, 141.01), (43.03, 141.01), (43.03, 141.00)],
            beacon_ids={"bcn-4"},
        )
    )
    store.put_stream(SensorStream(id="co2-h4", kind=SensorKind.CO2, zone_id="house4"))
    store.put_stream(SensorStream(id="temp-h4", kind=SensorKind.TEMPERATURE, zone_id="house4"))
    store.put_stream(SensorStream(id="co2-h2", kind=SensorKind.CO2, zone_id="house2"))
    return store

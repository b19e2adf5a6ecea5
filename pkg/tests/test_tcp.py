"""Wire protocol contract plus the in-process/TCP differential."""

import json
import random
import threading

import pytest

from proxileak.geo import GeoPoint
from proxileak.service import (AuthError, NotFoundError, ProximityService,
                               RateError)
from proxileak.tcp import ServiceClient, ServiceServer, WireHandler, entry_to_wire
from proxileak.world import DisclosurePolicy, generate_population


def make_service(n=15, seed=2, policy=None):
    world = generate_population(n, 100, 1.0, seed=seed, mean_likes=3.0)
    return world, ProximityService(world, policy or DisclosurePolicy())


@pytest.fixture
def server():
    _, svc = make_service()
    srv = ServiceServer(svc)
    thread = threading.Thread(target=lambda: srv.serve_forever(poll_interval=0.02),
                              daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def test_login_nearby_round_trip(server):
    world = server.service.world
    uid = sorted(world.users)[0]
    with ServiceClient("127.0.0.1", server.port) as c:
        assert c.login(uid) == {"ok": True, "user_id": uid}
        resp = c.nearby(1e6)
        assert resp["ok"] is True
        assert len(resp["entries"]) == len(world.users) - 1
        target = resp["entries"][0]["user_id"]
        prof = c.profile(target)
        assert prof["ok"] is True and prof["entry"]["user_id"] == target


def test_malformed_line_keeps_connection(server):
    uid = sorted(server.service.world.users)[0]
    with ServiceClient("127.0.0.1", server.port) as c:
        c.send_raw("this is not json")
        assert c.read_response() == {"ok": False, "error": "bad_request"}
        # connection still usable
        assert c.login(uid)["ok"] is True


def test_error_codes(server):
    with ServiceClient("127.0.0.1", server.port) as c:
        assert c.nearby(100)["error"] == "auth"  # before login
        assert c.login("ghost") == {"ok": False, "error": "auth"}
        uid = sorted(server.service.world.users)[0]
        c.login(uid)
        assert c.profile("ghost")["error"] == "not_found"
        assert c.request({"op": "nope"})["error"] == "bad_request"
        assert c.request({"op": "nearby"})["error"] == "bad_request"
        assert c.request({"op": "update_location", "lat": 95.0, "lon": 0.0}
                         )["error"] == "bad_request"
        assert c.request({"op": "login"})["error"] == "bad_request"


def test_unknown_fields_ignored(server):
    uid = sorted(server.service.world.users)[0]
    with ServiceClient("127.0.0.1", server.port) as c:
        resp = c.request({"op": "login", "token": uid, "shoe_size": 44})
        assert resp["ok"] is True


def test_sessions_are_per_connection(server):
    world = server.service.world
    ids = sorted(world.users)
    with ServiceClient("127.0.0.1", server.port) as c1, \
         ServiceClient("127.0.0.1", server.port) as c2:
        c1.login(ids[0])
        c1.nearby(1e6)
        # c2 never discovered anyone: profile must fail there
        c2.login(ids[1])
        assert c2.profile(ids[2])["error"] == "not_found"
        assert c1.profile(ids[2])["ok"] is True


# -- differential: in-process API vs wire ------------------------------------------

def random_requests(rng, ids):
    """A random request sequence mixing valid and invalid calls."""
    seq = [{"op": "login", "token": rng.choice(ids + ["ghost"])}]
    for _ in range(rng.randrange(2, 8)):
        roll = rng.random()
        if roll < 0.3:
            seq.append({"op": "nearby",
                        "radius_m": rng.choice([500.0, 3000.0, 1e6, -1.0])})
        elif roll < 0.55:
            seq.append({"op": "update_location",
                        "lat": 41.35 + rng.random() * 0.1,
                        "lon": 2.10 + rng.random() * 0.15})
        elif roll < 0.8:
            seq.append({"op": "profile", "user_id": rng.choice(ids + ["ghost"])})
        elif roll < 0.9:
            seq.append({"op": "login", "token": rng.choice(ids)})
        else:
            seq.append({"op": rng.choice(["nope", "nearby"])})
    return seq


def reference_responses(service, requests):
    """Drive the Python API directly and re-encode results independently."""
    session = None
    out = []
    for req in requests:
        op = req.get("op")
        try:
            if op == "login":
                token = req.get("token")
                if not isinstance(token, str):
                    out.append({"ok": False, "error": "bad_request"})
                    continue
                session = service.login(token)
                out.append({"ok": True, "user_id": session.user_id})
            elif session is None:
                out.append({"ok": False, "error": "auth"})
            elif op == "nearby":
                r = req.get("radius_m")
                if not isinstance(r, (int, float)) or r <= 0:
                    out.append({"ok": False, "error": "bad_request"})
                    continue
                entries = service.nearby(session, float(r))
                out.append({"ok": True,
                            "entries": [entry_to_wire(e) for e in entries]})
            elif op == "update_location":
                service.update_location(session, GeoPoint(req["lat"], req["lon"]))
                out.append({"ok": True})
            elif op == "profile":
                uid = req.get("user_id")
                if not isinstance(uid, str):
                    out.append({"ok": False, "error": "bad_request"})
                    continue
                out.append({"ok": True,
                            "entry": entry_to_wire(service.profile(session, uid))})
            else:
                out.append({"ok": False, "error": "bad_request"})
        except AuthError:
            out.append({"ok": False, "error": "auth"})
        except NotFoundError:
            out.append({"ok": False, "error": "not_found"})
        except RateError:
            out.append({"ok": False, "error": "rate"})
    return out


def test_differential_wire_vs_inprocess():
    rng = random.Random(31337)
    for trial in range(30):
        # identical twin worlds, one behind TCP, one driven directly
        world_a, svc_a = make_service(seed=trial)
        world_b, svc_b = make_service(seed=trial)
        ids = sorted(world_a.users)
        requests = random_requests(rng, ids)
        expected = reference_responses(svc_a, requests)

        srv = ServiceServer(svc_b)
        thread = threading.Thread(target=lambda: srv.serve_forever(poll_interval=0.02),
                                  daemon=True)
        thread.start()
        try:
            with ServiceClient("127.0.0.1", srv.port) as c:
                got = [c.request(r) for r in requests]
        finally:
            srv.shutdown()
            srv.server_close()
        assert got == expected


def test_handler_without_network():
    # WireHandler is usable directly; malformed JSON handled in place.
    _, svc = make_service()
    h = WireHandler(svc)
    assert h.handle_line("{") == {"ok": False, "error": "bad_request"}
    assert h.handle_line(json.dumps({"op": "nearby", "radius_m": 5}))["error"] == "auth"

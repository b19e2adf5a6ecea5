"""The simulated proximity application.

Sessions query for nearby users and poll individual profiles; every
response is filtered through the active :class:`DisclosurePolicy`, so a
field the policy disables is never present in any response. Distances are
quantized server-side before disclosure. All reads and writes go through
the single :class:`World` owner, so responses are linearizable with
respect to location updates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from datetime import date

from .geo import GeoPoint, haversine_m
from .world import DisclosurePolicy, World, fuzz_birthdate, quantize_distance

__all__ = [
    "NearbyEntry", "Session", "ProximityService",
    "AuthError", "NotFoundError", "RateError",
]


class AuthError(ValueError):
    """Unknown login token."""


class NotFoundError(KeyError):
    """User unknown, or never disclosed to this session."""


class RateError(ValueError):
    """Location update rejected by the teleport limit."""


@dataclass(frozen=True)
class NearbyEntry:
    """One policy-filtered view of another user.

    Optional fields are ``None`` exactly when the active policy disables
    them. ``common_likes`` holds page ids under the ``pages`` interests
    mode and category names under ``categories``.
    """

    user_id: str
    last_active_t: float
    first_name: str | None = None
    distance_m: float | None = None
    fuzzy_birthdate: date | None = None
    common_likes: frozenset[str] | None = None
    social_id: str | None = None


@dataclass
class Session:
    session_id: int
    user_id: str
    discovered: set[str]


class ProximityService:
    """In-process service front end over one world."""

    def __init__(self, world: World, policy: DisclosurePolicy,
                 teleport_limit_m: float = float("inf"),
                 teleport_cooldown_s: float = float("inf"),
                 scenario_seed: int | None = None):
        self.world = world
        self.policy = policy
        self.teleport_limit_m = teleport_limit_m
        self.teleport_cooldown_s = teleport_cooldown_s
        # Birthdate fuzz is stable per scenario; default to the world seed.
        self._fuzz_seed = world.seed if scenario_seed is None else scenario_seed
        self._session_ids = itertools.count(1)
        self._last_move_t: dict[str, float] = {}

    # -- session lifecycle -------------------------------------------------

    def login(self, token: str) -> Session:
        """Tokens are user ids; unknown tokens are rejected."""
        if token not in self.world.users:
            raise AuthError(f"unknown token {token!r}")
        return Session(next(self._session_ids), token, set())

    # -- requests ----------------------------------------------------------

    def update_location(self, session: Session, p: GeoPoint) -> None:
        """Move the caller's service-visible position to ``p``.

        Subject to the teleport limit: a move farther than the limit is
        rejected (leaving the stored position unchanged) unless the
        cooldown has elapsed since the caller's last move.
        """
        uid = session.user_id
        old = self.world.position_of(uid)
        if haversine_m(old, p) > self.teleport_limit_m:
            # Cooldown counts from the last manual move (scenario start if none).
            waited = self.world.now_s - self._last_move_t.get(uid, 0.0)
            if waited < self.teleport_cooldown_s:
                raise RateError(
                    f"move exceeds the {self.teleport_limit_m} m teleport limit")
        self.world.set_override(uid, p)
        self._last_move_t[uid] = self.world.now_s

    def nearby(self, session: Session, radius_m: float) -> list[NearbyEntry]:
        """Everyone within ``radius_m`` of the caller, policy-filtered.

        Ordered by quantized distance, then user id. Returned users become
        discoverable by :meth:`profile` for this session.
        """
        if radius_m <= 0.0:
            raise ValueError("radius_m must be > 0")
        me = self.world.position_of(session.user_id)
        requester = self.world.user(session.user_id)
        hits = []
        for uid, user in self.world.users.items():
            if uid == session.user_id:
                continue
            d = haversine_m(me, self.world.position_of(uid))
            if d <= radius_m:
                hits.append((quantize_distance(d, self.policy.distance_quantum_m),
                             uid, user, d))
        hits.sort(key=lambda h: (h[0], h[1]))
        out = []
        for qd, uid, user, d in hits:
            session.discovered.add(uid)
            out.append(self._render(requester, user, d))
        return out

    def profile(self, session: Session, user_id: str) -> NearbyEntry:
        """Fresh policy-filtered view of a previously discovered user."""
        if user_id not in self.world.users or user_id not in session.discovered:
            raise NotFoundError(user_id)
        me = self.world.position_of(session.user_id)
        target = self.world.user(user_id)
        d = haversine_m(me, self.world.position_of(user_id))
        return self._render(self.world.user(session.user_id), target, d)

    # -- policy application --------------------------------------------------

    def _render(self, requester, target, true_distance_m: float) -> NearbyEntry:
        pol = self.policy
        distance = None
        if pol.share_distance:
            distance = quantize_distance(true_distance_m, pol.distance_quantum_m)
        birthdate = None
        if pol.birthdate_mode == "exact":
            birthdate = target.true_birthdate
        elif pol.birthdate_mode == "fuzzy_15d":
            birthdate = fuzz_birthdate(target.true_birthdate, target.user_id,
                                       self._fuzz_seed)
        common = None
        if pol.interests_mode != "hidden":
            shared = requester.likes & target.likes
            if pol.interests_mode == "pages":
                common = frozenset(shared)
            else:
                common = frozenset(self.world.catalog.category_of(p) for p in shared)
        return NearbyEntry(
            user_id=target.user_id,
            last_active_t=self.world.now_s,
            first_name=target.first_name if pol.share_first_name else None,
            distance_m=distance,
            fuzzy_birthdate=birthdate,
            common_likes=common,
            social_id=target.social_id if pol.share_social_id else None,
        )

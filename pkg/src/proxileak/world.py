"""Synthetic ground truth: users, mobility, likes, and disclosure policy.

Everything here is reproducible from (parameters, seed): population layout,
per-user like sets drawn from a rank-skewed page catalog, birthdate fuzz
offsets, and trajectories. The :class:`World` owns the simulation clock;
services read through it and never mutate ground truth except via the
explicit helpers (``add_likes``).
"""

from __future__ import annotations

import bisect
import hashlib
import math
import random
from dataclasses import dataclass, field, replace
from datetime import date, timedelta

from .geo import EnuPoint, GeoPoint, from_enu, to_enu

__all__ = [
    "SimUser", "Page", "PageCatalog", "DisclosurePolicy", "Trajectory",
    "World", "BoundingBox", "POLICY_PRESETS",
    "generate_population", "fuzz_birthdate", "quantize_distance",
    "derive_seed", "stationary_trajectory", "commuter_trajectory",
    "random_walk_trajectory",
]

# Common first names; enough repetition at population scale that a name
# alone rarely identifies anyone.
FIRST_NAMES = (
    "Alba", "Alex", "Alice", "Ana", "Andrea", "Anna", "Antonio", "Ben",
    "Carla", "Carlos", "Carmen", "Clara", "Daniel", "David", "Diego",
    "Elena", "Emma", "Eric", "Eva", "Gabriel", "Helena", "Hugo", "Ines",
    "Irene", "Ivan", "Jan", "Javier", "Joan", "Jordi", "Jorge", "Jose",
    "Juan", "Julia", "Laia", "Lara", "Laura", "Leo", "Lucas", "Lucia",
    "Luis", "Manuel", "Marc", "Maria", "Marina", "Mario", "Marta",
    "Martin", "Miguel", "Nerea", "Nicolas", "Noa", "Nora", "Nuria",
    "Olivia", "Oscar", "Pablo", "Paula", "Pedro", "Pol", "Raul", "Rocio",
    "Ruben", "Sara", "Sergio", "Silvia", "Sofia", "Teresa", "Valeria",
    "Vera", "Victor",
)

BIRTH_RANGE = (date(1965, 1, 1), date(2004, 12, 31))

FUZZ_WINDOW_DAYS = 7  # offsets drawn uniformly from {-7, ..., +7}

MAX_LIKES_PER_USER = 64


def derive_seed(master: int, *labels) -> int:
    """Stable 64-bit sub-seed for a labelled purpose under one master seed."""
    h = hashlib.sha256(repr((master,) + labels).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def quantize_distance(true_m: float, quantum_m: float) -> float:
    """Floor ``true_m`` to a multiple of ``quantum_m`` (0 disables)."""
    if true_m < 0.0:
        raise ValueError(f"distance must be >= 0: {true_m!r}")
    if quantum_m < 0.0:
        raise ValueError(f"quantum must be >= 0: {quantum_m!r}")
    if quantum_m == 0.0:
        return true_m
    return math.floor(true_m / quantum_m) * quantum_m


def fuzz_birthdate(true_date: date, user_id: str, seed: int) -> date:
    """True date shifted by a per-(user, seed) offset in [-7, +7] days.

    The offset is drawn once per (user_id, seed), so repeated queries within
    a scenario always see the same fuzzy date.
    """
    rng = random.Random(derive_seed(seed, "birthdate", user_id))
    return true_date + timedelta(days=rng.randint(-FUZZ_WINDOW_DAYS, FUZZ_WINDOW_DAYS))


@dataclass(frozen=True)
class BoundingBox:
    lat_min: float
    lon_min: float
    lat_max: float
    lon_max: float

    def __post_init__(self) -> None:
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ValueError("bounding box must have positive extent")

    @property
    def center(self) -> GeoPoint:
        return GeoPoint((self.lat_min + self.lat_max) / 2.0,
                        (self.lon_min + self.lon_max) / 2.0)

    def sample(self, rng: random.Random) -> GeoPoint:
        return GeoPoint(rng.uniform(self.lat_min, self.lat_max),
                        rng.uniform(self.lon_min, self.lon_max))

    def clamp(self, p: GeoPoint) -> GeoPoint:
        return GeoPoint(min(max(p.lat_deg, self.lat_min), self.lat_max),
                        min(max(p.lon_deg, self.lon_min), self.lon_max))


# Barcelona-ish default extent, a few km across.
DEFAULT_BBOX = BoundingBox(41.35, 2.10, 41.45, 2.25)


@dataclass(frozen=True)
class Page:
    page_id: str
    category: str
    popularity_rank: int  # 1 = most popular


class PageCatalog:
    """Ranked page catalog; rank r carries sampling weight r**-s."""

    def __init__(self, pages: list[Page]):
        ranks = sorted(p.popularity_rank for p in pages)
        if ranks != list(range(1, len(pages) + 1)):
            raise ValueError("page ranks must be exactly 1..P with no gaps")
        self.pages = sorted(pages, key=lambda p: p.popularity_rank)
        self._by_id = {p.page_id: p for p in self.pages}
        if len(self._by_id) != len(self.pages):
            raise ValueError("duplicate page ids in catalog")

    def __len__(self) -> int:
        return len(self.pages)

    def __contains__(self, page_id: str) -> bool:
        return page_id in self._by_id

    def category_of(self, page_id: str) -> str:
        return self._by_id[page_id].category

    def top(self, n: int) -> list[str]:
        return [p.page_id for p in self.pages[:n]]

    def sample_likes(self, count: int, zipf_s: float, rng: random.Random) -> set[str]:
        """``count`` distinct pages, rank-weighted by rank**-zipf_s."""
        count = min(count, len(self.pages))
        cum = getattr(self, "_cum_cache", None)
        if cum is None or self._cum_s != zipf_s:
            total = 0.0
            cum = []
            for r in range(1, len(self.pages) + 1):
                total += r ** (-zipf_s)
                cum.append(total)
            self._cum_cache = cum
            self._cum_s = zipf_s
        chosen: set[str] = set()
        while len(chosen) < count:
            u = rng.random() * cum[-1]
            idx = bisect.bisect_left(cum, u)
            chosen.add(self.pages[min(idx, len(self.pages) - 1)].page_id)
        return chosen


def make_catalog(catalog_size: int, n_categories: int, seed: int) -> PageCatalog:
    rng = random.Random(derive_seed(seed, "catalog"))
    cats = [f"cat{c:03d}" for c in range(n_categories)]
    pages = [Page(f"pg{r:05d}", rng.choice(cats), r)
             for r in range(1, catalog_size + 1)]
    return PageCatalog(pages)


class TrajectoryRangeError(ValueError):
    """Queried time outside the trajectory's span."""


class Trajectory:
    """Time-ordered waypoints, piecewise-linear in the local plane."""

    def __init__(self, waypoints: list[tuple[float, GeoPoint]]):
        if not waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        times = [t for t, _ in waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint timestamps must be strictly increasing")
        self.waypoints = list(waypoints)
        self._times = times

    @property
    def span(self) -> tuple[float, float]:
        return self._times[0], self._times[-1]

    def position_at(self, t: float) -> GeoPoint:
        t0, t1 = self.span
        if not (t0 <= t <= t1):
            raise TrajectoryRangeError(
                f"t={t!r} outside trajectory span [{t0!r}, {t1!r}]")
        i = bisect.bisect_right(self._times, t) - 1
        if i >= len(self.waypoints) - 1:
            return self.waypoints[-1][1]
        ta, pa = self.waypoints[i]
        tb, pb = self.waypoints[i + 1]
        if t == ta:
            return pa
        frac = (t - ta) / (tb - ta)
        leg = to_enu(pb, pa)
        return from_enu(EnuPoint(frac * leg.x_m, frac * leg.y_m, pa))


def stationary_trajectory(p: GeoPoint, duration_s: float) -> Trajectory:
    return Trajectory([(0.0, p), (duration_s, p)])


def commuter_trajectory(home: GeoPoint, work: GeoPoint, dwell_home_s: float,
                        travel_s: float, dwell_work_s: float) -> Trajectory:
    """Dwell at home, move linearly to work, dwell there."""
    t1 = dwell_home_s
    t2 = t1 + travel_s
    t3 = t2 + dwell_work_s
    return Trajectory([(0.0, home), (t1, home), (t2, work), (t3, work)])


def random_walk_trajectory(start: GeoPoint, step_m: float, interval_s: float,
                           n_steps: int, rng: random.Random,
                           bbox: BoundingBox | None = None) -> Trajectory:
    waypoints = [(0.0, start)]
    p = start
    for k in range(1, n_steps + 1):
        ang = rng.uniform(0.0, 2.0 * math.pi)
        q = from_enu(EnuPoint(step_m * math.cos(ang), step_m * math.sin(ang), p))
        if bbox is not None:
            q = bbox.clamp(q)
        waypoints.append((k * interval_s, q))
        p = q
    return Trajectory(waypoints)


@dataclass
class SimUser:
    user_id: str
    first_name: str
    true_birthdate: date
    trajectory: Trajectory
    likes: set[str]
    social_id: str


@dataclass(frozen=True)
class DisclosurePolicy:
    """What the service reveals about each user, and how precisely."""

    share_distance: bool = True
    distance_quantum_m: float = 100.0
    share_first_name: bool = True
    birthdate_mode: str = "fuzzy_15d"  # exact | fuzzy_15d | hidden
    interests_mode: str = "pages"      # pages | categories | hidden
    share_social_id: bool = False

    def __post_init__(self) -> None:
        if self.birthdate_mode not in ("exact", "fuzzy_15d", "hidden"):
            raise ValueError(f"bad birthdate_mode: {self.birthdate_mode!r}")
        if self.interests_mode not in ("pages", "categories", "hidden"):
            raise ValueError(f"bad interests_mode: {self.interests_mode!r}")
        if self.distance_quantum_m < 0.0:
            raise ValueError("distance_quantum_m must be >= 0")


# Feature matrices of well-known proximity apps, as policy presets. The
# quantization steps are illustrative defaults, not measured app behavior.
POLICY_PRESETS: dict[str, DisclosurePolicy] = {
    "tinder": DisclosurePolicy(share_distance=True, distance_quantum_m=100.0,
                               share_first_name=True, birthdate_mode="fuzzy_15d",
                               interests_mode="pages", share_social_id=False),
    "happn": DisclosurePolicy(share_distance=True, distance_quantum_m=250.0,
                              share_first_name=True, birthdate_mode="hidden",
                              interests_mode="pages", share_social_id=True),
    "lovoo": DisclosurePolicy(share_distance=True, distance_quantum_m=100.0,
                              share_first_name=True, birthdate_mode="hidden",
                              interests_mode="pages", share_social_id=False),
    "grindr": DisclosurePolicy(share_distance=False, distance_quantum_m=0.0,
                               share_first_name=False, birthdate_mode="hidden",
                               interests_mode="pages", share_social_id=False),
    "badoo": DisclosurePolicy(share_distance=True, distance_quantum_m=100.0,
                              share_first_name=True, birthdate_mode="hidden",
                              interests_mode="pages", share_social_id=False),
}


@dataclass
class World:
    """Ground truth plus the single simulation clock that owns it."""

    users: dict[str, SimUser]
    catalog: PageCatalog
    bbox: BoundingBox
    seed: int
    duration_s: float
    now_s: float = 0.0
    _overrides: dict[str, GeoPoint] = field(default_factory=dict)

    @property
    def ref(self) -> GeoPoint:
        return self.bbox.center

    def advance(self, dt_s: float) -> float:
        if dt_s < 0.0:
            raise ValueError("the clock only moves forward")
        self.now_s += dt_s
        return self.now_s

    def user(self, user_id: str) -> SimUser:
        return self.users[user_id]

    def position_of(self, user_id: str, t: float | None = None) -> GeoPoint:
        """Service-visible position: explicit override if set, else trajectory."""
        if user_id in self._overrides:
            return self._overrides[user_id]
        when = self.now_s if t is None else t
        return self.users[user_id].trajectory.position_at(when)

    def true_position_of(self, user_id: str, t: float | None = None) -> GeoPoint:
        """Trajectory ground truth, ignoring any manual location override."""
        when = self.now_s if t is None else t
        return self.users[user_id].trajectory.position_at(when)

    def set_override(self, user_id: str, p: GeoPoint) -> None:
        self._overrides[user_id] = p

    def add_likes(self, user_id: str, pages: set[str]) -> None:
        unknown = {p for p in pages if p not in self.catalog}
        if unknown:
            raise ValueError(f"pages not in catalog: {sorted(unknown)!r}")
        self.users[user_id].likes |= set(pages)

    def add_user(self, user: SimUser) -> None:
        if user.user_id in self.users:
            raise ValueError(f"duplicate user_id {user.user_id!r}")
        if any(u.social_id == user.social_id for u in self.users.values()):
            raise ValueError(f"duplicate social_id {user.social_id!r}")
        bad = user.likes - {p.page_id for p in self.catalog.pages}
        if bad:
            raise ValueError(f"likes outside catalog: {sorted(bad)!r}")
        self.users[user.user_id] = user


def _bounded_geometric(rng: random.Random, mean: float, cap: int) -> int:
    # P(k) ~ (1-q) q^k on {0, 1, ...} with mean q/(1-q) = mean, capped.
    if mean <= 0.0:
        return 0
    q = mean / (1.0 + mean)
    u = rng.random()
    k = int(math.log(1.0 - u) / math.log(q)) if u > 0.0 else 0
    return min(k, cap)


def generate_population(n: int, catalog_size: int, zipf_s: float, seed: int,
                        bbox: BoundingBox = DEFAULT_BBOX,
                        mean_likes: float = 3.0,
                        n_categories: int = 25,
                        duration_s: float = 86_400.0) -> World:
    """Build a fully deterministic world of ``n`` stationary users.

    Positions are uniform in ``bbox``; per-user like counts follow a bounded
    geometric law with the given mean; likes are drawn without replacement
    from the catalog with rank weight rank**-zipf_s.
    """
    if n < 1:
        raise ValueError("population size must be >= 1")
    if zipf_s <= 0.0:
        raise ValueError("zipf_s must be > 0")
    catalog = make_catalog(catalog_size, n_categories, seed)
    users: dict[str, SimUser] = {}
    ord_lo, ord_hi = BIRTH_RANGE[0].toordinal(), BIRTH_RANGE[1].toordinal()
    for i in range(n):
        uid = f"u{i:05d}"
        rng = random.Random(derive_seed(seed, "user", uid))
        pos = bbox.sample(rng)
        n_likes = _bounded_geometric(rng, mean_likes,
                                     min(MAX_LIKES_PER_USER, catalog_size))
        users[uid] = SimUser(
            user_id=uid,
            first_name=rng.choice(FIRST_NAMES),
            true_birthdate=date.fromordinal(rng.randint(ord_lo, ord_hi)),
            trajectory=stationary_trajectory(pos, duration_s),
            likes=catalog.sample_likes(n_likes, zipf_s, rng),
            social_id=f"fb{i:07d}",
        )
    return World(users=users, catalog=catalog, bbox=bbox, seed=seed,
                 duration_s=duration_s)


def policy_with(base: DisclosurePolicy, **overrides) -> DisclosurePolicy:
    """A copy of ``base`` with the given fields replaced."""
    return replace(base, **overrides)

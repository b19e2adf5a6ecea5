"""Simulated social-platform search and the identification attack.

``forward_search`` finds accounts matching profile attributes;
``reverse_search`` lists the interests those accounts hold. ``identify``
runs the refinement loop an attacker can drive from a proximity-app view
of a victim: start from the disclosed first name, birth-year window and
common likes, then repeatedly like promising pages, re-poll the victim's
profile to see which became common, and re-filter the candidate pool with
the confirmed likes until it collapses to a single account.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Callable, Iterable, Sequence

from .report import AttackTrace, TraceEvent
from .service import NearbyEntry
from .world import FUZZ_WINDOW_DAYS, SimUser

__all__ = [
    "GraphQuery", "CandidatePool", "IdentificationResult",
    "InsufficientSelectorsError", "forward_search", "reverse_search",
    "candidate_birth_years", "identify", "identification_to_csv",
]

IDENTIFICATION_CSV_HEADER = "seed,rounds_used,final_pool,identified"


class InsufficientSelectorsError(ValueError):
    """The victim view discloses neither a name nor any likes."""


@dataclass(frozen=True)
class GraphQuery:
    """Conjunctive profile filter; unset fields do not constrain.

    The empty query is the documented match-all case.
    """

    name: str | None = None
    birth_year: int | None = None
    liked_pages: frozenset[str] = frozenset()


def _matches(user: SimUser, q: GraphQuery) -> bool:
    if q.name is not None and user.first_name.lower() != q.name.lower():
        return False
    if q.birth_year is not None and user.true_birthdate.year != q.birth_year:
        return False
    return q.liked_pages <= user.likes


def forward_search(population: Iterable[SimUser], q: GraphQuery) -> set[str]:
    """Social ids of every account matching all set fields."""
    return {u.social_id for u in population if _matches(u, q)}


def reverse_search(population: Iterable[SimUser], q: GraphQuery) -> set[str]:
    """Pages liked by matching accounts, minus the query's own pages."""
    pages: set[str] = set()
    for u in population:
        if _matches(u, q):
            pages |= u.likes
    return pages - q.liked_pages


def candidate_birth_years(disclosed: date, fuzzy: bool) -> set[int]:
    """Years the true birthdate may fall in, given the disclosed one."""
    if not fuzzy:
        return {disclosed.year}
    return {(disclosed + timedelta(days=d)).year
            for d in range(-FUZZ_WINDOW_DAYS, FUZZ_WINDOW_DAYS + 1)}


@dataclass(frozen=True)
class CandidatePool:
    round: int
    candidates: frozenset[str]
    attacker_likes: frozenset[str]


@dataclass
class IdentificationResult:
    social_id: str | None
    pool_sizes: list[int]
    rounds_used: int
    identified: bool
    stalled: bool
    pools: list[CandidatePool] = field(default_factory=list)


def _pool(population: Sequence[SimUser], name: str | None,
          years: set[int] | None, pages: set[str]) -> set[str]:
    if years is None:
        return forward_search(population, GraphQuery(name, None, frozenset(pages)))
    out: set[str] = set()
    for y in sorted(years):
        out |= forward_search(population, GraphQuery(name, y, frozenset(pages)))
    return out


def identify(victim_view: NearbyEntry, population: Sequence[SimUser],
             max_rounds: int = 10, batch_size: int = 10,
             like_and_refresh: Callable[[set[str]], NearbyEntry] | None = None,
             interests_are_pages: bool = True,
             birthdate_is_fuzzy: bool = True,
             trace: AttackTrace | None = None) -> IdentificationResult:
    """Narrow the victim's social account from their proximity-app view.

    ``like_and_refresh(pages)`` must make the attacker like ``pages`` and
    return a fresh view of the victim; without it (or when the app shows
    interest categories instead of pages) the attack stops at the
    attribute-only pool. The true account is never dropped from the pool as
    long as the disclosed fields are truthful, and pools only ever shrink.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    population = list(population)
    users_by_social = {u.social_id: u for u in population}

    if victim_view.social_id is not None:
        return IdentificationResult(victim_view.social_id, [1], 0, True, False,
                                    [CandidatePool(0, frozenset([victim_view.social_id]),
                                                   frozenset())])

    name = victim_view.first_name
    known: set[str] = set(victim_view.common_likes or ()) if interests_are_pages else set()
    if name is None and not known:
        raise InsufficientSelectorsError(
            "view has neither a first name nor usable likes")
    years = None
    if victim_view.fuzzy_birthdate is not None:
        years = candidate_birth_years(victim_view.fuzzy_birthdate, birthdate_is_fuzzy)

    pool = _pool(population, name, years, known)
    pools = [CandidatePool(0, frozenset(pool), frozenset(known))]
    pool_sizes = [len(pool)]
    if trace is not None:
        trace.append(TraceEvent("identify_round", victim_view.last_active_t,
                                victim_view.user_id, {"round": 0, "pool": len(pool)}))

    tried = set(known)
    rounds_used = 0
    stalled = False
    for rnd in range(1, max_rounds + 1):
        if len(pool) <= 1:
            break
        if not interests_are_pages or like_and_refresh is None:
            stalled = True
            break
        candidates: set[str] = set()
        if years is None:
            candidates = reverse_search(population,
                                        GraphQuery(name, None, frozenset(known)))
        else:
            for y in sorted(years):
                candidates |= reverse_search(population,
                                             GraphQuery(name, y, frozenset(known)))
        candidates -= tried
        if not candidates:
            stalled = True
            break
        # Prefer pages that split the pool most evenly; deterministic ties.
        freq = {p: 0 for p in candidates}
        for sid in pool:
            for p in users_by_social[sid].likes:
                if p in freq:
                    freq[p] += 1
        half = len(pool) / 2.0
        batch = set(sorted(candidates,
                           key=lambda p: (abs(freq[p] - half), p))[:batch_size])
        tried |= batch
        view = like_and_refresh(batch)
        confirmed = set(view.common_likes or ())  # full intersection, fresh
        known |= confirmed
        new_pool = _pool(population, name, years, known)
        rounds_used = rnd
        pool = new_pool
        pool_sizes.append(len(pool))
        pools.append(CandidatePool(rnd, frozenset(pool), frozenset(known)))
        if trace is not None:
            trace.append(TraceEvent("identify_round", view.last_active_t,
                                    victim_view.user_id,
                                    {"round": rnd, "pool": len(pool)}))

    identified = len(pool) == 1
    social_id = next(iter(pool)) if identified else None
    return IdentificationResult(social_id, pool_sizes, rounds_used, identified,
                                stalled, pools)


def identification_to_csv(rows: Sequence[tuple[int, IdentificationResult]], fp) -> None:
    """Write per-run outcomes (``seed,rounds_used,final_pool,identified``)."""
    fp.write(IDENTIFICATION_CSV_HEADER + "\n")
    for seed, res in rows:
        fp.write(f"{seed},{res.rounds_used},{res.pool_sizes[-1]},"
                 f"{int(res.identified)}\n")

"""Users, reviews, bookmarks, comments and contributor-role badges.

All mutations funnel through the registry's writer lock; review changes
re-emit the affected card so the index refreshes its community signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ToolseekError
from .registry import Publication, RegistryService

# The 14-role contributor taxonomy, verbatim.
CREDIT_ROLES = (
    "Conceptualization",
    "Data curation",
    "Formal analysis",
    "Funding acquisition",
    "Investigation",
    "Methodology",
    "Project administration",
    "Resources",
    "Software",
    "Supervision",
    "Validation",
    "Visualization",
    "Writing – original draft",
    "Writing – review & editing",
)

USER_ROLES = ("member", "biocurator", "admin")


class UnknownUser(ToolseekError):
    code = "unknown_user"


class RatingOutOfRange(ToolseekError):
    code = "rating_out_of_range"


class UnknownCollection(ToolseekError):
    code = "unknown_collection"


class EmptyRoleSet(ToolseekError):
    code = "empty_role_set"


class UnknownRole(ToolseekError):
    code = "unknown_role"


class UnknownPublication(ToolseekError):
    code = "unknown_publication"


@dataclass(frozen=True)
class User:
    user_id: str
    display_name: str
    biography: Optional[str] = None
    affiliation: Optional[str] = None
    roles: frozenset[str] = frozenset({"member"})
    profile_links: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"user_id": self.user_id, "display_name": self.display_name,
                "biography": self.biography, "affiliation": self.affiliation,
                "roles": sorted(self.roles),
                "profile_links": dict(sorted(self.profile_links.items()))}

    @classmethod
    def from_dict(cls, raw: dict) -> "User":
        return cls(user_id=raw["user_id"], display_name=raw["display_name"],
                   biography=raw.get("biography"), affiliation=raw.get("affiliation"),
                   roles=frozenset(raw.get("roles", ["member"])),
                   profile_links=dict(raw.get("profile_links", {})))


@dataclass(frozen=True)
class Review:
    user_id: str
    accession: str
    rating: int
    text: Optional[str] = None
    at: str = ""

    def to_dict(self) -> dict:
        return {"user_id": self.user_id, "accession": self.accession,
                "rating": self.rating, "text": self.text, "at": self.at}

    @classmethod
    def from_dict(cls, raw: dict) -> "Review":
        return cls(**raw)


@dataclass(frozen=True)
class Collection:
    owner: str
    name: str
    accessions: tuple[str, ...] = ()
    shared: bool = False

    def to_dict(self) -> dict:
        return {"owner": self.owner, "name": self.name,
                "accessions": list(self.accessions), "shared": self.shared}

    @classmethod
    def from_dict(cls, raw: dict) -> "Collection":
        return cls(owner=raw["owner"], name=raw["name"],
                   accessions=tuple(raw.get("accessions", [])),
                   shared=raw.get("shared", False))


class CommunityService:
    def __init__(self, store, registry: RegistryService):
        self._store = store
        self._registry = registry
        registry.set_ratings_provider(self.rating_summary)

    # -- users -------------------------------------------------------------

    def create_user(self, user_id: str, display_name: str, *,
                    biography: Optional[str] = None,
                    affiliation: Optional[str] = None,
                    roles: tuple[str, ...] = ("member",),
                    profile_links: Optional[dict[str, str]] = None) -> User:
        for role in roles:
            if role not in USER_ROLES:
                raise UnknownRole(f"unknown user role {role!r}")
        user = User(user_id=user_id, display_name=display_name,
                    biography=biography, affiliation=affiliation,
                    roles=frozenset(roles), profile_links=profile_links or {})
        self._store.write("users", user_id, user.to_dict())
        return user

    def get_user(self, user_id: str) -> User:
        raw = self._store.read("users", user_id)
        if raw is None:
            raise UnknownUser(f"unknown user {user_id!r}")
        return User.from_dict(raw)

    def _require_user(self, user_id: str) -> None:
        if self._store.read("users", user_id) is None:
            raise UnknownUser(f"unknown user {user_id!r}")

    # -- reviews -------------------------------------------------------------

    def add_review(self, user_id: str, accession: str, rating: int,
                   text: Optional[str] = None) -> Review:
        """Store a review; one live review per (user, tool), replacements audited."""
        self._require_user(user_id)
        self._registry.get_tool(accession, include_draft=True)
        if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 5:
            raise RatingOutOfRange(f"rating must be an integer 1..5, got {rating!r}")
        review = Review(user_id=user_id, accession=accession, rating=rating,
                        text=text, at=self._registry.now_iso())
        doc = self._store.read("reviews", accession) or {}
        previous = doc.get(user_id)
        doc[user_id] = review.to_dict()
        self._store.write("reviews", accession, doc)
        if previous is not None:
            self._registry.append_audit(
                accession, user_id, f"review:{user_id}",
                {"rating": previous["rating"], "text": previous.get("text")},
                {"rating": rating, "text": text})
        self._registry.refresh_signals(accession)
        return review

    def reviews_for(self, accession: str) -> list[Review]:
        doc = self._store.read("reviews", accession) or {}
        reviews = [Review.from_dict(raw) for raw in doc.values()]
        return sorted(reviews, key=lambda r: (r.at, r.user_id))

    def aggregate_rating(self, accession: str) -> tuple[Optional[float], int]:
        """Plain arithmetic mean; undefined (None) when there are no reviews."""
        self._registry.get_tool(accession, include_draft=True)
        reviews = self.reviews_for(accession)
        if not reviews:
            return None, 0
        return sum(r.rating for r in reviews) / len(reviews), len(reviews)

    def rating_summary(self, accession: str) -> tuple[int, int]:
        doc = self._store.read("reviews", accession) or {}
        ratings = [raw["rating"] for raw in doc.values()]
        return sum(ratings), len(ratings)

    # -- bookmarks -------------------------------------------------------------

    def manage_bookmark(self, user_id: str, accession: str, collection_name: str,
                        action: str) -> Collection:
        """Add/remove a tool in a named collection; add is idempotent."""
        self._require_user(user_id)
        doc = self._store.read("collections", user_id) or {}
        if action == "add":
            self._registry.get_tool(accession, include_draft=True)
            raw = doc.get(collection_name)
            collection = (Collection.from_dict(raw) if raw
                          else Collection(owner=user_id, name=collection_name))
            if accession not in collection.accessions:
                collection = Collection(owner=user_id, name=collection_name,
                                        accessions=collection.accessions + (accession,),
                                        shared=collection.shared)
        elif action == "remove":
            raw = doc.get(collection_name)
            if raw is None:
                raise UnknownCollection(
                    f"user {user_id!r} has no collection {collection_name!r}")
            collection = Collection.from_dict(raw)
            collection = Collection(owner=user_id, name=collection_name,
                                    accessions=tuple(a for a in collection.accessions
                                                     if a != accession),
                                    shared=collection.shared)
        else:
            raise ValueError(f"action must be 'add' or 'remove', got {action!r}")
        doc[collection_name] = collection.to_dict()
        self._store.write("collections", user_id, doc)
        return collection

    def collections_for(self, user_id: str) -> list[Collection]:
        doc = self._store.read("collections", user_id) or {}
        return [Collection.from_dict(raw) for _, raw in sorted(doc.items())]

    # -- contributor badges ----------------------------------------------------

    def assign_credit(self, user_id: str, accession: str, publication_index: int,
                      roles) -> Publication:
        """Merge contributor-role badges into a publication; idempotent on repeats."""
        self._require_user(user_id)
        roles = frozenset(roles)
        if not roles:
            raise EmptyRoleSet("at least one contributor role is required")
        for role in roles:
            if role not in CREDIT_ROLES:
                raise UnknownRole(f"unknown contributor role {role!r}")
        return self._registry.update_publication_badges(
            accession, publication_index, user_id, roles, editor=user_id)

    # -- comments ---------------------------------------------------------------

    def add_comment(self, user_id: str, accession: str, text: str) -> dict:
        """Flat per-tool comment thread: (user, timestamp, text)."""
        self._require_user(user_id)
        self._registry.get_tool(accession, include_draft=True)
        doc = self._store.read("comments", accession) or {"comments": []}
        comment = {"user_id": user_id, "at": self._registry.now_iso(), "text": text}
        doc["comments"].append(comment)
        self._store.write("comments", accession, doc)
        return comment

    def comments_for(self, accession: str) -> list[dict]:
        doc = self._store.read("comments", accession) or {"comments": []}
        return list(doc["comments"])

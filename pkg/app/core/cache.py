import hashlib
import logging
import threading
from typing import Callable, Generic, Hashable, Iterator, TypeVar


logger = logging.getLogger(__name__)

V = TypeVar("V")


class MemoTable(Generic[V]):
    """Read-mostly in-process memo table with insert-if-absent semantics.

    Loaders run outside the lock; when two threads race on the same key the
    first stored value wins and the other result is dropped.
    """

    def __init__(self, name: str) -> None:
        self.name = name
        self._data: dict[Hashable, V] = {}
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> V | None:
        return self._data.get(key)

    def get_or_load(self, key: Hashable, loader: Callable[[], V]) -> V:
        cached = self._data.get(key)
        if cached is not None:
            return cached
        value = loader()
        with self._lock:
            stored = self._data.setdefault(key, value)
        if stored is value:
            logger.debug("%s: cached %r", self.name, key)
        return stored

    def clear(self) -> None:
        with self._lock:
            self._data.clear()

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._data

    def items(self) -> Iterator[tuple[Hashable, V]]:
        with self._lock:
            snapshot = list(self._data.items())
        return iter(snapshot)


def content_hash(parts: list[bytes]) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(len(part).to_bytes(8, "little"))
        digest.update(part)
    return digest.hexdigest()

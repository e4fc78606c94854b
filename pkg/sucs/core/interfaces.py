"""Core interfaces for the sucs tools using Protocols."""

from pathlib import Path
from typing import Any, Dict, Protocol, runtime_checkable


@runtime_checkable
class ArtifactStoreInterface(Protocol):
    """Interface for reading configs and writing run artifacts."""

    async def read_text(self, path: Path) -> str:
        """Read file content as string."""
        ...

    async def write_text(self, path: Path, content: str) -> None:
        """Write string content to file, creating parent directories."""
        ...

    async def exists(self, path: Path) -> bool:
        """Check if path exists."""
        ...

    def get_info(self, path: Path) -> Dict[str, Any]:
        """Get artifact info (sync)."""
        ...

    async def calculate_hash(self, path: Path) -> str:
        """Calculate the artifact digest."""
        ...

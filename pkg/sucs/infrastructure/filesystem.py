"""Concrete implementation of ArtifactStoreInterface using aiofiles."""

import hashlib
import mimetypes
from pathlib import Path
from typing import Any, Dict

import aiofiles

from sucs.core.interfaces import ArtifactStoreInterface


class AIOFileSystem(ArtifactStoreInterface):
    """Artifact store using aiofiles for async I/O."""

    async def read_text(self, path: Path) -> str:
        async with aiofiles.open(path, mode='r', encoding='utf-8') as f:
            return await f.read()

    async def write_text(self, path: Path, content: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        # newline='' keeps the bytes identical across platforms
        async with aiofiles.open(path, mode='w', encoding='utf-8', newline='') as f:
            await f.write(content)

    async def exists(self, path: Path) -> bool:
        return path.exists()

    def get_info(self, path: Path) -> Dict[str, Any]:
        """Get artifact information."""
        stat = path.stat()
        return {
            "name": path.name,
            "path": str(path),
            "size": stat.st_size,
            "size_human": self._format_size(stat.st_size),
            "extension": path.suffix,
            "mime_type": mimetypes.guess_type(str(path))[0],
            "is_trajectory": path.suffix in ('.csv', '.json'),
            "sha256": self._calculate_hash_sync(path),
        }

    def _calculate_hash_sync(self, path: Path) -> str:
        try:
            digest = hashlib.sha256()
            with open(path, "rb") as f:
                for chunk in iter(lambda: f.read(65536), b""):
                    digest.update(chunk)
            return digest.hexdigest()
        except OSError:
            return ""

    async def calculate_hash(self, path: Path) -> str:
        """SHA-256 of the artifact; identical runs must give identical digests."""
        try:
            digest = hashlib.sha256()
            async with aiofiles.open(path, "rb") as f:
                while chunk := await f.read(65536):
                    digest.update(chunk)
            return digest.hexdigest()
        except OSError:
            return ""

    def _format_size(self, size_bytes: float) -> str:
        for unit in ['B', 'KB', 'MB', 'GB']:
            if size_bytes < 1000.0:
                return f"{size_bytes:.1f} {unit}"
            size_bytes /= 1000.0
        return f"{size_bytes:.1f} TB"

"""Shared plumbing for the tool facades: artifact output and error dicts."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from sucs.core.errors import SucsError
from sucs.core.interfaces import ArtifactStoreInterface

logger = logging.getLogger(__name__)


class ToolBase:
    """Holds the injected artifact store."""

    def __init__(self, store: ArtifactStoreInterface):
        self._store = store

    async def _emit(self, result: Dict[str, Any], content: str, output: Optional[str]) -> Dict[str, Any]:
        """Write ``content`` to ``output`` (recording its digest), or attach it to the result."""
        if output:
            path = Path(output)
            await self._store.write_text(path, content)
            result["output"] = str(path)
            result["sha256"] = await self._store.calculate_hash(path)
        else:
            result["content"] = content
        return result

    def _failure(self, action: str, error: Exception) -> Dict[str, Any]:
        exit_code = error.exit_code if isinstance(error, SucsError) else 1
        logger.error(f"Error during {action}: {str(error)}")
        return {"error": str(error), "exit_code": exit_code}

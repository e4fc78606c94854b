"""Tool facades shared by the CLI and the MCP server."""

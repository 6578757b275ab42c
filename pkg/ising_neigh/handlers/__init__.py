"""Tool handlers; each returns a JSON-serialisable dict."""

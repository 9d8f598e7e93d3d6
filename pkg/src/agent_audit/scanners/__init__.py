"""File-type scanners. Each exposes scan(path, text, config) -> list[Finding]."""

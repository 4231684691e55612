"""Command-line surface of pmkit."""

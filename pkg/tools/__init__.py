"""Command implementations: one Command subclass and one YAML descriptor per command."""

"""Manufactured solutions, norms, studies and property suites."""

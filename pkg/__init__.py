"""Fisheye pose reconstruction toolkit."""

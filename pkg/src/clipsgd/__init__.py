"""Clipped SGD for heavy-tailed streaming estimation."""

"""Bundled configuration presets for the command line (load with preset:<name>)."""

"""Empty package marker."""

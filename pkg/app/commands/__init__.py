"""
Command-line commands, one module per command family.
"""

from app.commands import diagnose, fit, replicate, select, simulate

COMMANDS = (simulate, fit, select, diagnose, replicate)

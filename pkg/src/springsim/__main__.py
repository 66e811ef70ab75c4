"""`python -m springsim` dispatches to the command-line front end."""

from .cli import entry

entry()

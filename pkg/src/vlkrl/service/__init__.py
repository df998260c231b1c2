"""HTTP session service, persistence, and the command-line front door."""

"""Command-line front end for the hyporeg library."""

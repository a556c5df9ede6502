"""Command-line harness: configuration, sweeps, table reproduction."""

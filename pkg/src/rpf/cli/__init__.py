"""Command-line front end: config parsing, CSV/SVG output, subcommands."""

"""Configuration, artifact I/O and figures shared by the command line and the explorer."""

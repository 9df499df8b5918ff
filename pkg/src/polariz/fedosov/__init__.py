"""The polarized flat-connection construction and its star products."""

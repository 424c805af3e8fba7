"""Seeded discrete-event machinery at subframe resolution."""

"""Baseline RACH, dynamic RAO allocation and tree splitting state machines."""

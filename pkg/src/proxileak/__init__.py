"""proxileak: a deterministic proximity-app simulator and attacker toolkit.

The package simulates a dating-style service that reveals quantized
relative distances and partial profiles, and implements the attacks such
leakage enables: multilateration of user positions, longitudinal tracking
with point-of-interest extraction, and iterative identification of linked
social-platform accounts from shared interests.
"""

__version__ = "0.1.0"

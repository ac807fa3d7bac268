"""Simulation lab for two-way finite automata.

Exact acceptance-probability engines for deterministic, probabilistic and
quantum-classical two-way machines; a compiler from input-oracle query
programs to such machines (including an AND-oracle head-walk gadget for
pair inputs); the prime-fingerprint equality recognizer; a two-party
crossing protocol with message accounting; and a benchmark harness exposed
through a FastAPI service with a thin CLI client.
"""

__version__ = "0.1.0"

from . import compilers  # registers the named machine builders on import

__all__ = ["__version__", "compilers"]

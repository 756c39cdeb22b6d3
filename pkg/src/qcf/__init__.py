"""Simulation of a quantum coin-flipping protocol built on lie detection.

Modules:

* ``quantum``: exact α⊗β pair states, measurement, Helstrom discrimination
* ``liedetect``: Bob's lies and Alice's four detection algorithms
* ``codes``: binary linear codes for Alice's secret string
* ``protocol``: the two-party protocol with every security check
* ``adversary``: cheating strategies and bias estimation
* ``harness`` / ``cli``: reports and the ``qcf`` command
"""

__version__ = "0.1.0"

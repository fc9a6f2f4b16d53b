"""chainsense: identifiability analysis and parameter estimation for qubit
sensors coupled to exchange spin chains.

The package decides, for a catalog of sensor measurement/initial-state
schemes, whether the chain's coupling magnitudes can be recovered from the
sensor's time record, and actually recovers them from simulated data.
"""

__version__ = "0.1.0"

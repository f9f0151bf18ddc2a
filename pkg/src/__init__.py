# FEC laboratory: sparse-graph codes, EXIT analysis, decoding and simulation
__version__ = '0.1.0'

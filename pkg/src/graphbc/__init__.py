"""Graph-interfaced coding of correlated sources over two-user broadcast channels.

Submodules:

- probability: finite-alphabet pmfs, entropies, mutual information
- typicality: strong typicality, exact typical-set counting and sampling
- bigraph: nearly semi-regular bipartite message graphs
- broadcast: random-binning channel codes with a graph interface
- graywyner: common-information source codes with a graph interface
- regions: rate-region constraint evaluation, membership search, common information
- cli: command-line front end
"""

__version__ = "0.1.0"

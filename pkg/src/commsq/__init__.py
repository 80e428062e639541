"""Commuting squares, bi-unitary connections and fusion bimodule searches."""

from . import catalog, cli, connection, factorization, fourstar, fusion, graphs
from .catalog import CATALOG_NAMES, catalog_entry
from .connection import Connection, SquareShape, bi_dual, block_layout, verify
from .factorization import enumerate_factorizations, screen_intermediate
from .fourstar import family_connection, index_table
from .fusion import find_multiplication_maps, load_fusion_data
from .graphs import BipartiteGraph, from_adjacency, make_star, spectral

__version__ = "0.1.0"

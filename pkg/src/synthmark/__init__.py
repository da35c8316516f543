"""Multi-table anonymized synthesis and SDNIST-style utility and privacy measurement."""

from .data import ColumnSchema, Dataset, Kind, SchemaError, load_csv, load_schema
from .forest import build_forest, build_tree
from .microdata import SynthesisPlan, run_plan, synthesize_table
from .noise import AnonParams
from .store import MissingTableError, SingleTableSource, SynTableStore

__version__ = "0.1.0"

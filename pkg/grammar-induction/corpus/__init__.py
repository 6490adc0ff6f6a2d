from .embeddings import UNK, EmbeddingProvider, load_embeddings_jsonl
from .exports import decode_types_report, export_spans, parse_span_spec
from .records import COLUMNS, DatasetRecord, load_dataset, percentile_filter, tokenize, write_records_tsv
from .synthetic import fragment_grammar, fragment_roots, generate_synthetic, write_fragment

__all__ = [
    "COLUMNS",
    "UNK",
    "DatasetRecord",
    "EmbeddingProvider",
    "decode_types_report",
    "export_spans",
    "fragment_grammar",
    "fragment_roots",
    "generate_synthetic",
    "load_dataset",
    "load_embeddings_jsonl",
    "parse_span_spec",
    "percentile_filter",
    "tokenize",
    "write_fragment",
    "write_records_tsv",
]

"""Persistence for vqsbi: model files and run artifacts"""

from .artifacts import (
    append_jsonl,
    config_hash,
    dumps,
    init_output_dir,
    output_root,
    read_jsonl,
    read_points_csv,
    write_csv,
    write_json,
    write_manifest,
    write_matrix_csv,
    write_points_csv,
)
from .model_store import ModelFormatError, load_model, read_model_metadata, save_model

__all__ = [
    'ModelFormatError',
    'append_jsonl',
    'config_hash',
    'dumps',
    'init_output_dir',
    'load_model',
    'output_root',
    'read_jsonl',
    'read_model_metadata',
    'read_points_csv',
    'save_model',
    'write_csv',
    'write_json',
    'write_manifest',
    'write_matrix_csv',
    'write_points_csv',
]

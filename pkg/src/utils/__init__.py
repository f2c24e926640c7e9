"""
JSON serialization helpers.
"""

from src.utils.json_writer import append_jsonl, load_json, load_jsonl, save_json, write_jsonl

__all__ = ["append_jsonl", "load_json", "load_jsonl", "save_json", "write_jsonl"]

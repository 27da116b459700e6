"""Hybrid NMT + phrase-based beam search decoder."""

from ._hybridmt import (
    ArpaModel,
    ConfigError,
    Decoder,
    Error,
    FormatError,
    PhraseTable,
    bleu,
    default_weights,
    fixture_files,
    generate_arpa,
    load_weights,
    write_fixture,
)


def fixture_decoder(directory, **options):
    """Decoder over a directory written by write_fixture()."""
    import os

    files = fixture_files()
    paths = {k: os.path.join(str(directory), v) for k, v in files.items() if k not in ("source", "reference")}
    paths.update(options)
    return Decoder(**paths)


def read_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f]


__all__ = [
    "ArpaModel",
    "ConfigError",
    "Decoder",
    "Error",
    "FormatError",
    "PhraseTable",
    "bleu",
    "default_weights",
    "fixture_decoder",
    "fixture_files",
    "generate_arpa",
    "load_weights",
    "read_lines",
    "write_fixture",
]

"""Quantum-inspired voxel connectivity encoder for brain-to-embedding retrieval."""

from ._core import (
    ConfigError,
    DataError,
    Dataset,
    DimensionError,
    DomainError,
    Encoder,
    Error,
    FormatError,
    InvariantError,
    IoError,
    NumericalError,
    RangeError,
    __version__,
    check_gradients,
    check_oracle,
    contrastive_loss,
    edge_recovery,
    gen_synthetic,
    layer_forward,
    load_dataset,
    load_encoder,
    pair_connectivity,
    pair_connectivity_oracle,
    read_embeddings,
    retrieval,
    train,
    write_embeddings,
)

__all__ = [name for name in dir() if not name.startswith("_")]

# Dataio Package
# IDX readers/writers, synthetic blobs, one-hot encoding and splits

from .schemas import Dataset

from .services import (
    one_hot,
    subset,
    load_idx,
    write_idx,
    read_idx_images,
    read_idx_labels,
    dataset_paths,
    load_named_dataset,
    synthetic_blobs,
    train_test_split,
)

__all__ = [
    # Schemas
    "Dataset",

    # Services
    "one_hot",
    "subset",
    "load_idx",
    "write_idx",
    "read_idx_images",
    "read_idx_labels",
    "dataset_paths",
    "load_named_dataset",
    "synthetic_blobs",
    "train_test_split",
]

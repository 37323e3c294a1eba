"""Image disguising for outsourced learning pipelines.

Splits each image into uniform blocks, rotates every block with a secret
random matrix (optionally after additive noise), and shuffles the blocks
with a secret permutation.  Companions: bit-exact dataset codecs, log2
keyspace accounting, and an empirical harness for visual re-identification
and class-membership attacks.
"""

from .attack_eval import (
    AttackReport,
    Examiner,
    class_histogram,
    examiner_accuracy,
    fano_factor,
    group_predictions,
    label_entropy,
    membership_attack_report,
    predict,
    read_predictions_csv,
    render_report,
    train_examiner,
    visual_privacy,
    welch_t_test,
    write_predictions_csv,
)
from .data import DISGUISED, ORIGINAL, LabeledDataset, as_image
from .dataset_io import (
    CLAMP,
    MINMAX,
    export_pnm,
    load_dgt,
    load_idx_dataset,
    pad_to_block_multiple,
    read_cifar10_bin,
    read_dgt,
    read_idx_images,
    read_idx_labels,
    save_dgt,
    write_dgt,
    write_idx_images,
    write_idx_labels,
)
from .errors import (
    BadMagicError,
    DisguiseError,
    FormatError,
    FramingError,
    GeometryMismatchError,
    InvalidDimensionError,
    InvariantError,
    NotInvertibleError,
    PartitionError,
    TruncatedError,
    VersionError,
)
from .keys import (
    DisguiseKey,
    MatrixKind,
    deserialize_key,
    generate_key,
    identity_key,
    load_key,
    rng_stream,
    sample_haar_orthogonal,
    sample_permutation,
    sample_projection,
    save_key,
    serialize_key,
)
from .keyspace import log2_combined_keyspace, log2_factorial, log2_orthogonal_count
from .transform import (
    BlockGrid,
    assemble,
    disguise,
    disguise_dataset,
    invert,
    invert_dataset,
    partition,
    permute_blocks,
    rmt_block,
)

__version__ = "0.1.0"

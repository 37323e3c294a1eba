import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imgdisguise import (
    DISGUISED,
    ORIGINAL,
    BadMagicError,
    FormatError,
    FramingError,
    InvariantError,
    LabeledDataset,
    TruncatedError,
    VersionError,
    export_pnm,
    load_idx_dataset,
    pad_to_block_multiple,
    read_cifar10_bin,
    read_dgt,
    read_idx_images,
    read_idx_labels,
    write_dgt,
    write_idx_images,
    write_idx_labels,
)


def idx_image_bytes(count=2, rows=4, cols=4):
    header = struct.pack(">IIII", 0x00000803, count, rows, cols)
    return header + bytes(i % 256 for i in range(count * rows * cols))


def idx_label_bytes(labels):
    return struct.pack(">II", 0x00000801, len(labels)) + bytes(labels)


# -- IDX images ---------------------------------------------------------------


def test_idx_images_round_values():
    data = idx_image_bytes(count=2, rows=4, cols=4)
    images = read_idx_images(data)
    assert images.shape == (2, 1, 4, 4)
    assert images.dtype == np.float64
    assert images[0, 0, 0, 1] == 1.0
    assert images[1, 0, 0, 0] == 16.0


def test_idx_images_empty_count():
    data = struct.pack(">IIII", 0x00000803, 0, 28, 28)
    assert read_idx_images(data).shape == (0, 1, 28, 28)


def test_idx_images_label_magic_rejected():
    with pytest.raises(BadMagicError):
        read_idx_images(idx_label_bytes([1, 2, 3]))


def test_idx_images_truncated_payload():
    data = idx_image_bytes()
    with pytest.raises(TruncatedError):
        read_idx_images(data[:-1])


def test_idx_images_trailing_bytes():
    with pytest.raises(FramingError):
        read_idx_images(idx_image_bytes() + b"\x00")


def test_idx_images_dim_overflow():
    data = struct.pack(">IIII", 0x00000803, 2**31, 2**20, 2**20)
    with pytest.raises(FramingError):
        read_idx_images(data)


def test_idx_images_write_read_round_trip():
    images = np.arange(2 * 1 * 3 * 5, dtype=float).reshape(2, 1, 3, 5)
    assert np.array_equal(read_idx_images(write_idx_images(images)), images)


# -- IDX labels ----------------------------------------------------------------


def test_idx_labels_values():
    assert read_idx_labels(idx_label_bytes([0, 9, 4])).tolist() == [0, 9, 4]


def test_idx_labels_empty():
    assert read_idx_labels(idx_label_bytes([])).shape == (0,)


def test_idx_labels_bad_magic():
    with pytest.raises(BadMagicError):
        read_idx_labels(idx_image_bytes())


def test_idx_labels_truncated():
    with pytest.raises(TruncatedError):
        read_idx_labels(idx_label_bytes([1, 2, 3])[:-2])


def test_load_idx_dataset_count_mismatch():
    with pytest.raises(InvariantError):
        load_idx_dataset(idx_image_bytes(count=2), idx_label_bytes([1, 2, 3]))


# -- CIFAR-10 binary -------------------------------------------------------------


def cifar_record(label, value):
    return bytes([label]) + bytes([value]) * 3072


def test_cifar_reader_layout():
    data = cifar_record(3, 10) + cifar_record(7, 200)
    ds = read_cifar10_bin(data)
    assert len(ds) == 2
    assert ds.class_count == 10
    assert ds.images.shape == (2, 3, 32, 32)
    assert ds.labels.tolist() == [3, 7]
    assert np.all(ds.images[0] == 10.0)
    assert np.all(ds.images[1] == 200.0)


def test_cifar_plane_order():
    # first plane red, second green, third blue
    payload = bytes([1]) + bytes([10]) * 1024 + bytes([20]) * 1024 + bytes([30]) * 1024
    ds = read_cifar10_bin(payload)
    assert np.all(ds.images[0, 0] == 10.0)
    assert np.all(ds.images[0, 1] == 20.0)
    assert np.all(ds.images[0, 2] == 30.0)


def test_cifar_empty_input():
    ds = read_cifar10_bin(b"")
    assert len(ds) == 0


def test_cifar_framing_error():
    with pytest.raises(FramingError):
        read_cifar10_bin(bytes(3072))


def test_cifar_label_out_of_range():
    with pytest.raises(InvariantError):
        read_cifar10_bin(cifar_record(11, 0))


# -- DGT container ----------------------------------------------------------------


def extreme_dataset():
    images = np.array(
        [
            [[[-1e300, 1e300], [5e-324, -0.0]]],
            [[[np.pi, -np.e], [255.0, -12345.6789]]],
        ]
    )
    return LabeledDataset(images, np.array([1, 0]), class_count=2, space=DISGUISED)


def test_dgt_round_trip_bit_exact():
    ds = extreme_dataset()
    back = read_dgt(write_dgt(ds))
    assert back.images.tobytes() == ds.images.tobytes()
    assert np.array_equal(back.labels, ds.labels)
    assert back.class_count == ds.class_count
    assert back.space == ds.space


@settings(max_examples=50)
@given(
    st.lists(
        st.floats(allow_nan=False, allow_infinity=False, width=64),
        min_size=4,
        max_size=4,
    ),
    st.integers(0, 9),
)
def test_dgt_round_trip_property(values, label):
    ds = LabeledDataset(
        np.array(values).reshape(1, 1, 2, 2), np.array([label]), class_count=10
    )
    back = read_dgt(write_dgt(ds))
    assert back.images.tobytes() == ds.images.tobytes()
    assert back.labels.tolist() == [label]


def test_dgt_empty_dataset():
    ds = LabeledDataset(np.zeros((0, 3, 8, 8)), np.zeros(0, dtype=int), class_count=4)
    back = read_dgt(write_dgt(ds))
    assert len(back) == 0
    assert back.images.shape == (0, 3, 8, 8)


def test_dgt_bad_magic():
    blob = bytearray(write_dgt(extreme_dataset()))
    blob[1] = ord("X")
    with pytest.raises(BadMagicError):
        read_dgt(bytes(blob))


def test_dgt_version_error():
    blob = bytearray(write_dgt(extreme_dataset()))
    blob[4] = 9
    with pytest.raises(VersionError):
        read_dgt(bytes(blob))


def test_dgt_truncation():
    blob = write_dgt(extreme_dataset())
    with pytest.raises(TruncatedError):
        read_dgt(blob[:-3])


def test_dgt_trailing():
    with pytest.raises(FramingError):
        read_dgt(write_dgt(extreme_dataset()) + b"!")


def test_dgt_label_out_of_range():
    blob = bytearray(write_dgt(extreme_dataset()))
    blob[-2:] = struct.pack("<H", 7)  # last label, class_count is 2
    with pytest.raises(InvariantError):
        read_dgt(bytes(blob))


def test_dgt_bad_space_code():
    blob = bytearray(write_dgt(extreme_dataset()))
    blob[17] = 5  # space byte
    with pytest.raises(FormatError):
        read_dgt(bytes(blob))


# -- PNM export --------------------------------------------------------------------


def test_pnm_zero_image_is_valid_p5():
    out = export_pnm(np.zeros((1, 28, 28)))
    assert out.startswith(b"P5\n28 28\n255\n")
    raster = out[len(b"P5\n28 28\n255\n") :]
    assert raster == bytes(28 * 28)


def test_pnm_three_channel_constant_is_p6():
    out = export_pnm(np.full((3, 4, 5), 7.0))
    assert out.startswith(b"P6\n5 4\n255\n")
    raster = out[len(b"P6\n5 4\n255\n") :]
    assert raster == bytes([7]) * (4 * 5 * 3)


def test_pnm_minmax_rescales_range():
    img = np.zeros((1, 2, 2))
    img[0] = [[-50.0, 0.0], [50.0, 150.0]]
    out = export_pnm(img, normalization="minmax")
    raster = out.split(b"\n", 3)[3]
    assert raster[0] == 0
    assert raster[3] == 255


def test_pnm_minmax_constant_image_is_zero():
    out = export_pnm(np.full((1, 2, 2), 9.5), normalization="minmax")
    assert out.split(b"\n", 3)[3] == bytes(4)


def test_pnm_clamp_clips():
    img = np.array([[[-10.0, 300.0]]])
    raster = export_pnm(img).split(b"\n", 3)[3]
    assert list(raster) == [0, 255]


def test_pnm_unknown_normalization():
    with pytest.raises(InvariantError):
        export_pnm(np.zeros((1, 2, 2)), normalization="fancy")


# -- padding -------------------------------------------------------------------------


def test_pad_already_divisible():
    img = np.ones((1, 28, 28))
    out = pad_to_block_multiple(img, 7, 7)
    assert out.shape == (1, 28, 28)
    assert np.array_equal(out, img)


def test_pad_rounds_up():
    out = pad_to_block_multiple(np.ones((1, 30, 30)), 7, 7)
    assert out.shape == (1, 35, 35)
    assert np.all(out[:, 30:, :] == 0)
    assert np.all(out[:, :, 30:] == 0)
    assert np.all(out[:, :30, :30] == 1)


def test_pad_tiny_image():
    assert pad_to_block_multiple(np.ones((1, 1, 1)), 2, 2).shape == (1, 2, 2)


# -- magic/truncation fuzz (small, the full sweep lives in acceptance) -------------


def test_idx_rejects_every_magic_mutation():
    base = idx_image_bytes()
    for b in range(256):
        mutated = bytearray(base)
        if mutated[3] == b:
            continue
        mutated[3] = b
        with pytest.raises(BadMagicError):
            read_idx_images(bytes(mutated))


def test_idx_rejects_every_truncation():
    base = idx_image_bytes()
    for cut in range(len(base)):
        with pytest.raises((TruncatedError, FramingError)):
            read_idx_images(base[:cut])

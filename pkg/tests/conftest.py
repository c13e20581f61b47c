import struct

import numpy as np
import pytest

from camscope.model import CamNet, ModelConfig, init_weights, train

# Synthetic motif task: 3 classes, each with a fixed 6-byte pattern planted at
# a class-specific position over uniform noise. The patterns must stay
# distinguishable under global average pooling, so each one is a locally
# distinct texture (sustained high, sustained low, extreme alternation)
# rather than a phase shift of another.
MOTIF_LENGTH = 128
MOTIF_SPANS = {0: (16, 22), 1: (64, 70), 2: (104, 110)}
MOTIF_PATTERNS = {
    0: np.ones(6),
    1: np.zeros(6),
    2: np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
}


def make_motif_dataset(n_per_class=300, seed=7):
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for label, (start, stop) in MOTIF_SPANS.items():
        block = rng.uniform(0.0, 1.0, size=(n_per_class, MOTIF_LENGTH))
        block[:, start:stop] = MOTIF_PATTERNS[label]
        xs.append(block)
        ys.append(np.full(n_per_class, label))
    return np.concatenate(xs), np.concatenate(ys)


def make_net(seed, input_length=32, conv_channels=(4, 8), kernel_size=5, num_classes=3):
    """A random small network plus the generator used to build it."""
    rng = np.random.default_rng(seed)
    config = ModelConfig(
        input_length=input_length,
        conv_channels=conv_channels,
        kernel_size=kernel_size,
        num_classes=num_classes,
    )
    return CamNet(config, init_weights(config, rng)), rng


@pytest.fixture(scope="session")
def motif_data():
    return make_motif_dataset()


@pytest.fixture(scope="session")
def motif_net(motif_data):
    x, y = motif_data
    config = ModelConfig(
        input_length=MOTIF_LENGTH, conv_channels=(8, 16), kernel_size=5, num_classes=3
    )
    weights, history = train(config, x, y, epochs=40, batch_size=32, lr=5e-3, seed=0)
    return CamNet(config, weights), history


# ---------------------------------------------------------------------------
# hand-built pcap fixtures
# ---------------------------------------------------------------------------


def ipv4_frame(payload=b"", src=(1, 2, 3, 4), dst=(5, 6, 7, 8), ethertype=0x0800, proto=6):
    """A minimal Ethernet frame wrapping an IPv4 header (no options)."""
    eth = bytes(6) + bytes(6) + struct.pack(">H", ethertype)
    total_len = 20 + len(payload)
    ip = bytes([0x45, 0x00]) + struct.pack(">H", total_len)
    ip += bytes(4)  # identification, flags/fragment
    ip += bytes([64, proto]) + bytes(2)  # ttl, protocol, checksum (unset)
    ip += bytes(src) + bytes(dst)
    return eth + ip + payload


def pcap_bytes(frames, byte_order="<", ts_start=1_700_000_000):
    """Serialize frames to a classic pcap stream, record layout by hand."""
    magic = struct.pack("<I", 0xA1B2C3D4) if byte_order == "<" else struct.pack(">I", 0xA1B2C3D4)
    out = magic + struct.pack(byte_order + "HHiII", 2, 4, 0, 0, 65535)
    out += struct.pack(byte_order + "I", 1)
    for i, frame in enumerate(frames):
        out += struct.pack(byte_order + "IIII", ts_start + i, 250000 * i, len(frame), len(frame))
        out += frame
    return out

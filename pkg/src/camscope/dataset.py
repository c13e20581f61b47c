"""Capture-file ingestion and preprocessing into fixed-length model inputs.

Supports classic pcap captures (both byte orders) and generic CSV feature
tables. Packets are stripped of their Ethernet header, have their IPv4
addresses masked to 0.0.0.0, and are padded/truncated to 1500 bytes scaled
into [0, 1]. Over-represented classes can be reduced by seeded random
undersampling.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    EmptyInputError,
    MalformedFrameError,
    PacketSkipped,
    UnsupportedFormatError,
)

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_SWAPPED = 0xD4C3B2A1
PCAPNG_BLOCK = 0x0A0D0D0A
GLOBAL_HEADER = struct.Struct("<IHHiIII")  # magic handled separately per byte order
RECORD_FIELDS = "IIII"
MAX_SANE_CAPLEN = 262144

ETHERNET_HEADER_LEN = 14
ETHERTYPE_IPV4 = 0x0800
IP_ADDR_SPAN = (12, 20)  # src+dst address bytes within the IPv4 header
DEFAULT_INPUT_LENGTH = 1500

BUNDLE_MAGIC = b"CSDS"
BUNDLE_VERSION = 1


@dataclass
class Packet:
    """One captured frame: timestamp fields and the bytes as captured."""

    ts_sec: int
    ts_usec: int
    data: bytes
    orig_len: int

    def __post_init__(self):
        if len(self.data) > self.orig_len:
            raise ContractViolationError(
                f"captured length {len(self.data)} exceeds original length {self.orig_len}"
            )

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec * 1e-6


@dataclass
class PcapCapture:
    packets: list
    byte_order: str  # "<" little-endian file, ">" big-endian file
    warnings: list = field(default_factory=list)


@dataclass
class PreparedSample:
    """A model-ready input vector; values are bytes/255, length is fixed."""

    sample_id: str
    label: int | None
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ContractViolationError("sample values must be a flat vector")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ContractViolationError("sample values must lie in [0, 1]")


@dataclass
class DatasetSummary:
    counts_before: dict
    counts_after: dict
    seed: int

    def to_dict(self):
        return {
            "counts_before": {str(k): v for k, v in sorted(self.counts_before.items())},
            "counts_after": {str(k): v for k, v in sorted(self.counts_after.items())},
            "seed": self.seed,
        }


def parse_pcap(data) -> PcapCapture:
    """Parse a classic pcap byte stream (bytes or binary file object).

    Handles both native and byte-swapped magic. A truncated or corrupt
    trailing record stops the parse and is reported in ``warnings`` rather
    than raising. pcapng and unknown magics are rejected.
    """
    stream = io.BytesIO(data) if isinstance(data, (bytes, bytearray)) else data
    head = stream.read(4)
    if len(head) < 4:
        raise UnsupportedFormatError("stream too short for a pcap global header")
    (magic,) = struct.unpack("<I", head)
    if magic == PCAP_MAGIC:
        order = "<"
    elif magic == PCAP_MAGIC_SWAPPED:
        order = ">"
    elif magic == PCAPNG_BLOCK or struct.unpack(">I", head)[0] == PCAPNG_BLOCK:
        raise UnsupportedFormatError("pcapng captures are not supported; convert to classic pcap")
    else:
        raise UnsupportedFormatError(f"unknown capture magic 0x{magic:08x}")
    rest = stream.read(GLOBAL_HEADER.size - 4)
    if len(rest) < GLOBAL_HEADER.size - 4:
        raise UnsupportedFormatError("truncated pcap global header")

    record_header = struct.Struct(order + RECORD_FIELDS)
    packets = []
    warnings = []
    while True:
        header = stream.read(record_header.size)
        if not header:
            break
        if len(header) < record_header.size:
            warnings.append("truncated record header at end of capture")
            break
        ts_sec, ts_usec, incl_len, orig_len = record_header.unpack(header)
        if incl_len > orig_len or incl_len > MAX_SANE_CAPLEN:
            warnings.append(
                f"corrupt record header (incl_len={incl_len}, orig_len={orig_len}); stopping"
            )
            break
        payload = stream.read(incl_len)
        if len(payload) < incl_len:
            warnings.append("truncated record payload at end of capture")
            break
        packets.append(Packet(ts_sec=ts_sec, ts_usec=ts_usec, data=payload, orig_len=orig_len))
    return PcapCapture(packets=packets, byte_order=order, warnings=warnings)


def write_pcap(packets, byte_order="<", snaplen=65535) -> bytes:
    """Serialize packets back into a classic pcap byte stream."""
    if byte_order not in ("<", ">"):
        raise ContractViolationError("byte_order must be '<' or '>'")
    out = io.BytesIO()
    magic_bytes = struct.pack("<I", PCAP_MAGIC) if byte_order == "<" else struct.pack(">I", PCAP_MAGIC)
    out.write(magic_bytes)
    out.write(struct.pack(byte_order + "HHiII", 2, 4, 0, 0, snaplen))
    out.write(struct.pack(byte_order + "I", 1))  # link type: Ethernet
    record_header = struct.Struct(byte_order + RECORD_FIELDS)
    for p in packets:
        out.write(record_header.pack(p.ts_sec, p.ts_usec, len(p.data), p.orig_len))
        out.write(p.data)
    return out.getvalue()


def preprocess_packet(packet: Packet, sample_id="", label=None, input_length=DEFAULT_INPUT_LENGTH) -> PreparedSample:
    """Turn one Ethernet/IPv4 frame into a fixed-length sample.

    Drops the 14-byte Ethernet header, zeroes the source and destination
    address bytes of the IPv4 header, truncates or zero-pads to
    ``input_length`` bytes, and scales bytes by 1/255. Non-IPv4 frames
    (VLAN-tagged ones included) raise :class:`PacketSkipped` with a reason
    code; frames too short for Ethernet + minimal IPv4 headers are malformed.
    """
    frame = packet.data
    if len(frame) < ETHERNET_HEADER_LEN + 20:
        raise MalformedFrameError(
            f"frame of {len(frame)} bytes is too short for Ethernet + IPv4 headers"
        )
    ethertype = struct.unpack(">H", frame[12:14])[0]
    if ethertype != ETHERTYPE_IPV4:
        raise PacketSkipped(f"non-ipv4-ethertype-0x{ethertype:04x}")
    ip = bytearray(frame[ETHERNET_HEADER_LEN:])
    lo, hi = IP_ADDR_SPAN
    ip[lo:hi] = bytes(hi - lo)
    if len(ip) >= input_length:
        ip = ip[:input_length]
    else:
        ip.extend(bytes(input_length - len(ip)))
    values = np.frombuffer(bytes(ip), dtype=np.uint8).astype(np.float64) / 255.0
    return PreparedSample(sample_id=sample_id, label=label, values=values)


def undersample(samples, per_class_target, seed):
    """Reduce over-represented classes to ``per_class_target`` by seeded
    uniform sampling without replacement; smaller classes pass through.

    Output preserves the input order of retained samples and is
    deterministic for a given (input, target, seed) triple.
    """
    if per_class_target < 1:
        raise ContractViolationError(f"per_class_target must be >= 1, got {per_class_target}")
    by_class = {}
    for idx, sample in enumerate(samples):
        if sample.label is None:
            raise ContractViolationError(f"sample {sample.sample_id!r} has no label")
        by_class.setdefault(sample.label, []).append(idx)
    rng = np.random.default_rng(seed)
    keep = set()
    counts_before, counts_after = {}, {}
    for label in sorted(by_class):
        indices = by_class[label]
        counts_before[label] = len(indices)
        if len(indices) > per_class_target:
            chosen = rng.choice(len(indices), size=per_class_target, replace=False)
            selected = {indices[i] for i in chosen}
        else:
            selected = set(indices)
        counts_after[label] = len(selected)
        keep |= selected
    kept = [s for i, s in enumerate(samples) if i in keep]
    return kept, DatasetSummary(counts_before=counts_before, counts_after=counts_after, seed=seed)


def load_csv(source, label_column="label"):
    """Load a feature table: header row, numeric feature columns, one label column.

    Features are min-max scaled per column into [0, 1] (constant columns
    become 0); the label column maps to class indices over the sorted unique
    label values. Returns (samples, class_names).
    """
    if isinstance(source, str) and "\n" not in source:
        fh = open(source, "r", encoding="utf-8", newline="")
        close = True
    elif isinstance(source, str):
        fh = io.StringIO(source)
        close = False
    else:
        fh = source
        close = False
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError("CSV has no header row") from None
        if label_column not in header:
            raise ContractViolationError(f"CSV header has no {label_column!r} column")
        label_pos = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_pos]
        if not feature_names:
            raise ContractViolationError("CSV needs at least one feature column")
        rows, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ContractViolationError(
                    f"row {row_no} has {len(row)} cells, header has {len(header)}"
                )
            feats = []
            for col_no, cell in enumerate(row):
                if col_no == label_pos:
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise ContractViolationError(
                        f"non-numeric cell {cell!r} at row {row_no}, column {header[col_no]!r}"
                    ) from None
            rows.append(feats)
            labels.append(row[label_pos])
    finally:
        if close:
            fh.close()
    if not rows:
        raise EmptyInputError("CSV has a header but no data rows")
    matrix = np.asarray(rows, dtype=np.float64)
    col_min = matrix.min(axis=0)
    col_max = matrix.max(axis=0)
    spread = col_max - col_min
    safe = np.where(spread == 0.0, 1.0, spread)
    scaled = (matrix - col_min) / safe
    scaled[:, spread == 0.0] = 0.0
    class_names = sorted(set(labels))
    class_index = {name: i for i, name in enumerate(class_names)}
    samples = [
        PreparedSample(sample_id=f"row:{i}", label=class_index[labels[i]], values=scaled[i])
        for i in range(len(rows))
    ]
    return samples, class_names


# ---------------------------------------------------------------------------
# dataset bundle (columnar binary, magic "CSDS")
# ---------------------------------------------------------------------------


@dataclass
class DatasetBundle:
    """Deserialized dataset: ids, labels (-1 = unlabeled), inputs, class names."""

    input_length: int
    class_names: list
    sample_ids: list
    labels: np.ndarray  # int64, -1 for unlabeled
    x: np.ndarray  # (n, input_length) float64

    @property
    def n_samples(self):
        return len(self.sample_ids)


def write_bundle(path, samples, class_names):
    """Write samples as a CSDS bundle: magic, version byte, JSON header with
    ids/labels/classes, then little-endian float32 rows."""
    if not samples:
        raise EmptyInputError("cannot write an empty bundle")
    lengths = {s.values.size for s in samples}
    if len(lengths) != 1:
        raise ContractViolationError(f"samples have mixed lengths: {sorted(lengths)}")
    input_length = lengths.pop()
    header = {
        "input_length": input_length,
        "n_samples": len(samples),
        "class_names": list(class_names),
        "sample_ids": [s.sample_id for s in samples],
        "labels": [-1 if s.label is None else int(s.label) for s in samples],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    rows = np.stack([s.values for s in samples]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(BUNDLE_MAGIC)
        fh.write(bytes([BUNDLE_VERSION]))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(rows.tobytes())


def read_bundle(path) -> DatasetBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != BUNDLE_MAGIC:
        raise UnsupportedFormatError("not a CSDS dataset bundle")
    if blob[4] != BUNDLE_VERSION:
        raise UnsupportedFormatError(f"unsupported bundle version {blob[4]}")
    (header_len,) = struct.unpack("<I", blob[5:9])
    header = json.loads(blob[9 : 9 + header_len].decode("utf-8"))
    n = header["n_samples"]
    length = header["input_length"]
    body = blob[9 + header_len :]
    expected = n * length * 4
    if len(body) != expected:
        raise UnsupportedFormatError(f"bundle body has {len(body)} bytes, expected {expected}")
    x = np.frombuffer(body, dtype="<f4").reshape(n, length).astype(np.float64)
    return DatasetBundle(
        input_length=length,
        class_names=header["class_names"],
        sample_ids=header["sample_ids"],
        labels=np.asarray(header["labels"], dtype=np.int64),
        x=x,
    )

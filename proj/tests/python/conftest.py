import json
import os
import shutil
import struct
import zlib
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[2]


def tiny_png():
    raw = b"\x00\xff\x00\x00"
    def chunk(kind, data):
        return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", zlib.crc32(kind + data))
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", struct.pack(">IIBBBBB", 1, 1, 8, 2, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b""))


def write_seeds(root, n, with_visual=False):
    src = root / "src"
    src.mkdir(parents=True, exist_ok=True)
    if with_visual:
        (src / "seed.png").write_bytes(tiny_png())
    with open(src / "charts.jsonl", "w") as f:
        for i in range(n):
            item = {
                "instruction": f"Plot the squares of 0..{i + 3} as a line chart",
                "code": f"import matplotlib.pyplot as plt\nplt.plot([k * k for k in range({i + 4})])\nplt.savefig('out.png')\n",
            }
            if with_visual:
                item["image"] = "seed.png"
            f.write(json.dumps(item) + "\n")


@pytest.fixture
def cli():
    path = os.environ.get("VIZFORGE_CLI")
    if not path or not Path(path).exists():
        pytest.skip("VIZFORGE_CLI not set")
    return path


@pytest.fixture
def make_config(tmp_path):
    def make(n=50, with_visual=False, **overrides):
        write_seeds(tmp_path, n, with_visual)
        field_map = {"instruction": "instruction", "code": "code"}
        if with_visual:
            field_map["visual"] = "image"
        cfg = {
            "store": "store",
            "templates": str(REPO / "templates"),
            "max_parallel": 2,
            "checkpoint_every": 4,
            "sources": [{"source_type": "matplotlib", "locator": "src/charts.jsonl", "field_map": field_map}],
            "sandbox": {"executor": "noop"},
            "review": {"annotators": ["alice", "bob"]},
        }
        cfg.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path
    return make


def scan_shards(store):
    """Latest revision of each record, read from the shard files directly."""
    latest = {}
    for shard in sorted((Path(store) / "corpus").glob("shard-*.jsonl")):
        for line in shard.read_text().splitlines():
            if not line:
                continue
            rec = json.loads(line)
            cur = latest.get(rec["record_id"])
            if cur is None or cur["revision"] < rec["revision"]:
                latest[rec["record_id"]] = rec
    return latest


@pytest.fixture
def shards():
    return scan_shards

import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltcse import model_io
from ltcse.bench import actual_params
from ltcse.cells import KINDS, CellConfig, ConfigError, init_params, sequence_forward
from ltcse.cells.config import INPUT_MAPPINGS
from ltcse.model_io import CheckpointError
from ltcse.numerics import ACTIVATIONS
from ltcse.training import RunRecord, TrainConfig


def saved(tmp_path, kind="ltc", name="m.ckpt", **kw):
    cfg = CellConfig(kind, 4, 3, output_size=2)
    params = init_params(cfg, 1)
    path = tmp_path / name
    model_io.save(params, cfg, TrainConfig(), path, seed=1, metrics={"test_metric": 0.5}, **kw)
    return cfg, params, path


# ---------------------------------------------------------------- config maps

def test_default_config_round_trip():
    cell, train = CellConfig("ltc", 32, 5), TrainConfig()
    assert model_io.from_config(model_io.to_config(cell, train)) == (cell, train)


def test_illegal_pair_rejected():
    cmap = model_io.to_config(CellConfig("ctrnn", 4, 2), TrainConfig())
    cmap["cell.solver"] = "fused"
    with pytest.raises(ConfigError, match="fused"):
        model_io.from_config(cmap)


def test_unknown_key_named():
    cmap = model_io.to_config(CellConfig("ltc", 4, 2), TrainConfig())
    cmap["train.dropout"] = 0.1
    with pytest.raises(ConfigError, match="dropout"):
        model_io.from_config(cmap)


def test_type_checked():
    cmap = model_io.to_config(CellConfig("ltc", 4, 2))
    cmap["cell.hidden_size"] = "4"
    with pytest.raises(ConfigError, match="hidden_size"):
        model_io.from_config(cmap)


@st.composite
def configs(draw):
    kind = draw(st.sampled_from(KINDS))
    solver = None
    if kind in ("ltc", "ctrnn", "node"):
        choices = ["euler", "rk4"] + (["fused"] if kind == "ltc" else [])
        solver = draw(st.sampled_from(choices))
    cell = CellConfig(
        kind, draw(st.integers(1, 64)), draw(st.integers(1, 600)), draw(st.integers(1, 8)),
        draw(st.sampled_from(INPUT_MAPPINGS)), solver, draw(st.integers(1, 12)), draw(st.integers(1, 10)),
        draw(st.floats(0.01, 10)), draw(st.floats(1.01, 10)), draw(st.sampled_from(ACTIVATIONS)))
    lr = draw(st.floats(0.001, 0.01))
    train = TrainConfig(draw(st.integers(1, 64)), draw(st.integers(1, 64)), lr,
                        draw(st.floats(0, 0.99)), draw(st.floats(0, 0.9999)), draw(st.floats(1e-12, 1e-3)),
                        draw(st.integers(1, 64)), draw(st.integers(0, 200)), draw(st.integers(1, 5)),
                        draw(st.integers(1, 9)), draw(st.integers(0, 2**63 - 1)),
                        draw(st.sampled_from(["best-valid", "final"])), draw(st.booleans()))
    return cell, train


@settings(max_examples=500, deadline=None)
@given(configs())
def test_config_round_trip_property(pair):
    cell, train = pair
    cmap = json.loads(json.dumps(model_io.to_config(cell, train)))
    assert model_io.from_config(cmap) == (cell, train)


# ---------------------------------------------------------------- checkpoints

@pytest.mark.parametrize("kind", KINDS)
def test_save_load_save_is_byte_identical(tmp_path, kind):
    cfg, params, path = saved(tmp_path, kind)
    ck = model_io.load(path)
    assert ck.cell == cfg and ck.seed == 1 and ck.metrics == {"test_metric": 0.5}
    assert all(np.array_equal(params[k].data, ck.params[k].data) for k in params)
    model_io.save_checkpoint(ck, tmp_path / "again.ckpt")
    assert path.read_bytes() == (tmp_path / "again.ckpt").read_bytes()


def test_outputs_unchanged_after_round_trip(tmp_path):
    cfg, params, path = saved(tmp_path)
    x = np.random.default_rng(0).normal(size=(3, 5, 3))
    before = sequence_forward(cfg, params, x).data
    after = sequence_forward(cfg, model_io.load(path).params, x).data
    assert before.tobytes() == after.tobytes()


def test_param_total_matches_directory(tmp_path):
    cfg, _, path = saved(tmp_path, "ctgru")
    data = path.read_bytes()
    (mlen,) = struct.unpack_from("<I", data, 7)
    manifest = json.loads(data[11:11 + mlen])
    total = sum(int(np.prod(e["shape"])) for e in manifest["tensors"])
    assert total == actual_params(cfg)[0]


def test_truncated_file(tmp_path):
    _, _, path = saved(tmp_path)
    data = path.read_bytes()
    path.write_bytes(data[:-100])
    with pytest.raises(CheckpointError, match=r"length mismatch.*\d+.*\d+"):
        model_io.load(path)


def test_bad_magic_and_version(tmp_path):
    with pytest.raises(CheckpointError, match="magic"):
        model_io.decode(b"NOTACKPT" + b"\0" * 20)
    _, _, path = saved(tmp_path)
    data = path.read_bytes()
    (mlen,) = struct.unpack_from("<I", data, 7)
    manifest = json.loads(data[11:11 + mlen])
    manifest["format_version"] = 99
    head = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    with pytest.raises(CheckpointError, match="format_version"):
        model_io.decode(data[:7] + struct.pack("<I", len(head)) + head + data[11 + mlen:])


def test_reordered_directory_loads_and_canonicalises(tmp_path):
    cfg, params, path = saved(tmp_path)
    data = path.read_bytes()
    (mlen,) = struct.unpack_from("<I", data, 7)
    manifest = json.loads(data[11:11 + mlen])
    blob = data[11 + mlen:]
    # rewrite the blob in reverse name order with matching offsets
    entries = sorted(manifest["tensors"], key=lambda e: e["name"], reverse=True)
    chunks, offset = [], 0
    for e in entries:
        chunk = blob[e["byte_offset"]:e["byte_offset"] + e["byte_length"]]
        e["byte_offset"] = offset
        offset += len(chunk)
        chunks.append(chunk)
    manifest["tensors"] = entries
    head = json.dumps(manifest).encode()
    shuffled = data[:7] + struct.pack("<I", len(head)) + head + b"".join(chunks)
    ck = model_io.decode(shuffled)
    assert all(np.array_equal(params[k].data, ck.params[k].data) for k in params)
    assert model_io.encode(ck) == data


def test_float32_export_is_marked_lossy(tmp_path):
    _, params, path = saved(tmp_path, precision="float32")
    ck = model_io.load(path)
    assert ck.precision == "float32"
    assert ck.params["W"].data.dtype == np.float32
    assert np.allclose(ck.params["W"].data, params["W"].data, rtol=1e-6)
    assert b'"lossy":true' in path.read_bytes()
    model_io.save_checkpoint(ck, tmp_path / "b.ckpt")
    assert path.read_bytes() == (tmp_path / "b.ckpt").read_bytes()


# ---------------------------------------------------------------- CSVs

def records():
    out = []
    for seed in range(5):
        r = RunRecord(seed, "occupancy", "ltc", "accuracy", [0.7, 0.5], [0.8, 0.9], 0.9 + seed / 100)
        out.append(r)
    return out


def test_export_metrics(tmp_path):
    written = model_io.export_metrics(records(), tmp_path)
    assert len(written) == 6
    rows = model_io.read_summary_csv(tmp_path / "summary.csv")
    assert len(rows) == 1 and rows[0]["seeds"] == "0;1;2;3;4"
    assert rows[0]["mean"] == pytest.approx(0.92, abs=1e-12)
    assert model_io.read_run_csv(tmp_path / "run_3.csv") == [(1, 0.7, 0.8), (2, 0.5, 0.9)]


def test_empty_summary_is_header_only(tmp_path):
    model_io.write_summary_csv([], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == ",".join(model_io.SUMMARY_HEADER) + "\n"


def test_summary_append(tmp_path):
    model_io.write_summary_csv(records()[:2], tmp_path / "s.csv")
    model_io.write_summary_csv(records()[2:], tmp_path / "s.csv", append=True)
    assert len(model_io.read_summary_csv(tmp_path / "s.csv")) == 2

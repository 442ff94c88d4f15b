import json

import numpy as np
import pytest

from neurosyntax import pipeline, synth
from neurosyntax.bmat import read_matrix, write_bmat
from neurosyntax.config import load_config, parse_config


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    """Small planted-signal dataset shared across pipeline tests."""
    root = tmp_path_factory.mktemp("planted")
    config_path = synth.make_dataset(
        root,
        n_subjects=2,
        n_voxels=300,
        n_tr=282,
        n_sentences=25,
        seed=5,
        planted_space="CC",
        baseline_space="CM",
        planted_roi="MFG",
        snr=10.0,
        subtree_dim=8,
    )
    cfg = load_config(config_path)
    pipeline.cmd_features(cfg)
    pipeline.cmd_encode(cfg)
    return cfg


def test_features_dims_and_dtype(planted):
    cfg = planted
    fdir = cfg.out_dir() / "features"
    pu_meta = json.loads((fdir / "CM.json").read_text())
    assert pu_meta["dim"] == 3
    cc = read_matrix(fdir / "CC.bmat")
    assert cc.shape[1] == cfg.subtree_dim
    assert np.all(np.isfinite(cc))


def test_features_idempotent_bytes(planted):
    cfg = planted
    fdir = cfg.out_dir() / "features"
    before = (fdir / "CC.bmat").read_bytes()
    pipeline.cmd_features(cfg, spaces=["CC"])
    assert (fdir / "CC.bmat").read_bytes() == before


def test_pu_cm_dims_on_tiny_fixture(tmp_path):
    (tmp_path / "t.trees").write_text(
        "(S (NP (PRP I)) (VP (VBD began)) (. .))\n(S (NN dog) (VBD ran))\n"
    )
    (tmp_path / "f.tsv").write_text("i\t1000\nbegan\t1000\ndog\t1000\nran\t1000\n.\t1000\n")
    cfg = parse_config(
        "trees = t.trees\nfrequency = f.tsv\nspaces = PU, CM\nout = o",
        base_dir=str(tmp_path),
    )
    written = pipeline.cmd_features(cfg)
    assert read_matrix(written["PU"]).shape == (5, 12)
    assert read_matrix(written["CM"]).shape == (5, 3)


def test_dep_without_conllu_fails_before_work(tmp_path):
    (tmp_path / "t.trees").write_text("(S (NN dog))\n")
    cfg = parse_config(
        "trees = t.trees\nspaces = DEP\nout = o", base_dir=str(tmp_path)
    )
    with pytest.raises(pipeline.PipelineError, match="conllu"):
        pipeline.cmd_features(cfg)
    assert not (tmp_path / "o").exists()


def test_encode_recovers_planted_signal(planted):
    cfg = planted
    gdir = cfg.out_dir() / "encode" / "CM+CC"
    meta = json.loads((gdir / "s01.json").read_text())
    scores = read_matrix(gdir / "s01.scores.bmat")
    pooled = scores[-1]
    # planted voxels are the first 5%: strong signal there
    n_planted = int(0.05 * len(pooled))
    assert pooled[:n_planted].mean() > 0.8
    assert abs(pooled[n_planted:].mean()) < 0.1
    assert pooled[n_planted:].max() < 0.5
    assert meta["fold_boundaries"][0][0] == 0


def test_encode_tr_mismatch(tmp_path):
    config_path = synth.make_dataset(
        tmp_path, n_subjects=1, n_voxels=20, n_tr=60, n_sentences=8, seed=1
    )
    cfg = load_config(config_path)
    # corrupt the subject data to the wrong TR count
    write_bmat(tmp_path / "s01.bmat", np.zeros((59, 20)) + np.arange(20))
    pipeline.cmd_features(cfg)
    with pytest.raises(pipeline.TrMismatch):
        pipeline.cmd_encode(cfg)


def test_compare_planted_pairwise(planted):
    cfg = planted
    summaries = pipeline.cmd_compare(cfg, "pairwise")
    name = "CM+CC-CM"
    assert name in summaries
    planted_l = [
        s for s in summaries[name] if s.roi == "MFG" and s.hemisphere == "L"
    ]
    assert planted_l and planted_l[0].mean_pct > 50.0
    others = [
        s
        for s in summaries[name]
        if not (s.roi == "MFG" and s.hemisphere == "L")
    ]
    # ROIs hold ~10 voxels at this scale; one stray voxel is ~10%
    assert others and max(s.mean_pct for s in others) < 15.0


def test_compare_missing_encoding(planted):
    cfg = planted
    cfg2 = parse_config(
        (cfg.out_dir().parent / "run.cfg").read_text()
        + "\nstudy_pairwise = CM+CC-PU\n",
        base_dir=str(cfg.out_dir().parent),
    )
    with pytest.raises(pipeline.MissingEncoding):
        pipeline.cmd_compare(cfg2, "pairwise")


def test_report_outputs_and_hash_guard(planted):
    cfg = planted
    pipeline.cmd_compare(cfg, "hierarchical")
    written = pipeline.cmd_report(cfg)
    assert any(p.suffix == ".svg" for p in written)
    csvs = [p for p in written if p.suffix == ".csv"]
    assert csvs
    header = csvs[0].read_text().splitlines()[0]
    assert header.startswith("analysis,roi,hemisphere")
    # values in the SVG title attributes mirror the CSV text exactly
    svg = next(p for p in written if p.suffix == ".svg").read_text()
    body = csvs[0].read_text().splitlines()[1:]
    some_value = body[0].split(",")[4]
    assert f"mean={some_value}" in svg or some_value in svg

    # a foreign-run artifact is refused
    mode_dir = cfg.out_dir() / "compare" / "hierarchical"
    adir = next(d for d in mode_dir.iterdir() if d.is_dir())
    payload = json.loads((adir / "roi_report.json").read_text())
    payload["run_config_hash"] = "deadbeef"
    (adir / "roi_report.json").write_text(json.dumps(payload))
    with pytest.raises(pipeline.HashMismatch):
        pipeline.cmd_report(cfg)


def test_probe_self_prediction(tmp_path):
    config_path = synth.make_dataset(
        tmp_path, n_subjects=1, n_voxels=10, n_tr=60, n_sentences=30, seed=2
    )
    cfg = load_config(config_path)
    pipeline.cmd_features(cfg, spaces=["CC"])
    # continuous stand-in features: self-prediction must be near-perfect
    rng = np.random.default_rng(0)
    dense = rng.standard_normal((read_matrix(cfg.out_dir() / "features" / "CC.bmat").shape[0], 20))
    write_bmat(cfg.out_dir() / "features" / "CC.bmat", dense)
    write_bmat(tmp_path / "targets.bmat", dense)
    cfg.glove = "targets.bmat"
    results = pipeline.cmd_probe(cfg, spaces=["CC"])
    assert results["CC"] > 0.99
    assert (cfg.out_dir() / "probe" / "probe.json").exists()


def test_features_emit_model_artifacts(tmp_path):
    config_path = synth.make_dataset(
        tmp_path, n_subjects=1, n_voxels=10, n_tr=60, n_sentences=10, seed=6
    )
    cfg = load_config(config_path)
    pipeline.cmd_features(cfg, spaces=["INC", "DEP"])
    from neurosyntax.gcn import load_model
    from neurosyntax.incparser import Pcfg

    grammar = Pcfg.loads((cfg.out_dir() / "features" / "INC.pcfg").read_text())
    assert grammar.rules
    model = load_model(cfg.out_dir() / "features" / "DEP.gcn")
    assert model.config.hidden == cfg.gcn_hidden


def test_selftest_passes(capsys):
    assert pipeline.cmd_selftest()
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_identical_subjects_identical_outputs(tmp_path):
    config_path = synth.make_dataset(
        tmp_path, n_subjects=1, n_voxels=30, n_tr=80, n_sentences=10, seed=3
    )
    cfg = load_config(config_path)
    # duplicate the single subject under a second id
    data = (tmp_path / "s01.bmat").read_bytes()
    (tmp_path / "s02.bmat").write_bytes(data)
    parcels = (tmp_path / "s01_parcels.tsv").read_text()
    (tmp_path / "s02_parcels.tsv").write_text(parcels)
    cfg.subjects["s02"] = {"fmri": "s02.bmat", "parcels": "s02_parcels.tsv"}
    pipeline.cmd_features(cfg)
    pipeline.cmd_encode(cfg, groups=["CM+CC"])
    gdir = cfg.out_dir() / "encode" / "CM+CC"
    assert (gdir / "s01.pred.bmat").read_bytes() == (gdir / "s02.pred.bmat").read_bytes()
    assert (gdir / "s01.scores.bmat").read_bytes() == (gdir / "s02.scores.bmat").read_bytes()

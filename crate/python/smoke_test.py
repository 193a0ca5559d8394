#!/usr/bin/env python3
"""Smoke test for the fog_py extension module.

Builds nothing itself: compile the module first with

    cargo build -p fog-py --release

then run

    python3 python/smoke_test.py

The script locates the compiled cdylib under target/, exposes it as an
importable `fog_py` module, and drives the pipeline end to end on synthetic
data.
"""

import json
import math
import shutil
import sys
import sysconfig
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libfog_py.so", "libfog_py.dylib", "fog_py.dll")
    ]
    for candidate in candidates:
        if candidate.exists():
            return candidate
    sys.exit(
        "fog_py cdylib not found; run `cargo build -p fog-py --release` first "
        f"(searched {', '.join(str(c) for c in candidates)})"
    )


def import_fog_py():
    lib = locate_cdylib()
    staging = Path(tempfile.mkdtemp(prefix="fog_py_"))
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(lib, staging / f"fog_py{suffix}")
    sys.path.insert(0, str(staging))
    import fog_py

    return fog_py


def main() -> None:
    fog = import_fog_py()
    print(f"imported fog_py {fog.__version__}")

    # --- synthetic recording -------------------------------------------------
    rec = fog.synthesize(60.0, episodes=[(25.0, 10.0)], seed=7)
    assert len(rec) == 3840, f"expected 3840 samples, got {len(rec)}"
    assert rec.n_freeze_samples() == 640
    rec2 = fog.synthesize(60.0, episodes=[(25.0, 10.0)], seed=7)
    assert rec2.n_freeze_samples() == rec.n_freeze_samples()
    print(f"synthesize: {rec!r}")

    # round-trip through the Daphnet text format
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "p.txt"
        rec.write_daphnet(path)
        reparsed = fog.parse_daphnet(path, patient_id="p1")
        assert len(reparsed) == len(rec)
        assert reparsed.patient_id == "p1"
    print("daphnet round trip: ok")

    # --- features ------------------------------------------------------------
    prepared = rec.preprocess()
    freq = prepared.featurize(group="frequency", sensors="all")
    assert freq.shape[1] == 61, f"frequency/all -> {freq.shape[1]} columns"
    both = prepared.featurize(group="both", sensors="all")
    assert both.shape[1] == 145, f"both/all -> {both.shape[1]} columns"
    trunk = prepared.featurize(group="frequency", sensors="trunk")
    assert trunk.shape[1] == 20
    print(f"featurize: {both!r}")

    # --- SMOTE ---------------------------------------------------------------
    freeze, no_freeze = trunk.class_counts()
    assert 0 < freeze < no_freeze
    balanced = trunk.smote(seed=1)
    b_freeze, b_no_freeze = balanced.class_counts()
    assert b_freeze == b_no_freeze == no_freeze, (b_freeze, b_no_freeze)
    print(f"smote: {freeze}/{no_freeze} -> {b_freeze}/{b_no_freeze}")

    # --- training ------------------------------------------------------------
    model, losses = fog.train_lstm(
        balanced,
        seq_len=4,
        batch_size=32,
        hidden1=8,
        hidden2=4,
        learning_rate=1e-2,
        epochs=15,
        seed=0,
    )
    assert all(math.isfinite(l) for l in losses)
    scores = model.predict(trunk)
    auc, points = fog.roc_auc(scores, trunk.labels())
    assert auc > 0.9, f"training-set AUC {auc}"
    assert points[0][:2] == (0.0, 0.0) and points[-1][:2] == (1.0, 1.0)
    tp, fp, tn, fn = fog.confusion(scores, trunk.labels())
    sens, spec = fog.sens_spec(tp, fp, tn, fn)
    print(f"train_lstm: auc={auc:.4f} sens={sens:.4f} spec={spec:.4f}")

    # checkpoint round trip reproduces predictions exactly
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.json"
        model.save(path)
        reloaded = fog.LstmModel.load(path)
        assert reloaded.predict(trunk) == scores
    print("checkpoint round trip: ok")

    # --- RFE -----------------------------------------------------------------
    reduced, ranking = both.rfe(25)
    assert reduced.shape[1] == 25
    assert sum(1 for _, rank in ranking if rank == 1) == 25
    print(f"rfe: kept {reduced.shape[1]} of {both.shape[1]} columns")

    # --- full experiment through JSON ----------------------------------------
    config = {
        "id": "smoke",
        "data": {
            "kind": "synthetic",
            "synth": {
                "n_patients": 5,
                "duration_s": 30.0,
                "episodes_per_patient": 2,
                "episode_duration_s": 6.0,
            },
        },
        "features": {"kind": "group", "group": "frequency", "sensors": "trunk"},
        "hyper": {
            "seq_len": 2,
            "batch_size": 32,
            "hidden1": 6,
            "hidden2": 3,
            "epochs": 4,
            "learning_rate": 0.01,
        },
        "split": {
            "mode": "subject_independent",
            "train_patients": ["S01", "S02", "S03"],
            "test_patients": ["S04", "S05"],
        },
        "seed": 11,
    }
    report = json.loads(fog.run_experiment_json(json.dumps(config)))
    assert report["experiment"] == "smoke"
    assert 0.0 <= report["auc"] <= 1.0
    assert report["confusion"]["true_pos"] + report["confusion"]["false_neg"] > 0
    print(
        "run_experiment_json: auc={auc:.4f} sens={sens} spec={spec}".format(
            auc=report["auc"], sens=report["sensitivity"], spec=report["specificity"]
        )
    )

    print("smoke test passed")


if __name__ == "__main__":
    main()

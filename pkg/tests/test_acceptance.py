"""Acceptance suite: one test per criterion.

Each test is tagged with ``@pytest.mark.criterion``; the conftest prints a
PASS/FAIL line per criterion at the end of the run. Run it alone with::

    pytest tests/test_acceptance.py -v
"""

import hashlib
import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from coughsel.audio import AudioClip, load_manifest, load_wav, write_wav
from coughsel.metrics import ConfusionMatrix, compute_metrics, render_report
from coughsel.mfcc import compute_mfcc, hz_to_mel, mel_to_hz
from coughsel.pca import fit_pca
from coughsel.pls import fit_pls1, pls_predict
from coughsel.selectors import select_random_frog, select_uve, select_vip
from coughsel.svm import fit_svm
from coughsel.synth import cough_like, make_corpus, non_cough_like
from coughsel.pipeline import sweep

import oracles
from conftest import informative_data

criterion = pytest.mark.criterion

# frozen oracle outputs
MEL_700 = 781.1728387480312
MEL_8000 = 2840.023046708319
TOY_OBJECTIVE_C1 = 4.459725241210252


def _timed(budget_s):
    start = time.perf_counter()
    return lambda: (time.perf_counter() - start, budget_s)


@criterion(1, "metrics reproduction on tp=67 fn=2 fp=5 tn=64")
def test_metrics_reproduction(record_property):
    clock = _timed(1.0)
    row = compute_metrics(ConfusionMatrix(tp=67, fn=2, fp=5, tn=64))
    shown = (round(row.accuracy, 2), round(row.recall, 2), round(row.precision, 2), round(row.f1, 2))
    elapsed, budget = clock()
    record_property("detail", f"acc/rec/prec/F1 = {shown}, {elapsed * 1e3:.1f} ms")
    assert shown == (94.93, 97.10, 93.06, 0.95)
    assert elapsed < budget


@criterion(2, "mel scale reference points and round trip")
def test_mel_scale(record_property):
    clock = _timed(1.0)
    got = [hz_to_mel(f) for f in (0.0, 700.0, 8000.0)]
    grid = np.linspace(0.0, 24000.0, 1000)
    back = mel_to_hz(hz_to_mel(grid))
    rel = np.abs(back - grid) / np.maximum(grid, 1e-300)
    worst = float(np.max(np.where(grid > 0, rel, np.abs(back))))
    elapsed, budget = clock()
    record_property("detail", f"mel = {[round(g, 2) for g in got]}, worst round-trip rel err {worst:.1e}")
    assert np.allclose(got, [0.0, MEL_700, MEL_8000], atol=0.01, rtol=0)
    assert np.allclose(got, [0.0, 781.17, 2840.02], atol=0.01, rtol=0)
    assert worst <= 1e-9
    assert elapsed < budget


@criterion(3, "MFCC agrees with the brute-force DFT/DCT oracle on 10 clips")
def test_mfcc_oracle(record_property):
    clock = _timed(30.0)
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        gen = cough_like if seed % 2 == 0 else non_cough_like
        x = gen(rng, 16000, 1.0)
        got = compute_mfcc(AudioClip(x, 16000)).values
        ref = oracles.mfcc_reference(x)
        assert got.shape == ref.shape == (98, 36)
        worst = max(worst, float(np.abs(got - ref).max()))
    elapsed, budget = clock()
    record_property("detail", f"max abs diff {worst:.1e}, {elapsed:.1f} s")
    assert worst <= 1e-6
    assert elapsed < budget


@criterion(4, "PCA picks the minimal k and reconstructs to the eigenvalue tail")
def test_pca_contract(record_property):
    clock = _timed(5.0)
    X = np.random.default_rng(42).standard_normal((50, 200))
    model = fit_pca(X, 0.95)
    Xc = X - X.mean(axis=0)
    ref = np.linalg.svd(Xc, compute_uv=False) ** 2 / X.shape[0]   # independent spectrum
    ratio = np.cumsum(ref) / ref.sum()
    k_ref = int(np.argmax(ratio >= 0.95)) + 1
    P = model.components_
    ortho = float(np.abs(P @ P.T - np.eye(model.n_components_)).max())
    recon = Xc @ P.T @ P
    err = float(np.sum((Xc - recon) ** 2))
    tail = float(ref[model.n_components_:].sum() * X.shape[0])
    rel = abs(err - tail) / tail
    elapsed, budget = clock()
    record_property("detail", f"k={model.n_components_} (oracle {k_ref}), ortho err {ortho:.1e}, "
                              f"tail rel err {rel:.1e}")
    assert model.n_components_ == k_ref
    assert ratio[k_ref - 1] >= 0.95 and ratio[k_ref - 2] < 0.95
    assert ortho <= 1e-8
    assert rel <= 1e-9
    assert elapsed < budget


@criterion(5, "PLS with A = rank(X) equals ordinary least squares")
def test_pls_ols(record_property):
    clock = _timed(1.0)
    rng = np.random.default_rng(8)
    X = rng.standard_normal((40, 8))
    y = X @ rng.standard_normal(8) + 0.5 * rng.standard_normal(40)
    A = np.column_stack([np.ones(40), X])
    ols = A @ np.linalg.lstsq(A, y, rcond=None)[0]
    pred = pls_predict(fit_pls1(X, y, np.linalg.matrix_rank(X)), X)
    diff = float(np.abs(pred - ols).max())
    elapsed, budget = clock()
    record_property("detail", f"max |pls - ols| {diff:.1e}")
    assert diff <= 1e-6
    assert elapsed < budget


@criterion(6, "VIP mean square is one for every PLS fit; (sqrt 2, 0) two-variable case")
def test_vip_identity(record_property):
    from conftest import VIP_AUDIT

    clock = _timed(1.0)
    X = np.array([[1.0, 1.0], [-1.0, 1.0], [0.0, -2.0]])
    vip = select_vip(X, np.array([1.0, -1.0, 0.0]), 1, n_components=1).importance
    rng = np.random.default_rng(6)
    Xr = rng.standard_normal((60, 30))
    worst_here = max(abs(float(np.mean(fit_pls1(Xr, Xr[:, :5].sum(1) + rng.standard_normal(60), a).vip() ** 2)) - 1)
                     for a in (1, 2, 5, 10, 30))
    elapsed, budget = clock()
    record_property("detail", f"two-variable VIP {vip.tolist()}, {VIP_AUDIT['fits']} fits audited so far, "
                              f"worst {max(worst_here, VIP_AUDIT['worst']):.1e}")
    assert vip.tolist() == [math.sqrt(2.0), 0.0]
    assert worst_here <= 1e-6
    assert VIP_AUDIT["worst"] <= 1e-6
    assert elapsed < budget


@criterion(7, "UVE top-20 holds >= 18 of 20 informative features on 5 seeds")
def test_uve_recovery(record_property):
    clock = _timed(60.0)
    hits = []
    for seed in range(5):
        X, y, informative = informative_data(seed)
        r = select_uve(X, y, 20, random_state=seed)
        hits.append(len(set(r.selected) & set(informative.tolist())))
    elapsed, budget = clock()
    record_property("detail", f"hits per seed {hits}, {elapsed:.1f} s")
    assert min(hits) >= 18
    assert elapsed < budget


@criterion(8, "Random Frog favours informative features on 5 seeds; deterministic")
def test_random_frog(record_property):
    clock = _timed(300.0)
    gaps = []
    first = None
    for seed in range(5):
        X, y, informative = informative_data(seed)
        prob = select_random_frog(X, y, 20, random_state=seed, n_iter=1000).importance
        noise = np.delete(prob, informative)
        gaps.append((float(prob[informative].mean()), float(noise.mean())))
        if seed == 0:
            first = prob
    X, y, _ = informative_data(0)
    again = select_random_frog(X, y, 20, random_state=0, n_iter=1000).importance
    elapsed, budget = clock()
    record_property("detail", "informative/noise mean prob " +
                    ", ".join(f"{a:.2f}/{b:.2f}" for a, b in gaps) + f", {elapsed:.0f} s")
    assert all(a > b for a, b in gaps)
    assert again.tobytes() == first.tobytes()
    assert elapsed < budget


@criterion(9, "SVM matches the analytic case and the grid oracle")
def test_svm_oracle(record_property):
    clock = _timed(30.0)
    two = fit_svm(np.array([[-1.0, 0.0], [1.0, 0.0]]), np.array([-1.0, 1.0]), C=1e3)
    wb = np.append(two.coef_, two.intercept_)
    X, y = oracles.svm_toy_set()
    model = fit_svm(X, y, C=1.0)
    grid_value, _ = oracles.grid_minimize_svm(X, y, 1.0)
    rel = abs(model.objective_ - grid_value) / grid_value
    free = (model.dual_coef_ > 1e-8) & (model.dual_coef_ < 1.0 - 1e-8)
    kkt = float(np.abs(y[free] * model.decision_function(X[free]) - 1.0).max())
    elapsed, budget = clock()
    record_property("detail", f"(w, b) = {np.round(wb, 6).tolist()}, objective rel gap {rel:.1e}, "
                              f"KKT err {kkt:.1e} on {int(free.sum())} free SVs")
    assert np.abs(wb - [1.0, 0.0, 0.0]).max() <= 1e-3
    assert grid_value == pytest.approx(TOY_OBJECTIVE_C1, rel=1e-12)
    assert rel <= 1e-4
    assert free.any() and kkt <= 1e-3
    assert elapsed < budget


# --- end to end ----------------------------------------------------------------

def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _tree_digests(root):
    root = Path(root)
    return {str(p.relative_to(root)): _digest(p) for p in sorted(root.rglob("*")) if p.is_file()}


def _run_sweep(manifest_path, models_dir):
    """Full 15-run sweep; returns the report plus one digest per model file."""
    rows, _ = sweep(load_manifest(manifest_path), seed=0, models_out=models_dir)
    _, csv_text = render_report(rows)
    digests = _tree_digests(models_dir)
    shutil.rmtree(models_dir)   # hundreds of MB; keep only the digests
    return rows, csv_text, digests


@pytest.fixture(scope="module")
def reference_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    start = time.perf_counter()
    manifest = make_corpus(root / "corpus", n_train=200, n_test=60, seed=0)
    rows, csv_text, digests = _run_sweep(manifest, root / "models")
    return {"root": root, "manifest": manifest, "rows": rows, "csv": csv_text,
            "digests": digests, "seconds": time.perf_counter() - start}


@pytest.mark.slow
@criterion(10, "end to end: full sweep reaches uve/k=20 >= 95% and is byte-reproducible")
def test_end_to_end(reference_run, record_property):
    rows = reference_run["rows"]
    failed = [(r.method, r.k, r.error) for r in rows if r.failed]
    uve20 = next(r for r in rows if (r.method, r.k) == ("uve", 20))

    root = reference_run["root"]
    manifest_b = make_corpus(root / "corpus_b", n_train=200, n_test=60, seed=0)
    same_corpus = _tree_digests(root / "corpus") == _tree_digests(root / "corpus_b")
    _, csv_b, digests_b = _run_sweep(manifest_b, root / "models_b")
    same_models = digests_b == reference_run["digests"]

    record_property("detail", f"{len(rows) - len(failed)}/15 runs ok, uve/20 accuracy {uve20.accuracy:.2f}%, "
                              f"first run {reference_run['seconds']:.0f} s, corpus identical {same_corpus}, "
                              f"models identical {same_models}")
    assert len(rows) == 15 and not failed
    assert uve20.accuracy >= 95.0
    assert reference_run["seconds"] < 600
    assert same_corpus and same_models and csv_b == reference_run["csv"]
    assert len(reference_run["digests"]) == 15


@pytest.mark.slow
@criterion(11, "leakage: mutating test WAVs leaves every model file byte-identical")
def test_no_test_leakage(reference_run, record_property):
    root = reference_run["root"]
    mutated = root / "corpus_mutated"
    shutil.copytree(root / "corpus", mutated)
    manifest = load_manifest(mutated / "manifest.csv")
    rng = np.random.default_rng(99)
    changed = 0
    for entry in manifest.split("test"):
        path = manifest.resolve(entry)
        clip = load_wav(path)
        noise = rng.uniform(-0.5, 0.5, clip.n_frames)
        write_wav(path, AudioClip(np.clip(clip.samples[::-1] * 0.5 + noise, -1, 1), clip.sample_rate))
        changed += 1
    assert _tree_digests(mutated / "clips") != _tree_digests(root / "corpus" / "clips")
    rows, _, digests = _run_sweep(mutated / "manifest.csv", root / "models_mutated")
    same = digests == reference_run["digests"]
    record_property("detail", f"{changed} test WAVs rewritten, {len(digests)} model files, identical {same}")
    assert len(digests) == 15
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

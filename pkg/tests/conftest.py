import struct

import numpy as np
import pytest

from coughsel.audio import load_manifest
from coughsel.synth import make_corpus


def wav_bytes(samples, sample_rate=16000, channels=1, fmt="pcm16", data_size=None, riff_size=None):
    """Hand-built RIFF/WAVE bytes, independent of the package writer."""
    samples = np.asarray(samples)
    if fmt == "pcm16":
        payload = samples.astype("<i2").tobytes()
        tag, bits = 1, 16
    elif fmt == "float32":
        payload = samples.astype("<f4").tobytes()
        tag, bits = 3, 32
    elif fmt == "adpcm":
        payload = samples.astype("<i2").tobytes()
        tag, bits = 2, 4
    else:
        raise ValueError(fmt)
    block_align = channels * max(bits // 8, 1)
    fmt_chunk = struct.pack("<HHIIHH", tag, channels, sample_rate,
                            sample_rate * block_align, block_align, bits)
    size = len(payload) if data_size is None else data_size
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    body += b"data" + struct.pack("<I", size) + payload
    riff = len(body) if riff_size is None else riff_size
    return b"RIFF" + struct.pack("<I", riff) + body


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """20+20 training and 6+6 test clips."""
    root = tmp_path_factory.mktemp("corpus")
    return make_corpus(root, n_train=20, n_test=6, seed=3)


@pytest.fixture(scope="session")
def small_manifest(small_corpus):
    return load_manifest(small_corpus)


def informative_data(seed, n=120, p=107, n_informative=20, snr=10.0):
    """X ~ N(0, 1); y linear in the first ``n_informative`` columns plus noise at the given SNR."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:n_informative] = rng.uniform(1.0, 2.0, n_informative) * rng.choice([-1, 1], n_informative)
    signal = X @ beta
    noise = rng.standard_normal(n) * np.sqrt(signal.var() / snr)
    return X, signal + noise, np.arange(n_informative)


# --- VIP audit over every PLS fit in the run ---------------------------------

VIP_AUDIT = {"fits": 0, "worst": 0.0}


@pytest.fixture(scope="session", autouse=True)
def _audit_vip_identity():
    from coughsel.pls import PLS1Regression

    original = PLS1Regression.fit

    def audited(self, X, y):
        out = original(self, X, y)
        dev = abs(float(np.mean(self.vip() ** 2)) - 1.0)
        VIP_AUDIT["fits"] += 1
        VIP_AUDIT["worst"] = max(VIP_AUDIT["worst"], dev)
        return out

    PLS1Regression.fit = audited
    yield
    PLS1Regression.fit = original


# --- acceptance summary: one line per criterion --------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    number, title = mark.args
    ok = call.excinfo is None
    detail = dict(item.user_properties).get("detail", "")
    if call.excinfo is not None and not detail:
        detail = call.excinfo.exconly().splitlines()[0][:160]
    _CRITERIA[number] = (title, ok, detail)


def pytest_sessionfinish(session, exitstatus):
    if 6 in _CRITERIA and VIP_AUDIT["worst"] > 1e-6:
        title, _, detail = _CRITERIA[6]
        _CRITERIA[6] = (title, False, f"suite-wide worst |mean(VIP^2) - 1| = {VIP_AUDIT['worst']:.2e}")
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        line = f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
    terminalreporter.write_line(
        f"      (VIP audit: {VIP_AUDIT['fits']} PLS fits, worst |mean(VIP^2) - 1| = {VIP_AUDIT['worst']:.1e})")

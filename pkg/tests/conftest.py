import numpy as np
import pytest

from kwspot.audio import AudioClip, save_wav


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def noise_clip(rng, n, amp=0.3):
    return AudioClip(np.clip(amp * rng.standard_normal(n), -1, 1))


def tone_clip(freq, n, amp=0.5, phase=0.0, sr=16000):
    t = np.arange(n) / sr
    return AudioClip(amp * np.sin(2 * np.pi * freq * t + phase))


@pytest.fixture
def corpus(tmp_path, rng):
    """Small on-disk corpus: keywords, backgrounds and noises as PCM16 WAVs."""
    root = tmp_path / "corpus"
    for sub in ("kw", "bg", "noise"):
        (root / sub).mkdir(parents=True)
    for i in range(5):
        n = 20000 if i % 2 == 0 else 17000
        kw = np.zeros(n)
        start = rng.integers(0, n - 8000)
        kw[start:start + 8000] = 0.4 * np.sin(2 * np.pi * (300 + 50 * i) * np.arange(8000) / 16000)
        save_wav(AudioClip(kw), root / "kw" / f"kw{i}.wav")
    for i in range(2):
        save_wav(noise_clip(rng, 48000 + 8000 * i, 0.2), root / "bg" / f"bg{i}.wav")
    save_wav(noise_clip(rng, 40000, 0.5), root / "noise" / "white.wav")
    return root


class Criterion:
    """Collects a one-line account of an acceptance criterion as it runs."""

    def __init__(self, number: int):
        self.number = number
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)
        print(f"criterion {self.number}: {text}")


@pytest.fixture
def criterion(request):
    crit = Criterion(int(request.node.get_closest_marker("criterion").args[0]))
    request.node.user_properties.append(("criterion", crit))
    return crit


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    results = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            crit = dict(rep.user_properties).get("criterion") if rep.when == "call" else None
            if crit is not None:
                results.append((crit.number, "PASS" if outcome == "passed" else "FAIL", "; ".join(crit.details)))
    if results:
        terminalreporter.section("acceptance criteria")
        for number, verdict, detail in sorted(results):
            terminalreporter.write_line(f"{verdict}  criterion {number:>2}: {detail}")

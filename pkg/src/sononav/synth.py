"""FM synthesis of the navigation audio stream.

A single pulse-tone voice (or a summed chord of voices in the static
phases) is gated by an attack/exponential-decay envelope that restarts
every pulse interval. Control changes are onset-quantized: a retune within
the same phase waits for the next pulse onset so no pulse is bent mid
flight; a phase change instead fades the running pulse out over a few
milliseconds and restarts immediately, so transitions are heard where
they happen.

Earcons render as short note sequences and are mixed over the stream,
which ducks by a configured amount (slewed, never stepped) while they
play. Everything here is deterministic: the offline renderer produces
byte-identical output for identical session logs.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .mapping import EarconSpec, MappingConfig, SynthMode, SynthParams, earcons_for

_DECAY_LN = math.log(1000.0)  # -60 dB


@dataclass(frozen=True)
class SynthConfig:
    """FM patch, envelope, and output-chain settings."""

    sample_rate_hz: int = 48000
    block_frames: int = 256
    harmonicity_ratio: float = 1.0   # modulator = carrier * ratio
    modulation_index: float = 1.0    # keeps the fundamental the dominant partial
    attack_s: float = 0.005
    decay_fraction: float = 0.5      # envelope hits -60 dB at this point of the interval
    master_gain: float = 0.6
    earcon_gain: float = 0.5         # relative to master
    duck_db: float = -6.0
    duck_slew_s: float = 0.005
    phase_change_fade_frames: int = 128

    def __post_init__(self):
        if self.sample_rate_hz < 8000:
            raise ValueError(f"invalid sample rate {self.sample_rate_hz}: minimum 8000 Hz")
        if not 0.0 < self.master_gain <= 1.0:
            raise ValueError("master_gain must be in (0, 1]")
        if not 0.0 < self.earcon_gain <= 1.0:
            raise ValueError("earcon_gain must be in (0, 1]")
        if self.attack_s <= 0 or not 0.0 < self.decay_fraction <= 1.0:
            raise ValueError("envelope parameters out of range")

    @property
    def duck_gain(self) -> float:
        return 10.0 ** (self.duck_db / 20.0)


@dataclass(frozen=True)
class AudioBlock:
    """Mono sample block; samples are float64 in [-1, 1]."""

    sample_rate_hz: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


class FmVoice:
    """One FM oscillator pair with persistent phase accumulators."""

    __slots__ = ("carrier_hz", "harmonicity_ratio", "modulation_index",
                 "phase_carrier", "phase_modulator")

    def __init__(self, carrier_hz: float, harmonicity_ratio: float = 1.0,
                 modulation_index: float = 1.0):
        self.carrier_hz = float(carrier_hz)
        self.harmonicity_ratio = float(harmonicity_ratio)
        self.modulation_index = float(modulation_index)
        self.phase_carrier = 0.0
        self.phase_modulator = 0.0

    def render(self, frames: int, sample_rate_hz: int) -> np.ndarray:
        """y[n] = sin(phi_c[n] + I * sin(phi_m[n])), unit amplitude."""
        k = np.arange(frames)
        w_c = 2.0 * math.pi * self.carrier_hz / sample_rate_hz
        w_m = w_c * self.harmonicity_ratio
        phi_m = self.phase_modulator + w_m * k
        y = np.sin(self.phase_carrier + w_c * k
                   + self.modulation_index * np.sin(phi_m))
        self.phase_carrier = (self.phase_carrier + w_c * frames) % (2.0 * math.pi)
        self.phase_modulator = (self.phase_modulator + w_m * frames) % (2.0 * math.pi)
        return y


def _envelope(offsets: np.ndarray, interval_s: float,
              config: SynthConfig) -> np.ndarray:
    """Pulse envelope amplitude at the given sample offsets since onset."""
    fs = config.sample_rate_hz
    attack_n = max(1, round(config.attack_s * fs))
    decay_s = max(config.decay_fraction * interval_s - config.attack_s, 1e-3)
    tau_n = decay_s * fs / _DECAY_LN
    return np.where(offsets < attack_n,
                    offsets / attack_n,
                    np.exp(-(offsets - attack_n) / tau_n))


def _note_envelope(frames: int, duration_s: float, config: SynthConfig) -> np.ndarray:
    offsets = np.arange(frames)
    fs = config.sample_rate_hz
    attack_n = max(1, min(round(config.attack_s * fs), frames // 4))
    tau_n = max((duration_s * fs - attack_n), 1.0) / _DECAY_LN
    return np.where(offsets < attack_n,
                    offsets / attack_n,
                    np.exp(-(offsets - attack_n) / tau_n))


class PulseStreamSynth:
    """Stateful renderer for the continuous pulse-tone stream.

    Parameters arrive via `set_params` (latest value wins); they are
    installed at the next pulse onset, or - on a phase/mode change -
    after a short fade of the running pulse. Before any parameters are
    set the stream renders silence.
    """

    def __init__(self, config: SynthConfig = SynthConfig()):
        self.config = config
        self._params: SynthParams | None = None
        self._pending: SynthParams | None = None
        self._voices: list[FmVoice] = []
        self._since_onset = 0
        self._to_next_onset = 0
        self._fade_total = 0
        self._fade_left = 0

    def set_params(self, params: SynthParams) -> None:
        self._pending = params
        if self._params is None:
            return  # first onset happens at the next rendered sample
        phase_change = (params.active_phase is not self._params.active_phase
                        or params.mode is not self._params.mode)
        if phase_change and self._fade_left == 0:
            self._fade_total = self._fade_left = self.config.phase_change_fade_frames

    def render_block(self, params: SynthParams | None, frame_count: int) -> AudioBlock:
        """Apply params (if given) and render one block."""
        if params is not None:
            self.set_params(params)
        return AudioBlock(self.config.sample_rate_hz, self.render(frame_count))

    def render(self, frames: int) -> np.ndarray:
        out = np.zeros(frames)
        pos = 0
        while pos < frames:
            if self._params is None:
                if self._pending is None:
                    break  # silence
                self._onset()
                continue
            if self._fade_left > 0:
                n = min(frames - pos, self._fade_left)
                seg = self._render_tone(n)
                done = self._fade_total - self._fade_left
                seg *= 1.0 - (done + np.arange(1, n + 1)) / self._fade_total
                self._fade_left -= n
                out[pos:pos + n] = seg
                pos += n
                if self._fade_left == 0:
                    self._onset()
                continue
            if self._to_next_onset == 0:
                self._onset()
                continue
            n = min(frames - pos, self._to_next_onset)
            out[pos:pos + n] = self._render_tone(n)
            self._to_next_onset -= n
            pos += n
        return out

    def _onset(self) -> None:
        if self._pending is not None:
            self._install(self._pending)
            self._pending = None
        self._since_onset = 0
        self._fade_left = 0
        self._to_next_onset = max(
            1, round(self._params.pulse_interval_s * self.config.sample_rate_hz))

    def _install(self, params: SynthParams) -> None:
        if params.mode is SynthMode.CHORD:
            freqs = params.chord_freqs_hz
        else:
            freqs = (params.fundamental_hz,)
        while len(self._voices) < len(freqs):
            self._voices.append(FmVoice(freqs[0], self.config.harmonicity_ratio,
                                        self.config.modulation_index))
        del self._voices[len(freqs):]
        for voice, freq in zip(self._voices, freqs):
            voice.carrier_hz = float(freq)
        self._params = params

    def _render_tone(self, n: int) -> np.ndarray:
        offsets = self._since_onset + np.arange(n)
        env = _envelope(offsets, self._params.pulse_interval_s, self.config)
        mix = np.zeros(n)
        for voice in self._voices:
            mix += voice.render(n, self.config.sample_rate_hz)
        mix /= len(self._voices)
        self._since_onset += n
        return self.config.master_gain * env * mix


def render_earcon(spec: EarconSpec, config: SynthConfig = SynthConfig()) -> AudioBlock:
    """Render an earcon as sequential enveloped FM notes.

    Total length is the sum of the per-note lengths; an empty note list
    yields a zero-length block.
    """
    fs = config.sample_rate_hz
    note_frames = round(spec.note_duration_s * fs)
    chunks = []
    for freq in spec.note_freqs_hz:
        voice = FmVoice(freq, config.harmonicity_ratio, config.modulation_index)
        env = _note_envelope(note_frames, spec.note_duration_s, config)
        chunks.append(config.master_gain * env * voice.render(note_frames, fs))
    samples = np.concatenate(chunks) if chunks else np.zeros(0)
    return AudioBlock(fs, samples)


class StreamMixer:
    """Pulse stream plus a sequential earcon queue with slewed ducking."""

    def __init__(self, config: SynthConfig = SynthConfig()):
        self.config = config
        self.stream = PulseStreamSynth(config)
        self._earcons: list[tuple[np.ndarray, int]] = []  # (samples, play offset)
        self._duck = 1.0

    def set_params(self, params: SynthParams) -> None:
        self.stream.set_params(params)

    def enqueue_earcon(self, spec: EarconSpec) -> None:
        block = render_earcon(spec, self.config)
        if len(block):
            self._earcons.append((self.config.earcon_gain * block.samples, 0))

    def render(self, frames: int) -> np.ndarray:
        base = self.stream.render(frames)
        ear = np.zeros(frames)
        runs: list[tuple[int, int, bool]] = []  # [start, end) x earcon-active
        pos = 0
        while pos < frames and self._earcons:
            buf, off = self._earcons[0]
            take = min(frames - pos, len(buf) - off)
            ear[pos:pos + take] = buf[off:off + take]
            runs.append((pos, pos + take, True))
            if off + take == len(buf):
                self._earcons.pop(0)
            else:
                self._earcons[0] = (buf, off + take)
            pos += take
        if pos < frames:
            runs.append((pos, frames, False))
        return base * self._duck_gains(runs, frames) + ear

    def _duck_gains(self, runs, frames: int) -> np.ndarray:
        """Per-sample duck gain: slew linearly toward the run's target."""
        cfg = self.config
        slew_n = max(1, round(cfg.duck_slew_s * cfg.sample_rate_hz))
        step = (1.0 - cfg.duck_gain) / slew_n
        gains = np.empty(frames)
        g = self._duck
        for start, end, active in runs:
            target = cfg.duck_gain if active else 1.0
            k = np.arange(1, end - start + 1)
            delta = g - target
            mag = np.maximum(0.0, abs(delta) - step * k)
            gains[start:end] = target + math.copysign(1.0, delta) * mag
            if end > start:
                g = gains[end - 1]
        self._duck = g
        return gains


def offline_render(log, synth_config: SynthConfig = SynthConfig(),
                   mapping_config: MappingConfig = MappingConfig(),
                   tail_s: float = 0.5):
    """Deterministically render a session log to audio.

    Returns (AudioBlock, event_map) where event_map lists
    (sample_index, TransitionEvent) for every event in the log. Identical
    inputs produce byte-identical sample sequences; an empty log renders
    to a zero-length block.

    Raises ValueError on a malformed log (decreasing timestamps).
    """
    fs = synth_config.sample_rate_hz
    mixer = StreamMixer(synth_config)
    chunks: list[np.ndarray] = []
    event_map: list[tuple[int, object]] = []
    cursor = 0
    for record in log.records:
        target = round(record.timestamp_s * fs)
        if target < cursor:
            raise ValueError(
                f"malformed session log: timestamp {record.timestamp_s} goes backward")
        if target > cursor:
            chunks.append(mixer.render(target - cursor))
            cursor = target
        mixer.set_params(record.synth)
        for event in record.events:
            event_map.append((cursor, event))
        for spec in earcons_for(list(record.events), mapping_config):
            mixer.enqueue_earcon(spec)
    if log.records:
        tail = round(tail_s * fs)
        if tail > 0:
            chunks.append(mixer.render(tail))
    samples = np.concatenate(chunks) if chunks else np.zeros(0)
    return AudioBlock(fs, samples), event_map


def _encode_payload(samples: np.ndarray, sample_format: str) -> tuple[int, int, bytes]:
    samples = np.clip(samples, -1.0, 1.0)
    if sample_format == "pcm16":
        return 1, 16, (np.round(samples * 32767.0).astype("<i2")).tobytes()
    if sample_format == "float32":
        return 3, 32, samples.astype("<f4").tobytes()
    raise ValueError(f"unsupported sample format {sample_format!r}")


def write_wav(path, block: AudioBlock, sample_format: str = "float32") -> None:
    """Write a mono RIFF WAV file, 16-bit PCM or 32-bit float."""
    fmt_tag, bits, payload = _encode_payload(block.samples, sample_format)
    rate = block.sample_rate_hz
    block_align = bits // 8
    n = len(block)
    fact = b"fact" + struct.pack("<II", 4, n) if fmt_tag == 3 else b""
    header = b"WAVE" + b"fmt " + struct.pack(
        "<IHHIIHH", 16, fmt_tag, 1, rate, rate * block_align, block_align, bits)
    data = b"data" + struct.pack("<I", len(payload)) + payload
    body = header + fact + data
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


class NullSink:
    """Audio sink that discards everything (headless operation)."""

    def write(self, samples: np.ndarray) -> None:
        pass

    def close(self) -> None:
        pass


class WavFileSink:
    """Streaming WAV sink: blocks append as they render, the RIFF sizes
    are patched on close. The live render path writes through this."""

    def __init__(self, path, sample_rate_hz: int, sample_format: str = "float32"):
        self._format = sample_format
        self._rate = sample_rate_hz
        self._frames = 0
        self._fh = open(path, "wb")
        self._write_header()

    def _write_header(self) -> None:
        fmt_tag, bits, _ = _encode_payload(np.zeros(0), self._format)
        block_align = bits // 8
        self._fh.write(b"RIFF" + struct.pack("<I", 0) + b"WAVE")
        self._fh.write(b"fmt " + struct.pack(
            "<IHHIIHH", 16, fmt_tag, 1, self._rate, self._rate * block_align,
            block_align, bits))
        if fmt_tag == 3:
            self._fact_pos = self._fh.tell() + 8
            self._fh.write(b"fact" + struct.pack("<II", 4, 0))
        else:
            self._fact_pos = None
        self._data_pos = self._fh.tell() + 4
        self._fh.write(b"data" + struct.pack("<I", 0))

    def write(self, samples: np.ndarray) -> None:
        _, _, payload = _encode_payload(np.asarray(samples, dtype=float),
                                        self._format)
        self._fh.write(payload)
        self._frames += len(samples)

    def close(self) -> None:
        if self._fh.closed:
            return
        _, bits, _ = _encode_payload(np.zeros(0), self._format)
        data_bytes = self._frames * (bits // 8)
        end = self._fh.tell()
        self._fh.seek(4)
        self._fh.write(struct.pack("<I", end - 8))
        if self._fact_pos is not None:
            self._fh.seek(self._fact_pos)
            self._fh.write(struct.pack("<I", self._frames))
        self._fh.seek(self._data_pos)
        self._fh.write(struct.pack("<I", data_bytes))
        self._fh.close()

"""Synthesis tests: spectral content, pulse timing, click-freedom,
earcon structure, deterministic offline rendering."""

import math
import time

import numpy as np
import pytest

from sononav.fsm import Phase, TransitionEvent, TransitionKind
from sononav.geometry import AnatomicalFrame, ErrorVector, PlannedTrajectory, Pose
from sononav.mapping import (
    EarconKind,
    EarconSpec,
    MappingConfig,
    SynthMode,
    SynthParams,
    earcons_for,
    map_params,
)
from sononav.session import SessionLog, SessionRecord, TargetPlan
from sononav.synth import (
    AudioBlock,
    FmVoice,
    PulseStreamSynth,
    StreamMixer,
    SynthConfig,
    offline_render,
    render_earcon,
    write_wav,
)
from oracles_audio import (
    detect_onsets,
    dominant_freq,
    has_peak_near,
    total_harmonic_distortion,
    track_pitch,
)

CFG = SynthConfig()
FS = CFG.sample_rate_hz
MAPPING = MappingConfig()


def ep_params(fundamental=880.0, interval=0.35):
    return SynthParams(SynthMode.PULSE_STREAM, fundamental, interval, Phase.EP)


def fp_params():
    return map_params(Phase.FP, (0, 0, 0, 0), MAPPING)


class TestFmVoice:
    def test_zero_index_is_pure_sine(self):
        voice = FmVoice(880.0, 1.0, 0.0)
        samples = voice.render(FS, FS)
        thd = total_harmonic_distortion(samples, FS, 880.0)
        assert thd < 1e-3  # < 0.1%

    def test_output_bounded(self):
        voice = FmVoice(1760.0, 1.0, 2.5)
        samples = voice.render(FS, FS)
        assert np.max(np.abs(samples)) <= 1.0

    def test_phase_continuity_across_blocks(self):
        one = FmVoice(440.0, 1.0, 1.0)
        whole = one.render(4096, FS)
        two = FmVoice(440.0, 1.0, 1.0)
        split = np.concatenate([two.render(1000, FS), two.render(3096, FS)])
        assert np.allclose(whole, split, atol=1e-9)


class TestPulseStream:
    def test_first_pulse_peak_at_fundamental(self):
        synth = PulseStreamSynth(CFG)
        block = synth.render_block(ep_params(880.0, 0.35), FS)
        got = dominant_freq(block.samples, FS, nfft=4096)
        assert abs(got - 880.0) <= FS / 4096  # within one bin

    def test_fp_chord_has_four_peaks(self):
        synth = PulseStreamSynth(CFG)
        block = synth.render_block(fp_params(), FS)
        for freq in (440.0, 523.25, 659.26, 880.0):
            assert has_peak_near(block.samples, FS, freq), freq

    def test_pulse_spacing_matches_interval(self):
        synth = PulseStreamSynth(CFG)
        block = synth.render_block(ep_params(880.0, 0.2), 2 * FS)
        onsets = detect_onsets(block.samples, FS)
        assert len(onsets) >= 8
        gaps = np.diff(onsets)
        assert np.all(np.abs(gaps - 0.2 * FS) <= CFG.block_frames)

    def test_silence_before_params(self):
        synth = PulseStreamSynth(CFG)
        assert np.all(synth.render(1024) == 0.0)

    def test_requested_length_always_honored(self):
        synth = PulseStreamSynth(CFG)
        synth.set_params(ep_params())
        for n in (1, 7, 256, 999, 48000):
            assert len(synth.render(n)) == n

    def test_same_phase_retune_waits_for_onset(self):
        # halfway through a pulse, retune within EP: the sounding pulse
        # must keep its pitch until the next onset
        synth = PulseStreamSynth(CFG)
        synth.set_params(ep_params(880.0, 0.3))
        head = synth.render(int(0.05 * FS))
        synth.set_params(ep_params(1760.0, 0.3))
        tail = synth.render(int(0.2 * FS))
        # the remainder of the first pulse still rings at 880
        assert abs(track_pitch(tail[:int(0.04 * FS)], FS, fmin=500, fmax=2200)
                   - 880.0) < 15.0
        # after the onset (0.3 s from start), the new pitch sounds
        synth2_tail = synth.render(int(0.15 * FS))
        seg = synth2_tail[int(0.06 * FS):int(0.1 * FS)]
        assert abs(track_pitch(seg, FS, fmin=500, fmax=2200) - 1760.0) < 30.0
        assert len(head) == int(0.05 * FS)

    def test_phase_change_restarts_within_fade(self):
        synth = PulseStreamSynth(CFG)
        synth.set_params(ep_params(880.0, 0.35))
        synth.render(int(0.02 * FS))  # mid-pulse
        synth.set_params(fp_params())
        out = synth.render(FS)
        # chord fundamental appears right after the fade window
        seg = out[CFG.phase_change_fade_frames:CFG.phase_change_fade_frames + 4096]
        assert has_peak_near(seg, FS, 440.0)

    def test_no_click_across_parameter_changes(self):
        rng = np.random.default_rng(3)
        synth = PulseStreamSynth(CFG)
        phases = [Phase.EP, Phase.AP, Phase.IP, Phase.FP]
        previous_tail = 0.0
        for _ in range(60):
            phase = phases[rng.integers(0, 4)]
            params = map_params(phase, tuple(rng.uniform(0, 1, 4)), MAPPING)
            synth.set_params(params)
            seg = synth.render(int(0.05 * FS))
            jumps = np.abs(np.diff(np.concatenate([[previous_tail], seg])))
            assert np.max(jumps) < 0.3
            previous_tail = seg[-1]

    def test_never_clips(self):
        rng = np.random.default_rng(5)
        synth = PulseStreamSynth(CFG)
        peak = 0.0
        for _ in range(40):
            phase = (Phase.EP, Phase.AP, Phase.IP, Phase.FP)[rng.integers(0, 4)]
            synth.set_params(map_params(phase, tuple(rng.uniform(0, 1, 4)), MAPPING))
            peak = max(peak, float(np.max(np.abs(synth.render(int(0.08 * FS))))))
        assert peak <= 1.0

    def test_render_faster_than_realtime(self):
        synth = PulseStreamSynth(CFG)
        synth.set_params(ep_params(1200.0, 0.12))
        start = time.perf_counter()
        synth.render(FS)  # one second of audio
        assert time.perf_counter() - start < 0.1

    def test_low_sample_rate_rejected(self):
        with pytest.raises(ValueError):
            SynthConfig(sample_rate_hz=4000)


class TestEarcons:
    def test_transition_up_eight_ascending_onsets(self):
        spec = earcons_for([TransitionEvent(TransitionKind.EP_TO_AP)], MAPPING)[0]
        block = render_earcon(spec, CFG)
        onsets = detect_onsets(block.samples, FS)
        assert len(onsets) == 8
        note_n = round(spec.note_duration_s * FS)
        pitches = []
        for k in range(8):
            seg = block.samples[k * note_n + 400:(k + 1) * note_n - 200]
            pitches.append(track_pitch(seg, FS, fmin=300, fmax=1200))
        assert all(a < b for a, b in zip(pitches, pitches[1:]))
        assert pitches == pytest.approx(list(spec.note_freqs_hz), rel=0.02)

    def test_optimum_has_two_onsets(self):
        spec = EarconSpec(EarconKind.OPTIMUM_X_PHI, (1320.0, 1760.0), 0.08)
        block = render_earcon(spec, CFG)
        assert len(detect_onsets(block.samples, FS)) == 2
        assert len(block) == 2 * round(0.08 * FS)

    def test_empty_spec_gives_zero_length(self):
        block = render_earcon(EarconSpec(EarconKind.OPTIMUM_X_PHI, (), 0.08), CFG)
        assert len(block) == 0


class TestMixer:
    def test_earcon_ducks_stream(self):
        mixer = StreamMixer(CFG)
        mixer.set_params(ep_params(880.0, 0.1))
        mixer.render(FS)  # settle
        spec = earcons_for([TransitionEvent(TransitionKind.EP_TO_AP)], MAPPING)[0]
        mixer.enqueue_earcon(spec)
        during = mixer.render(int(0.3 * FS))
        assert np.max(np.abs(during)) <= 1.0
        after = mixer.render(FS)
        assert np.max(np.abs(after)) <= 1.0

    def test_mix_has_no_click_at_duck_boundaries(self):
        mixer = StreamMixer(CFG)
        mixer.set_params(ep_params(1760.0, 0.1))
        out1 = mixer.render(int(0.25 * FS))
        spec = earcons_for([TransitionEvent(TransitionKind.AP_TO_EP)], MAPPING)[0]
        mixer.enqueue_earcon(spec)
        out2 = mixer.render(FS)
        samples = np.concatenate([out1, out2])
        assert np.max(np.abs(np.diff(samples))) < 0.3


def make_log(records):
    plan = TargetPlan(
        targets=(PlannedTrajectory(np.zeros(3), np.array([0.0, 1.0, 0.0])),),
        labels=("T0",),
        frame=AnatomicalFrame.identity())
    return SessionLog(plan=plan, records=records)


def tick(t, phase, params, events=()):
    pose = Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))
    error = ErrorVector(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return SessionRecord(t, pose, 0, error, phase, params, tuple(events))


class TestOfflineRender:
    def _demo_log(self):
        recs = []
        for i in range(50):  # 1 s of EP at 50 Hz
            recs.append(tick(i / 50.0, Phase.EP, ep_params(1000.0, 0.2)))
        recs.append(tick(1.0, Phase.AP,
                         SynthParams(SynthMode.PULSE_STREAM, 220.0, 0.15, Phase.AP),
                         [TransitionEvent(TransitionKind.EP_TO_AP)]))
        for i in range(51, 100):
            recs.append(tick(i / 50.0, Phase.AP,
                             SynthParams(SynthMode.PULSE_STREAM, 220.0, 0.15, Phase.AP)))
        return make_log(recs)

    def test_replaying_same_log_is_byte_identical(self):
        log = self._demo_log()
        a, map_a = offline_render(log, CFG, MAPPING)
        b, map_b = offline_render(log, CFG, MAPPING)
        assert a.samples.tobytes() == b.samples.tobytes()
        assert map_a == map_b

    def test_fp_entry_lands_within_one_block(self):
        recs = [tick(i / 50.0, Phase.AP,
                     SynthParams(SynthMode.PULSE_STREAM, 110.0, 0.35, Phase.AP))
                for i in range(150)]
        recs.append(tick(3.0, Phase.FP, fp_params(),
                         [TransitionEvent(TransitionKind.AP_TO_FP)]))
        for i in range(151, 200):
            recs.append(tick(i / 50.0, Phase.FP, fp_params()))
        block, event_map = offline_render(make_log(recs), CFG, MAPPING, tail_s=1.0)
        fp_sample = round(3.0 * FS)
        assert event_map == [(fp_sample, TransitionEvent(TransitionKind.AP_TO_FP))]
        seg = block.samples[fp_sample + CFG.block_frames:
                            fp_sample + CFG.block_frames + 4096]
        for freq in (440.0, 523.25, 659.26, 880.0):
            assert has_peak_near(seg, FS, freq), freq

    def test_empty_log_renders_zero_length(self):
        block, event_map = offline_render(make_log([]), CFG, MAPPING)
        assert len(block) == 0
        assert event_map == []

    def test_backward_timestamps_rejected(self):
        recs = [tick(1.0, Phase.EP, ep_params()), tick(0.5, Phase.EP, ep_params())]
        with pytest.raises(ValueError):
            offline_render(make_log(recs), CFG, MAPPING)


class TestWav:
    def test_pcm16_and_float32_headers(self, tmp_path):
        block = AudioBlock(FS, np.sin(np.linspace(0, 100, 4800)))
        for fmt, tag, bits in (("pcm16", 1, 16), ("float32", 3, 32)):
            path = tmp_path / f"out_{fmt}.wav"
            write_wav(path, block, fmt)
            raw = path.read_bytes()
            assert raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"
            assert int.from_bytes(raw[20:22], "little") == tag
            assert int.from_bytes(raw[34:36], "little") == bits
            assert int.from_bytes(raw[24:28], "little") == FS

    def test_pcm16_round_trip_via_wave_module(self, tmp_path):
        import wave
        block = AudioBlock(FS, 0.5 * np.sin(2 * np.pi * 440 * np.arange(4800) / FS))
        path = tmp_path / "rt.wav"
        write_wav(path, block, "pcm16")
        with wave.open(str(path)) as fh:
            assert fh.getframerate() == FS
            assert fh.getnchannels() == 1
            decoded = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
        assert np.max(np.abs(decoded / 32767.0 - block.samples)) < 1e-4

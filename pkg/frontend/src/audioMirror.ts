// Local audio mirror: re-synthesizes the engine's sound from the synth
// parameters carried by each state frame (parameters are tiny and the
// mapping is normative, so no audio streams over the bridge).
//
// MirrorCore is the pure part: it tracks the frame parameters verbatim
// (the mirror invariant: fundamental and pulse interval equal the frame
// values as soon as the frame applies) and schedules pulse onsets, with
// parameter changes taking effect at the next onset like the engine.
// WebAudioMirror puts that scheduling onto FM voice pairs.

import type { StateFrame, SynthValues } from "./protocol.js";

export interface ScheduledPulse {
  atS: number;
  freqs: number[];
  intervalS: number;
}

// earcon pitch tables mirror the engine's shipped mapping defaults
const SCALE_UP = [0, 2, 4, 5, 7, 9, 11, 12].map((s) => 440 * 2 ** (s / 12));
const EARCONS: Record<string, { notes: number[]; noteS: number }> = {
  "dimension_reached:x": { notes: [1320, 1760], noteS: 0.08 },
  "dimension_reached:phi": { notes: [1320, 1760], noteS: 0.08 },
  "dimension_reached:y": { notes: [1320, 1567.98], noteS: 0.08 },
  "dimension_reached:delta": { notes: [1320, 1567.98], noteS: 0.08 },
  ep_to_ap: { notes: SCALE_UP, noteS: 0.06 },
  ap_to_ep: { notes: [...SCALE_UP].reverse(), noteS: 0.06 },
};

export interface EarconPlayback {
  notes: number[];
  noteS: number;
}

export class MirrorCore {
  /** Latest frame parameters, verbatim. */
  params: SynthValues | null = null;
  private pending: SynthValues | null = null;
  private nextOnsetS: number | null = null;

  /** Returns the earcons this frame triggers, in causal order. */
  applyFrame(frame: StateFrame): EarconPlayback[] {
    if (frame.synth) {
      this.params = frame.synth;
      this.pending = frame.synth;
    }
    const earcons: EarconPlayback[] = [];
    for (const event of frame.events) {
      const spec = EARCONS[event];
      if (spec) earcons.push(spec);
    }
    return earcons;
  }

  /**
   * Pulse onsets to program in [now, now + horizon). The interval in
   * force at each onset comes from the parameters pending at that onset.
   */
  schedulePulses(nowS: number, horizonS: number): ScheduledPulse[] {
    if (this.params === null) return [];
    if (this.nextOnsetS === null || this.nextOnsetS < nowS - 1.0) {
      this.nextOnsetS = nowS;
    }
    const pulses: ScheduledPulse[] = [];
    while (this.nextOnsetS < nowS + horizonS) {
      const active = this.pending ?? this.params;
      this.pending = null;
      const freqs =
        active.mode === "chord" && active.chord_freqs_hz
          ? active.chord_freqs_hz
          : [active.fundamental_hz];
      pulses.push({ atS: this.nextOnsetS, freqs, intervalS: active.pulse_interval_s });
      this.nextOnsetS += active.pulse_interval_s;
    }
    return pulses;
  }
}

const VOICES = 4;
const ATTACK_S = 0.005;
const MASTER_GAIN = 0.2;
const DUCK_GAIN = 0.5;

/** FM voice pairs on a real AudioContext, driven by MirrorCore. */
export class WebAudioMirror {
  readonly core = new MirrorCore();
  private ctx: AudioContext | null = null;
  private carriers: OscillatorNode[] = [];
  private gains: GainNode[] = [];
  private duck: GainNode | null = null;
  private timer: number | null = null;
  private earconEnd = 0;

  get running(): boolean {
    return this.ctx !== null;
  }

  /** Must be called from a user gesture (browser autoplay policy). */
  async start(): Promise<void> {
    if (this.ctx) return;
    const ctx = new AudioContext();
    await ctx.resume();
    this.ctx = ctx;
    this.duck = ctx.createGain();
    const master = ctx.createGain();
    master.gain.value = MASTER_GAIN;
    this.duck.connect(master);
    master.connect(ctx.destination);
    for (let i = 0; i < VOICES; i++) {
      const carrier = ctx.createOscillator();
      const modulator = ctx.createOscillator();
      const modGain = ctx.createGain();
      const voiceGain = ctx.createGain();
      voiceGain.gain.value = 0;
      modulator.connect(modGain);
      modGain.connect(carrier.frequency); // phase-equivalent FM, index 1
      carrier.connect(voiceGain);
      voiceGain.connect(this.duck);
      carrier.start();
      modulator.start();
      this.carriers.push(carrier);
      this.gains.push(voiceGain);
      // keep references for retuning via frequency params
      (carrier as any)._modulator = modulator;
      (carrier as any)._modGain = modGain;
    }
    this.timer = window.setInterval(() => this.pump(), 40);
  }

  stop(): void {
    if (this.timer !== null) window.clearInterval(this.timer);
    this.timer = null;
    this.ctx?.close();
    this.ctx = null;
    this.carriers = [];
    this.gains = [];
  }

  applyFrame(frame: StateFrame): void {
    const earcons = this.core.applyFrame(frame);
    for (const earcon of earcons) this.playEarcon(earcon);
  }

  private pump(): void {
    if (!this.ctx) return;
    const now = this.ctx.currentTime;
    for (const pulse of this.core.schedulePulses(now + 0.02, 0.25)) {
      this.programPulse(pulse);
    }
  }

  private programPulse(pulse: ScheduledPulse): void {
    if (!this.ctx) return;
    const decayS = Math.max(0.5 * pulse.intervalS - ATTACK_S, 0.02);
    pulse.freqs.slice(0, VOICES).forEach((freq, i) => {
      const carrier = this.carriers[i];
      const modulator = (carrier as any)._modulator as OscillatorNode;
      const modGain = (carrier as any)._modGain as GainNode;
      carrier.frequency.setValueAtTime(freq, pulse.atS);
      modulator.frequency.setValueAtTime(freq, pulse.atS);
      modGain.gain.setValueAtTime(freq, pulse.atS); // index 1: deviation = f_m
      const gain = this.gains[i].gain;
      gain.cancelScheduledValues(pulse.atS);
      gain.setValueAtTime(0, pulse.atS);
      gain.linearRampToValueAtTime(1 / pulse.freqs.length, pulse.atS + ATTACK_S);
      gain.setTargetAtTime(0, pulse.atS + ATTACK_S, decayS / 6.9); // -60 dB
    });
    for (let i = pulse.freqs.length; i < VOICES; i++) {
      this.gains[i].gain.cancelScheduledValues(pulse.atS);
      this.gains[i].gain.setValueAtTime(0, pulse.atS);
    }
  }

  private playEarcon(earcon: EarconPlayback): void {
    if (!this.ctx || !this.duck) return;
    let at = Math.max(this.ctx.currentTime + 0.01, this.earconEnd);
    this.earconEnd = at + earcon.notes.length * earcon.noteS;
    this.duck.gain.setTargetAtTime(DUCK_GAIN, at, 0.005);
    this.duck.gain.setTargetAtTime(1.0, this.earconEnd, 0.005);
    for (const freq of earcon.notes) {
      const osc = this.ctx.createOscillator();
      const gain = this.ctx.createGain();
      osc.frequency.value = freq;
      gain.gain.setValueAtTime(0, at);
      gain.gain.linearRampToValueAtTime(0.5, at + ATTACK_S);
      gain.gain.setTargetAtTime(0, at + ATTACK_S, earcon.noteS / 6.9);
      osc.connect(gain);
      gain.connect(this.ctx.destination);
      osc.start(at);
      osc.stop(at + earcon.noteS + 0.05);
      at += earcon.noteS;
    }
  }
}

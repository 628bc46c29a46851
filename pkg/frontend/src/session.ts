/** Rating-session state machine, DOM-free so it can be driven headlessly.
 *
 * Progression is strictly monotone: familiarization playlist, then two
 * randomized passes over the stimuli. Only the stimulus at the scheduled
 * position is ratable, a rating can be submitted only after the audio has
 * played to completion at least once, and replays are unlimited. The server
 * is the source of truth: resuming re-reads the session state and the seeded
 * order, so a reload lands on the first unrated stimulus of the current pass.
 */

import { ApiClient, ApiError, PassNumber, Phase, StimulusRef } from "./api.js";

export interface Snapshot {
  phase: Phase;
  passNumber: PassNumber | null;
  index: number;
  total: number;
  stimulus: StimulusRef | null;
  selectedRating: number | null;
  playedThrough: boolean;
  canSubmit: boolean;
  busy: boolean;
  error: string | null;
}

type Listener = (snapshot: Snapshot) => void;

export class SessionController {
  private phase: Phase = "practice";
  private order: StimulusRef[] = [];
  private index = 0;
  private selectedRating: number | null = null;
  private playedThrough = false;
  private busy = false;
  private lastError: string | null = null;
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly raterId: string,
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) listener(snap);
  }

  snapshot(): Snapshot {
    return {
      phase: this.phase,
      passNumber: this.passNumber(),
      index: this.index,
      total: this.order.length,
      stimulus: this.order[this.index] ?? null,
      selectedRating: this.selectedRating,
      playedThrough: this.playedThrough,
      canSubmit: this.canSubmit(),
      busy: this.busy,
      error: this.lastError,
    };
  }

  passNumber(): PassNumber | null {
    switch (this.phase) {
      case "practice":
        return 0;
      case "pass1":
        return 1;
      case "pass2":
        return 2;
      default:
        return null;
    }
  }

  /** Resume from the server; the order is the seeded one, so a mid-pass
   * reload continues at the first unrated stimulus. */
  async start(): Promise<void> {
    this.busy = true;
    this.lastError = null;
    this.emit();
    try {
      const state = await this.api.getSession(this.raterId);
      this.phase = state.phase;
      this.index = state.current_index;
      this.order =
        state.phase === "done"
          ? []
          : await this.api.getStimuli(this.raterId, state.pass as PassNumber);
      this.resetStimulusState();
    } catch (err) {
      this.lastError = describe(err);
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  private resetStimulusState(): void {
    this.selectedRating = null;
    this.playedThrough = false;
  }

  audioUrl(): string | null {
    const stimulus = this.order[this.index];
    return stimulus ? this.api.audioUrl(stimulus.stimulus_id) : null;
  }

  /** The audio element finished an uninterrupted play-through. */
  notePlaybackComplete(): void {
    if (!this.playedThrough) {
      this.playedThrough = true;
      this.emit();
    }
  }

  selectRating(value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) return;
    this.selectedRating = value;
    this.emit();
  }

  canSubmit(): boolean {
    return (
      !this.busy &&
      this.phase !== "done" &&
      this.order.length > 0 &&
      this.index < this.order.length &&
      this.playedThrough &&
      this.selectedRating !== null
    );
  }

  /** Submit the current rating and advance; at the end of a playlist the
   * session state is re-read from the server to enter the next phase. */
  async submit(): Promise<void> {
    if (!this.canSubmit()) return;
    const stimulus = this.order[this.index];
    const pass = this.passNumber();
    if (stimulus === undefined || pass === null) return;
    this.busy = true;
    this.lastError = null;
    this.emit();
    try {
      await this.api.submitRating({
        rater_id: this.raterId,
        stimulus_id: stimulus.stimulus_id,
        pass,
        rating: this.selectedRating as number,
      });
      this.index += 1;
      this.resetStimulusState();
      if (this.index >= this.order.length) {
        this.busy = false;
        await this.start();
        return;
      }
    } catch (err) {
      // submissions are final and ordered; surface the error, never skip
      this.lastError = describe(err);
    } finally {
      this.busy = false;
      this.emit();
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `server rejected the request: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

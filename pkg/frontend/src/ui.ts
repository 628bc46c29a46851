/** DOM layer: renders the rating screen and wires it to the controller.
 *
 * The screen never shows anything about the speaker (identity or clinical
 * group); raters see only a neutral progress counter and the audio player.
 */

import { SessionController, Snapshot } from "./session.js";

export const SCALE_LABELS: ReadonlyArray<string> = [
  "very poor fluency",
  "poor fluency",
  "moderate fluency",
  "good fluency",
  "excellent fluency",
];

const PHASE_TEXT: Record<string, string> = {
  practice: "Familiarization",
  pass1: "Rating pass 1 of 2",
  pass2: "Rating pass 2 of 2",
  done: "Session complete",
};

export function renderRatingScreen(root: HTMLElement, controller: SessionController): void {
  root.innerHTML = `
    <div class="rating-screen">
      <p id="phase-line" class="phase"></p>
      <p id="progress-line" class="progress"></p>
      <div class="player-row">
        <audio id="player" controls preload="auto"></audio>
        <button id="retry" type="button" hidden>Retry loading audio</button>
      </div>
      <p id="play-hint" class="hint">Listen to the whole recording at least once.
        Replay as often as you need.</p>
      <fieldset id="scale" class="scale">
        <legend>How fluent is this recording?</legend>
      </fieldset>
      <button id="submit" type="button" disabled>Submit rating</button>
      <p id="error-line" class="error" role="alert" hidden></p>
    </div>`;

  const player = root.querySelector<HTMLAudioElement>("#player")!;
  const retry = root.querySelector<HTMLButtonElement>("#retry")!;
  const scale = root.querySelector<HTMLFieldSetElement>("#scale")!;
  const submit = root.querySelector<HTMLButtonElement>("#submit")!;
  const errorLine = root.querySelector<HTMLParagraphElement>("#error-line")!;

  for (let value = 1; value <= 5; value++) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = "rating";
    input.value = String(value);
    input.addEventListener("change", () => controller.selectRating(value));
    label.append(input, ` ${value} — ${SCALE_LABELS[value - 1]}`);
    scale.append(label);
  }

  player.addEventListener("ended", () => controller.notePlaybackComplete());
  player.addEventListener("error", () => {
    retry.hidden = false; // never auto-skip a stimulus on fetch failure
    errorLine.textContent = "The audio failed to load. Retry when ready.";
    errorLine.hidden = false;
  });
  retry.addEventListener("click", () => {
    retry.hidden = true;
    errorLine.hidden = true;
    player.load();
  });
  submit.addEventListener("click", () => {
    void controller.submit();
  });
  document.addEventListener("keydown", (event) => {
    if (event.key >= "1" && event.key <= "5") {
      const value = Number(event.key);
      const input = scale.querySelector<HTMLInputElement>(
        `input[value="${value}"]`,
      );
      if (input && !input.disabled) {
        input.checked = true;
        controller.selectRating(value);
      }
    }
  });

  let shownStimulus: string | null = null;
  controller.onChange((snap) => update(snap));
  update(controller.snapshot());

  function update(snap: Snapshot): void {
    root.querySelector("#phase-line")!.textContent = PHASE_TEXT[snap.phase];
    const progress = root.querySelector("#progress-line")!;
    if (snap.phase === "done") {
      progress.textContent = "All recordings rated. Thank you!";
      player.hidden = true;
      scale.hidden = true;
      submit.hidden = true;
      return;
    }
    progress.textContent = `Recording ${snap.index + 1} of ${snap.total}`;

    const current = snap.stimulus?.stimulus_id ?? null;
    if (current !== shownStimulus && current !== null) {
      shownStimulus = current;
      player.src = controller.audioUrl() ?? "";
      for (const input of scale.querySelectorAll<HTMLInputElement>("input")) {
        input.checked = false;
      }
    }
    submit.disabled = !snap.canSubmit;
    errorLine.hidden = snap.error === null;
    if (snap.error !== null) errorLine.textContent = snap.error;
  }
}

import { ApiClient } from "./api.js";
import { SessionController } from "./session.js";
import { renderRatingScreen } from "./ui.js";

function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  root.innerHTML = `
    <div class="login">
      <h1>Speech fluency rating</h1>
      <label>Your rater id:
        <input id="rater-id" autocomplete="off" spellcheck="false">
      </label>
      <button id="start" type="button">Start</button>
    </div>`;

  const input = root.querySelector<HTMLInputElement>("#rater-id")!;
  const start = root.querySelector<HTMLButtonElement>("#start")!;

  const begin = async () => {
    const raterId = input.value.trim();
    if (!raterId) {
      input.focus();
      return;
    }
    const controller = new SessionController(new ApiClient(), raterId);
    renderRatingScreen(root, controller);
    await controller.start();
  };

  start.addEventListener("click", () => void begin());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void begin();
  });
}

bootstrap();

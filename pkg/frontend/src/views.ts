/** DOM views for the two study stages.
 *
 * Each view renders the current task into a container, wires playback
 * guards and submission buttons, and re-renders itself after a
 * successful submit plus task advance.
 */

import type { ApiClient } from "./api";
import type { Session } from "./session";
import { DualPlayerSync } from "./sync";

export const REALISM_PROMPT = "Do you think this video is realistic?";
export const REALISM_OPTIONS: ReadonlyArray<[string, string]> = [
  ["A", "Very realistic"],
  ["B", "Moderately realistic"],
  ["C", "Not realistic at all"],
];
export const PAIRED_PROMPT =
  "Do you think the diagnostic patterns between these two videos are consistent?";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function doneScreen(container: HTMLElement, completed: number): void {
  container.replaceChildren(
    el("h2", "done", "All tasks complete"),
    el("p", "summary", `Submitted ${completed} responses. Thank you.`),
  );
}

function errorBanner(container: HTMLElement, message: string): void {
  const banner = el("p", "error", message);
  banner.setAttribute("role", "alert");
  container.prepend(banner);
}

export async function realismRatingView(
  container: HTMLElement,
  session: Session,
  api: ApiClient,
): Promise<void> {
  const task = await session.advance();
  if (task.done) {
    doneScreen(container, task.completed);
    return;
  }
  if (task.kind !== "realism") throw new Error("expected a realism task");

  const video = el("video", "player");
  video.src = api.streamUrl(task.video_id, "syn");
  video.controls = true;

  const prompt = el("p", "prompt", REALISM_PROMPT);
  const buttons = el("div", "options");
  const setDisabled = (disabled: boolean) => {
    buttons
      .querySelectorAll("button")
      .forEach((b) => ((b as HTMLButtonElement).disabled = disabled));
  };

  for (const [option, label] of REALISM_OPTIONS) {
    const button = el("button", "option", label);
    button.dataset.option = option;
    button.disabled = true; // until playback starts
    button.addEventListener("click", () => {
      setDisabled(true);
      session
        .submitRating(option)
        .then(() => realismRatingView(container, session, api))
        .catch((err) => {
          setDisabled(false);
          errorBanner(container, String(err));
        });
    });
    buttons.append(button);
  }

  video.addEventListener("play", () => {
    session.markPlaybackStarted();
    setDisabled(false);
  });

  container.replaceChildren(video, prompt, buttons);
}

export async function pairedReviewView(
  container: HTMLElement,
  session: Session,
  api: ApiClient,
  fps = 25,
): Promise<void> {
  const task = await session.advance();
  if (task.done) {
    doneScreen(container, task.completed);
    return;
  }
  if (task.kind !== "paired") throw new Error("expected a paired task");

  const placement = session.placementForCurrentPair();
  const left = el("video", "player left");
  const right = el("video", "player right");
  left.src = api.streamUrl(task.pair_id, placement.left);
  right.src = api.streamUrl(task.pair_id, placement.right);
  const sync = new DualPlayerSync(left, right, fps);

  const prompt = el("p", "prompt", PAIRED_PROMPT);
  const controls = el("div", "controls");
  const answers = el("div", "options");
  const setDisabled = (disabled: boolean) => {
    answers
      .querySelectorAll("button")
      .forEach((b) => ((b as HTMLButtonElement).disabled = disabled));
  };

  const playBtn = el("button", "control", "Play");
  playBtn.addEventListener("click", () => {
    sync
      .play()
      .then(() => {
        session.markPlaybackStarted();
        setDisabled(false);
      })
      .catch((err) => errorBanner(container, String(err)));
  });
  const pauseBtn = el("button", "control", "Pause");
  pauseBtn.addEventListener("click", () => sync.pause());
  const seek = el("input", "seek") as HTMLInputElement;
  seek.type = "range";
  seek.min = "0";
  seek.max = "1000";
  seek.value = "0";
  seek.addEventListener("input", () => {
    sync.seekFraction(Number(seek.value) / 1000);
  });
  controls.append(playBtn, pauseBtn, seek);

  for (const answer of ["yes", "no"] as const) {
    const button = el("button", "option", answer === "yes" ? "Yes" : "No");
    button.dataset.answer = answer;
    button.disabled = true;
    button.addEventListener("click", () => {
      setDisabled(true);
      session
        .submitJudgment(answer)
        .then(() => pairedReviewView(container, session, api, fps))
        .catch((err) => {
          setDisabled(false);
          errorBanner(container, String(err));
        });
    });
    answers.append(button);
  }

  // one stream failing disables submission and surfaces the error
  for (const [side, player] of [
    ["left", left],
    ["right", right],
  ] as const) {
    player.addEventListener("error", () => {
      setDisabled(true);
      errorBanner(container, `${side} video failed to load`);
    });
  }

  const stage = el("div", "stage");
  stage.append(left, right);
  container.replaceChildren(stage, prompt, controls, answers);
}

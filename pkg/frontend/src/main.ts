import { ApiClient } from "./api";
import { Session } from "./session";
import { pairedReviewView, realismRatingView } from "./views";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const raterId = param("rater", "");
const kind = param("kind", "realism") === "paired" ? "paired" : "realism";
const root = document.getElementById("app")!;

if (!raterId) {
  root.textContent = "Missing ?rater=<id> in the URL.";
} else {
  const api = new ApiClient("");
  const session = new Session(api, raterId, kind);
  const view = kind === "paired" ? pairedReviewView : realismRatingView;
  view(root, session, api).catch((err) => {
    root.textContent = `Failed to load tasks: ${err}`;
  });
}

import { ApiClient } from "./api.js";
import { ReviewSession } from "./session.js";
import { mountReviewUi } from "./ui.js";

function annotatorId(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("annotator");
  if (fromUrl) return fromUrl;
  const stored = window.localStorage.getItem("annotator_id");
  if (stored) return stored;
  const fresh = `anon-${Math.random().toString(36).slice(2, 10)}`;
  window.localStorage.setItem("annotator_id", fresh);
  return fresh;
}

window.addEventListener("load", () => {
  const api = new ApiClient();
  const session = new ReviewSession(api, annotatorId());
  mountReviewUi(document.getElementById("root")!, api, session);
  void session.loadNext();
});

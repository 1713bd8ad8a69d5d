// DOM layer: renders ReviewSession snapshots and wires controls. All state
// transitions live in session.ts; this file only reads snapshots and forwards
// user input.

import { ApiClient, DIMENSIONS, Outcome } from "./api.js";
import { ReviewSession, SessionState } from "./session.js";

const OUTCOME_BUTTONS: Array<{ outcome: Outcome; label: string; key: string }> = [
  { outcome: "A_WINS", label: "A wins", key: "a" },
  { outcome: "TIE", label: "Tie", key: "t" },
  { outcome: "B_WINS", label: "B wins", key: "b" },
];

export function mountReviewUi(
  root: HTMLElement,
  api: ApiClient,
  session: ReviewSession,
): void {
  root.innerHTML = `
    <header>
      <h1>Pair review</h1>
      <nav id="dims"></nav>
      <div id="progress"></div>
    </header>
    <div id="banner" hidden></div>
    <div id="notice" hidden></div>
    <main id="main">
      <section class="strips">
        <figure><img id="imgA" alt="sequence A frame" /><figcaption>A</figcaption></figure>
        <figure><img id="imgB" alt="sequence B frame" /><figcaption>B</figcaption></figure>
      </section>
      <section class="controls">
        <button id="first" title="jump to first frame">|&lt;</button>
        <button id="play"></button>
        <button id="last" title="jump to last frame">&gt;|</button>
        <input id="scrub" type="range" min="0" value="0" step="1" />
        <span id="frameno"></span>
      </section>
      <section class="verdict" id="verdict"></section>
    </main>
    <div id="done" hidden><p>All pairs annotated for this dimension.</p></div>
    <details id="guidelines"><summary>Annotation guidelines</summary><pre></pre></details>
  `;

  const el = <T extends HTMLElement>(id: string) =>
    root.querySelector<T>(`#${id}`)!;
  const imgA = el<HTMLImageElement>("imgA");
  const imgB = el<HTMLImageElement>("imgB");
  const scrub = el<HTMLInputElement>("scrub");

  const dims = el<HTMLElement>("dims");
  for (const d of DIMENSIONS) {
    const btn = document.createElement("button");
    btn.textContent = d;
    btn.dataset.dim = d;
    btn.addEventListener("click", () => void session.setDimension(d));
    dims.appendChild(btn);
  }

  const verdict = el<HTMLElement>("verdict");
  for (const { outcome, label, key } of OUTCOME_BUTTONS) {
    const btn = document.createElement("button");
    btn.textContent = `${label} (${key})`;
    btn.dataset.outcome = outcome;
    btn.addEventListener("click", () => void session.submit(outcome));
    verdict.appendChild(btn);
  }

  el<HTMLButtonElement>("first").addEventListener("click", () => session.jumpToFirst());
  el<HTMLButtonElement>("last").addEventListener("click", () => session.jumpToLast());
  el<HTMLButtonElement>("play").addEventListener("click", () => session.togglePlay());
  scrub.addEventListener("input", () => session.scrub(Number(scrub.value)));

  document.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement) return;
    if (ev.key === " ") {
      ev.preventDefault();
      session.togglePlay();
      return;
    }
    void session.handleKey(ev.key);
  });

  const banner = el<HTMLElement>("banner");
  banner.addEventListener("click", () => void session.loadNext());

  void api.guidelines().then((text) => {
    root.querySelector("#guidelines pre")!.textContent = text;
  }).catch(() => {
    root.querySelector("#guidelines pre")!.textContent = "(guidelines unavailable)";
  });

  session.onChange((s) => render(s));
  const render = (s: SessionState): void => {
    for (const btn of dims.querySelectorAll("button")) {
      btn.classList.toggle("active", btn.dataset.dim === s.dimension);
    }

    banner.hidden = s.status !== "error";
    if (s.errorMessage) banner.textContent = `${s.errorMessage} — click to retry`;

    const notice = el<HTMLElement>("notice");
    notice.hidden = !s.notice;
    if (s.notice) notice.textContent = s.notice;

    el<HTMLElement>("done").hidden = s.status !== "done";
    el<HTMLElement>("main").hidden = s.status !== "ready";

    for (const btn of verdict.querySelectorAll("button")) {
      (btn as HTMLButtonElement).disabled = s.status !== "ready";
    }

    if (s.task) {
      imgA.src = api.frameUrl(s.task.seq_a, s.frameIndex);
      imgB.src = api.frameUrl(s.task.seq_b, s.frameIndex);
      const count = session.frameCount();
      scrub.max = String(Math.max(count - 1, 0));
      scrub.value = String(s.frameIndex);
      el<HTMLElement>("frameno").textContent = `${s.frameIndex + 1}/${count}`;
    }
    el<HTMLButtonElement>("play").textContent = s.playing ? "pause" : "play";

    if (s.progress) {
      const p = s.progress[s.dimension];
      const pct = p.total ? Math.round((100 * p.judged) / p.total) : 0;
      el<HTMLElement>("progress").textContent =
        `${s.dimension}: ${p.judged}/${p.total} pairs (${pct}%)`;
    }
  };
  render(session.snapshot());
}

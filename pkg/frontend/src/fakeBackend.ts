// In-memory stand-in for the annotation backend with the same queue and
// uniqueness semantics, used by the integration tests. Every accepted
// judgment appends one line to `lines`, mirroring the server's JSONL store.

import { Dimension, DIMENSIONS, FetchLike, Outcome, PairTask } from "./api.js";

export interface FixturePair {
  pair_id: string;
  seq_a: string;
  seq_b: string;
  frames: number;
}

interface StoredJudgment {
  pair_id: string;
  dimension: Dimension;
  outcome: Outcome;
  annotator_id: string;
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export class FakeBackend {
  lines: string[] = []; // the JSONL store; one line per accepted judgment
  transmittedOutcomes: string[] = []; // every outcome value seen on the wire
  failNetwork = false;

  private keys = new Set<string>();

  constructor(private readonly pairs: FixturePair[]) {}

  judgments(): StoredJudgment[] {
    return this.lines.map((l) => JSON.parse(l) as StoredJudgment);
  }

  fetch: FetchLike = async (url, init) => {
    if (this.failNetwork) throw new Error("network unreachable");
    const u = new URL(url, "http://fake");
    if (u.pathname === "/api/pairs/next") return this.nextPair(u);
    if (u.pathname === "/api/judgments") return this.submit(init);
    if (u.pathname === "/api/progress") return this.progress();
    if (u.pathname === "/api/guidelines") {
      return new Response("guidelines text", { status: 200 });
    }
    return jsonResponse(404, { error: "not found" });
  };

  private nextPair(u: URL): Response {
    const dimension = u.searchParams.get("dimension") as Dimension;
    const annotator = u.searchParams.get("annotator") ?? "";
    const counts = new Map<string, number>();
    for (const j of this.judgments()) {
      if (j.dimension === dimension) {
        counts.set(j.pair_id, (counts.get(j.pair_id) ?? 0) + 1);
      }
    }
    const candidates = this.pairs
      .filter((p) => !this.keys.has(`${p.pair_id}|${dimension}|${annotator}`))
      .sort(
        (a, b) =>
          (counts.get(a.pair_id) ?? 0) - (counts.get(b.pair_id) ?? 0) ||
          a.pair_id.localeCompare(b.pair_id),
      );
    if (candidates.length === 0) return new Response(null, { status: 204 });
    const p = candidates[0];
    const task: PairTask = {
      pair_id: p.pair_id,
      seq_a: p.seq_a,
      seq_b: p.seq_b,
      dimensions_pending: DIMENSIONS.filter(
        (d) => !this.keys.has(`${p.pair_id}|${d}|${annotator}`),
      ),
      frame_counts: [p.frames, p.frames],
    };
    return jsonResponse(200, task);
  }

  private submit(init?: RequestInit): Response {
    const body = JSON.parse(String(init?.body ?? "{}"));
    this.transmittedOutcomes.push(body.outcome);
    const valid = ["A_WINS", "TIE", "B_WINS"];
    if (!valid.includes(body.outcome) || !body.pair_id || !body.annotator_id) {
      return jsonResponse(400, { error: "bad request" });
    }
    if (!this.pairs.some((p) => p.pair_id === body.pair_id)) {
      return jsonResponse(400, { error: "unknown pair" });
    }
    const key = `${body.pair_id}|${body.dimension}|${body.annotator_id}`;
    if (this.keys.has(key)) return jsonResponse(409, { error: "conflict" });
    this.keys.add(key);
    this.lines.push(JSON.stringify(body));
    return jsonResponse(201, { status: "accepted" });
  }

  private progress(): Response {
    const out: Record<string, unknown> = {};
    for (const d of DIMENSIONS) {
      const judged = new Set(
        this.judgments().filter((j) => j.dimension === d).map((j) => j.pair_id),
      );
      const histogram = { A_WINS: 0, TIE: 0, B_WINS: 0 };
      for (const j of this.judgments()) {
        if (j.dimension === d) histogram[j.outcome] += 1;
      }
      out[d] = { judged: judged.size, total: this.pairs.length, histogram };
    }
    return jsonResponse(200, out);
  }
}

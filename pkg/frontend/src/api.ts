// Typed client for the annotation backend. All network access goes through an
// injectable fetch so tests can run against a fake backend.

export type Dimension = "VQ" | "MQ" | "CA";
export type Outcome = "A_WINS" | "TIE" | "B_WINS";

export const DIMENSIONS: readonly Dimension[] = ["VQ", "MQ", "CA"];
// The only values the UI is able to transmit.
export const OUTCOMES: readonly Outcome[] = ["A_WINS", "TIE", "B_WINS"];

export interface PairTask {
  pair_id: string;
  seq_a: string;
  seq_b: string;
  dimensions_pending: Dimension[];
  frame_counts: [number, number];
}

export interface DimensionProgress {
  judged: number;
  total: number;
  histogram: Record<Outcome, number>;
}

export type Progress = Record<Dimension, DimensionProgress>;

export type SubmitResult = "accepted" | "conflict" | "rejected";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private readonly base: string = "",
  ) {}

  /** Next unjudged pair for this annotator+dimension; null when exhausted. */
  async nextPair(dimension: Dimension, annotator: string): Promise<PairTask | null> {
    const res = await this.fetchImpl(
      `${this.base}/api/pairs/next?dimension=${dimension}&annotator=${encodeURIComponent(annotator)}`,
    );
    if (res.status === 204) return null;
    if (!res.ok) throw new Error(`next pair failed: HTTP ${res.status}`);
    return (await res.json()) as PairTask;
  }

  async submitJudgment(
    task: PairTask,
    dimension: Dimension,
    outcome: Outcome,
    annotator: string,
  ): Promise<SubmitResult> {
    if (!OUTCOMES.includes(outcome)) {
      throw new Error(`not a protocol outcome: ${outcome}`);
    }
    const res = await this.fetchImpl(`${this.base}/api/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        pair_id: task.pair_id,
        item_a: task.seq_a,
        item_b: task.seq_b,
        dimension,
        outcome,
        annotator_id: annotator,
        timestamp: Date.now() / 1000,
      }),
    });
    if (res.status === 201) return "accepted";
    if (res.status === 409) return "conflict";
    if (res.status === 400) return "rejected";
    throw new Error(`submit failed: HTTP ${res.status}`);
  }

  async progress(): Promise<Progress> {
    const res = await this.fetchImpl(`${this.base}/api/progress`);
    if (!res.ok) throw new Error(`progress failed: HTTP ${res.status}`);
    return (await res.json()) as Progress;
  }

  async guidelines(): Promise<string> {
    const res = await this.fetchImpl(`${this.base}/api/guidelines`);
    if (!res.ok) throw new Error(`guidelines failed: HTTP ${res.status}`);
    return await res.text();
  }

  frameUrl(seqId: string, index: number): string {
    return `${this.base}/api/frames/${seqId}/${index}`;
  }
}

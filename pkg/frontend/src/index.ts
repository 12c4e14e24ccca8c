/**
 * Node bindings for the tlpeval evaluation core.
 *
 * The wrapper never computes: every call is marshalled over the core's
 * line-delimited JSON endpoint (`python -m tlpeval.ffi`), so numeric results
 * are identical to the CLI's JSON output, field by field.
 *
 * Stateful core objects (datasets, fitted scorers) are referenced through
 * handles that stay valid until released or the session closes. Using a
 * released handle throws a wrapper-level error before anything reaches the
 * core. Handles belong to their session and are not safe to share across
 * worker threads without external synchronization.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

export type HandleKind = "dataset" | "scorer";

export class BoundHandle {
  released = false;

  constructor(
    readonly id: number,
    readonly kind: HandleKind,
    private readonly owner: CoreSession,
  ) {}

  assertLive(kind?: HandleKind): void {
    if (this.released) {
      throw new CoreError("ReleasedHandle", `handle ${this.id} (${this.kind}) was already released`);
    }
    if (kind !== undefined && this.kind !== kind) {
      throw new CoreError("HandleKindMismatch", `handle ${this.id} is a ${this.kind}, expected ${kind}`);
    }
  }
}

export class CoreError extends Error {
  constructor(
    readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = `CoreError(${kind})`;
  }
}

interface Response {
  id: number;
  ok: boolean;
  result?: unknown;
  error?: { type: string; message: string };
}

export interface DatasetInfo {
  handle?: number;
  name: string;
  num_nodes: number;
  num_edges: number;
  t_min: number;
  t_max: number;
}

export interface MetricSummary {
  mrr: number;
  mean_rank: number;
  hits: Record<string, number>;
  auc_hat: number | null;
  mr_hat: number | null;
  count: number;
}

export interface ReportCell {
  scorer: string;
  sampler: string;
  seed: number;
  metric: string;
  value: number;
}

export interface Report {
  cells: ReportCell[];
  full: { scorer: string; metric: string; value: number }[];
  scatter: Record<string, { group: string; full_value: number; sampled_value: number }[]>;
  correlations: { sampler_a: string; sampler_b: string; spearman: number | null }[];
  simpson: { within: Record<string, number>; pooled_r: number; paradox: boolean } | null;
  metadata: Record<string, unknown>;
}

export interface FlipReport {
  N: number;
  n_s: number;
  full_mrr: { A: number; B: number };
  expected_sampled_mrr: { A: number; B: number };
  mean_rank: { A: number; B: number };
  expected_mr_hat: { A: number; B: number };
  full_mrr_order: string;
  sampled_mrr_order: string;
  mean_rank_order: string;
  mr_hat_order: string;
  flip: boolean;
  mr_hat_flip: boolean;
}

export interface SessionOptions {
  /** Python executable running the core; defaults to $TLPEVAL_PYTHON or python3. */
  python?: string;
  env?: NodeJS.ProcessEnv;
}

export class CoreSession {
  private proc: ChildProcessWithoutNullStreams;
  private reader: Interface;
  private pending = new Map<number, { resolve: (r: Response) => void; reject: (e: Error) => void }>();
  private nextId = 1;
  private closed = false;
  private stderrTail = "";

  constructor(options: SessionOptions = {}) {
    const python = options.python ?? process.env.TLPEVAL_PYTHON ?? "python3";
    this.proc = spawn(python, ["-m", "tlpeval.ffi"], {
      stdio: ["pipe", "pipe", "pipe"],
      env: options.env ?? process.env,
    });
    this.reader = createInterface({ input: this.proc.stdout });
    this.reader.on("line", (line) => this.onLine(line));
    this.proc.stderr.on("data", (chunk: Buffer) => {
      this.stderrTail = (this.stderrTail + chunk.toString()).slice(-4000);
    });
    this.proc.on("exit", () => this.failAllPending());
  }

  private onLine(line: string): void {
    let resp: Response;
    try {
      resp = JSON.parse(line) as Response;
    } catch {
      return;
    }
    const waiter = this.pending.get(resp.id);
    if (waiter) {
      this.pending.delete(resp.id);
      waiter.resolve(resp);
    }
  }

  private failAllPending(): void {
    for (const [, waiter] of this.pending) {
      waiter.reject(new CoreError("SessionClosed", `core process exited: ${this.stderrTail.trim()}`));
    }
    this.pending.clear();
  }

  async call<T>(op: string, params: Record<string, unknown> = {}): Promise<T> {
    if (this.closed) {
      throw new CoreError("SessionClosed", "session is closed");
    }
    const id = this.nextId++;
    const resp = await new Promise<Response>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.proc.stdin.write(JSON.stringify({ id, op, params }) + "\n", (err) => {
        if (err) {
          this.pending.delete(id);
          reject(new CoreError("Transport", err.message));
        }
      });
    });
    if (!resp.ok) {
      throw new CoreError(resp.error?.type ?? "Unknown", resp.error?.message ?? "unknown core error");
    }
    return resp.result as T;
  }

  async version(): Promise<string> {
    const r = await this.call<{ version: string }>("version");
    return r.version;
  }

  async loadDataset(
    path: string,
    columns?: { srcCol?: string; dstCol?: string; timeCol?: string },
  ): Promise<{ handle: BoundHandle; info: DatasetInfo }> {
    const info = await this.call<DatasetInfo>("load_dataset", {
      path,
      src_col: columns?.srcCol ?? "src",
      dst_col: columns?.dstCol ?? "dst",
      time_col: columns?.timeCol ?? "t",
    });
    return { handle: new BoundHandle(info.handle!, "dataset", this), info };
  }

  async generateDataset(config: Record<string, unknown>): Promise<{ handle: BoundHandle; info: DatasetInfo }> {
    const info = await this.call<DatasetInfo>("generate", { config });
    return { handle: new BoundHandle(info.handle!, "dataset", this), info };
  }

  async datasetInfo(dataset: BoundHandle): Promise<DatasetInfo> {
    dataset.assertLive("dataset");
    return this.call<DatasetInfo>("dataset_info", { dataset: dataset.id });
  }

  async surpriseIndex(dataset: BoundHandle, splitFractions?: [number, number, number]): Promise<number> {
    dataset.assertLive("dataset");
    const r = await this.call<{ surprise_index: number }>("surprise_index", {
      dataset: dataset.id,
      split_fractions: splitFractions,
    });
    return r.surprise_index;
  }

  async fitScorer(dataset: BoundHandle, scorer: string, stop?: number): Promise<BoundHandle> {
    dataset.assertLive("dataset");
    const r = await this.call<{ handle: number }>("fit_scorer", {
      dataset: dataset.id,
      scorer,
      ...(stop !== undefined ? { stop } : {}),
    });
    return new BoundHandle(r.handle, "scorer", this);
  }

  async score(scorer: BoundHandle, src: number, dst: number): Promise<number> {
    scorer.assertLive("scorer");
    const r = await this.call<{ score: number }>("score", { scorer: scorer.id, src, dst });
    return r.score;
  }

  async sampleCandidates(
    dataset: BoundHandle,
    params: {
      query?: number;
      strategy?: "uniform" | "popularity";
      nS?: number;
      seed?: number;
      collisionMode?: "raw" | "filtered";
      splitFractions?: [number, number, number];
    } = {},
  ): Promise<{ query: number; true_dst: number; strategy: string; candidates: number[] }> {
    dataset.assertLive("dataset");
    return this.call("sample_candidates", {
      dataset: dataset.id,
      query: params.query,
      strategy: params.strategy,
      n_s: params.nS,
      seed: params.seed,
      collision_mode: params.collisionMode,
      split_fractions: params.splitFractions,
    });
  }

  async release(handle: BoundHandle): Promise<void> {
    handle.assertLive();
    await this.call("release", { handle: handle.id });
    handle.released = true;
  }

  async close(): Promise<void> {
    if (this.closed) {
      return;
    }
    this.closed = true;
    try {
      const id = this.nextId++;
      this.proc.stdin.write(JSON.stringify({ id, op: "shutdown", params: {} }) + "\n");
    } catch {
      // the process may already be gone; kill below is the fallback
    }
    await new Promise<void>((resolve) => {
      const t = setTimeout(() => {
        this.proc.kill();
        resolve();
      }, 2000);
      this.proc.once("exit", () => {
        clearTimeout(t);
        resolve();
      });
    });
    this.reader.close();
  }
}

/** Run a full evaluation matrix in the core; the returned report is the exact
 * structure the CLI writes as report.json. */
export async function bindEvaluate(session: CoreSession, config: Record<string, unknown>): Promise<Report> {
  return session.call<Report>("evaluate", { config });
}

/** Aggregate ranking metrics over positive rank values. */
export async function bindMetrics(session: CoreSession, ranks: number[], ks: number[]): Promise<MetricSummary> {
  return session.call<MetricSummary>("rank_metrics", { ranks, ks });
}

export async function mrHat(
  session: CoreSession,
  sampledRank: number,
  nS: number,
  nUniverse: number,
): Promise<{ estimated_full_rank: number; auc_hat: number }> {
  return session.call("mr_hat", { sampled_rank: sampledRank, n_s: nS, n_universe: nUniverse });
}

export async function effectiveK(session: CoreSession, nUniverse: number, nS: number, k: number): Promise<number> {
  const r = await session.call<{ effective_k: number }>("effective_k", { n_universe: nUniverse, n_s: nS, k });
  return r.effective_k;
}

export async function pooledRocAuc(session: CoreSession, scored: [number, number][]): Promise<number> {
  const r = await session.call<{ auc: number }>("pooled_roc_auc", { scored });
  return r.auc;
}

export async function pooledAp(session: CoreSession, scored: [number, number][]): Promise<number> {
  const r = await session.call<{ ap: number }>("pooled_ap", { scored });
  return r.ap;
}

export async function perSourceAuc(
  session: CoreSession,
  scored: [string, number, number][],
): Promise<{ macro_auc: number; per_source: Record<string, number>; excluded: number }> {
  return session.call("per_source_auc", { scored });
}

export async function hypergeomPmf(session: CoreSession, N: number, A: number, n: number, x: number): Promise<number> {
  const r = await session.call<{ pmf: number }>("hypergeom_pmf", { N, A, n, x });
  return r.pmf;
}

export async function expectedSampledMrr(
  session: CoreSession,
  rank: number,
  nUniverse: number,
  nS: number,
): Promise<number> {
  const r = await session.call<{ value: number }>("expected_sampled_mrr", {
    rank,
    n_universe: nUniverse,
    n_s: nS,
  });
  return r.value;
}

export async function expectedSampledHits(
  session: CoreSession,
  rank: number,
  nUniverse: number,
  nS: number,
  k: number,
): Promise<number> {
  const r = await session.call<{ value: number }>("expected_sampled_hits", {
    rank,
    n_universe: nUniverse,
    n_s: nS,
    k,
  });
  return r.value;
}

export async function expectedMetric(
  session: CoreSession,
  masses: Record<string, number>,
  nUniverse: number,
  nS: number,
  metric: string,
): Promise<number> {
  const r = await session.call<{ value: number }>("expected_metric", {
    masses,
    n_universe: nUniverse,
    n_s: nS,
    metric,
  });
  return r.value;
}

export async function flipCheck(
  session: CoreSession,
  histA: Record<string, number>,
  histB: Record<string, number>,
  nUniverse: number,
  nS: number,
): Promise<FlipReport> {
  return session.call<FlipReport>("flip_check", {
    hist_a: histA,
    hist_b: histB,
    n_universe: nUniverse,
    n_s: nS,
  });
}

export async function spearman(session: CoreSession, a: number[], b: number[]): Promise<number> {
  const r = await session.call<{ rho: number }>("spearman", { a, b });
  return r.rho;
}

export async function pearson(session: CoreSession, x: number[], y: number[]): Promise<number> {
  const r = await session.call<{ r: number }>("pearson", { x, y });
  return r.r;
}

export async function simpsonCheck(
  session: CoreSession,
  groups: Record<string, [number, number][]>,
): Promise<{ within: Record<string, number>; pooled_r: number; paradox: boolean }> {
  return session.call("simpson_check", { groups });
}

export async function demoFlip(session: CoreSession, nS = 10): Promise<FlipReport> {
  return session.call<FlipReport>("demo_flip", { n_s: nS });
}

export async function demoSimpson(
  session: CoreSession,
): Promise<{ within: Record<string, number>; pooled_r: number; paradox: boolean }> {
  return session.call("demo_simpson");
}

export async function demoTwoSource(session: CoreSession): Promise<Record<string, unknown>> {
  return session.call("demo_two_source");
}

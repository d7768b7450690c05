/**
 * Wire types and HTTP client for the suggestion server.
 *
 * Request body: { tactic_state, prefix, n }. Response: { suggestions:
 * [{ tactic, score, status }], model_id, latency_ms }. Unknown fields in
 * responses are ignored so the client tolerates newer servers.
 */

export type CheckStatus = "complete" | "valid" | "invalid" | "unchecked";

export interface Suggestion {
  tactic: string;
  score: number;
  status: CheckStatus;
}

export interface SuggestResponse {
  suggestions: Suggestion[];
  modelId: string;
  latencyMs: number;
}

/** Server unreachable, answered with an error status, or timed out. */
export class ServerError extends Error {
  constructor(
    message: string,
    public readonly status?: number,
  ) {
    super(message);
    this.name = "ServerError";
  }
}

export interface SuggestClientOptions {
  /** Base URL of the server; defaults to LLMSTEP_SERVER_URL or loopback. */
  endpoint?: string;
  /** Abort the round trip after this many milliseconds (default 15000). */
  timeoutMs?: number;
}

export const DEFAULT_ENDPOINT = "http://127.0.0.1:6550";
export const DEFAULT_TIMEOUT_MS = 15_000;

export function resolveEndpoint(explicit?: string): string {
  return explicit ?? process.env["LLMSTEP_SERVER_URL"] ?? DEFAULT_ENDPOINT;
}

const STATUSES: ReadonlySet<string> = new Set(["complete", "valid", "invalid", "unchecked"]);

function parseSuggestResponse(payload: unknown): SuggestResponse {
  if (typeof payload !== "object" || payload === null) {
    throw new ServerError("response is not a JSON object");
  }
  const body = payload as Record<string, unknown>;
  if (!Array.isArray(body["suggestions"])) {
    throw new ServerError("response has no suggestions array");
  }
  const suggestions: Suggestion[] = body["suggestions"].map((entry, i) => {
    const raw = entry as Record<string, unknown>;
    const tactic = raw["tactic"];
    const score = raw["score"];
    const status = raw["status"];
    if (typeof tactic !== "string" || tactic.trim() === "") {
      throw new ServerError(`suggestion ${i} has no tactic`);
    }
    if (typeof score !== "number") {
      throw new ServerError(`suggestion ${i} has no score`);
    }
    if (typeof status !== "string" || !STATUSES.has(status)) {
      throw new ServerError(`suggestion ${i} has unknown status ${String(status)}`);
    }
    return { tactic, score, status: status as CheckStatus };
  });
  return {
    suggestions,
    modelId: typeof body["model_id"] === "string" ? body["model_id"] : "",
    latencyMs: typeof body["latency_ms"] === "number" ? body["latency_ms"] : 0,
  };
}

export class SuggestClient {
  readonly endpoint: string;
  readonly timeoutMs: number;

  constructor(options: SuggestClientOptions = {}) {
    this.endpoint = resolveEndpoint(options.endpoint).replace(/\/+$/, "");
    this.timeoutMs = options.timeoutMs ?? DEFAULT_TIMEOUT_MS;
  }

  /** One /suggest round trip; n suggestions constrained to start with prefix. */
  async suggest(tacticState: string, prefix: string, n: number): Promise<SuggestResponse> {
    let response: Response;
    try {
      response = await fetch(`${this.endpoint}/suggest`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ tactic_state: tacticState, prefix, n }),
        signal: AbortSignal.timeout(this.timeoutMs),
      });
    } catch (err) {
      throw new ServerError(`suggestion server unreachable at ${this.endpoint}: ${String(err)}`);
    }
    if (!response.ok) {
      const detail = await response.text().catch(() => "");
      throw new ServerError(
        `suggestion server answered ${response.status}: ${detail.slice(0, 200)}`,
        response.status,
      );
    }
    return parseSuggestResponse(await response.json());
  }

  async health(): Promise<Record<string, unknown>> {
    const response = await fetch(`${this.endpoint}/health`, {
      signal: AbortSignal.timeout(this.timeoutMs),
    });
    return (await response.json()) as Record<string, unknown>;
  }
}

/**
 * Client for a line-protocol prover subprocess: one JSON object per line
 * over stdio. The prover issues opaque tokens for states; applying a tactic
 * to a token is speculative (the token stays usable), which is exactly what
 * suggestion checking needs.
 */

import { ChildProcessByStdio, spawn } from "node:child_process";
import { createInterface, Interface } from "node:readline";
import { Readable, Writable } from "node:stream";

export type OutcomeKind = "progress" | "completed" | "error";

export interface ProverOutcome {
  kind: OutcomeKind;
  /** progress only */
  nextState?: string;
  goalCount: number;
  /** progress only: token for the new state */
  token?: string;
  /** error only */
  message?: string;
}

export interface ProverState {
  token: string;
  text: string;
  goalCount: number;
}

/** The prover subprocess died or spoke garbage; not a tactic failure. */
export class ProverUnavailableError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProverUnavailableError";
  }
}

interface Pending {
  resolve: (reply: Record<string, unknown>) => void;
  reject: (err: Error) => void;
  id: number;
}

export class LineProtocolProver {
  private proc: ChildProcessByStdio<Writable, Readable, null>;
  private reader: Interface;
  private nextId = 0;
  private pending: Pending | null = null;
  private closed = false;

  constructor(
    command: string,
    args: string[],
    private readonly requestTimeoutMs = 10_000,
  ) {
    this.proc = spawn(command, args, { stdio: ["pipe", "pipe", "ignore"] });
    this.reader = createInterface({ input: this.proc.stdout });
    this.reader.on("line", (line) => this.onLine(line));
    this.proc.on("exit", () => {
      this.closed = true;
      this.pending?.reject(new ProverUnavailableError("prover subprocess exited"));
      this.pending = null;
    });
  }

  private onLine(line: string): void {
    if (!this.pending) {
      return; // stale reply from a timed-out request
    }
    let reply: Record<string, unknown>;
    try {
      reply = JSON.parse(line) as Record<string, unknown>;
    } catch {
      this.pending.reject(new ProverUnavailableError(`prover spoke garbage: ${line}`));
      this.pending = null;
      return;
    }
    if (reply["id"] !== this.pending.id) {
      return; // answer to an earlier, abandoned request
    }
    this.pending.resolve(reply);
    this.pending = null;
  }

  private request(payload: Record<string, unknown>, timeoutMs: number): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new ProverUnavailableError("prover subprocess exited"));
    }
    if (this.pending) {
      return Promise.reject(new ProverUnavailableError("one in-flight request per prover handle"));
    }
    const id = ++this.nextId;
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        if (this.pending?.id === id) {
          this.pending = null;
          reject(new ProverTimeout(`prover did not answer within ${timeoutMs}ms`));
        }
      }, timeoutMs);
      this.pending = {
        id,
        resolve: (reply) => {
          clearTimeout(timer);
          resolve(reply);
        },
        reject: (err) => {
          clearTimeout(timer);
          reject(err);
        },
      };
      this.proc.stdin.write(JSON.stringify({ ...payload, id }) + "\n");
    });
  }

  /** Handshake: root state of a theorem ("" for the table default). */
  async init(theorem = "", timeoutMs = 60_000): Promise<ProverState> {
    const reply = await this.request({ op: "init", theorem }, timeoutMs);
    if (reply["kind"] !== "progress" || typeof reply["token"] !== "string") {
      throw new ProverUnavailableError(`init failed: ${JSON.stringify(reply)}`);
    }
    return {
      token: reply["token"],
      text: String(reply["next_state"] ?? ""),
      goalCount: Number(reply["goal_count"] ?? 1),
    };
  }

  /** Speculatively apply one tactic to a state token. */
  async apply(token: string, tactic: string): Promise<ProverOutcome> {
    let reply: Record<string, unknown>;
    try {
      reply = await this.request({ op: "apply", token, tactic }, this.requestTimeoutMs);
    } catch (err) {
      if (err instanceof ProverTimeout) {
        return { kind: "error", goalCount: 0, message: err.message };
      }
      throw err;
    }
    const kind = reply["kind"];
    if (kind === "progress") {
      return {
        kind,
        nextState: String(reply["next_state"] ?? ""),
        goalCount: Number(reply["goal_count"] ?? 1),
        token: typeof reply["token"] === "string" ? reply["token"] : undefined,
      };
    }
    if (kind === "completed") {
      return { kind, goalCount: 0 };
    }
    if (kind === "error") {
      return { kind, goalCount: 0, message: String(reply["message"] ?? "unspecified error") };
    }
    throw new ProverUnavailableError(`malformed prover reply: ${JSON.stringify(reply)}`);
  }

  close(): void {
    this.closed = true;
    this.reader.close();
    this.proc.kill();
  }
}

class ProverTimeout extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProverTimeout";
  }
}

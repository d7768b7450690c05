/**
 * Scripted editor session around the `llmstep "<prefix>"` tactic.
 *
 * Invoking the tactic captures the current goal state, asks the suggestion
 * server for candidates starting with the prefix, checks every candidate by
 * speculative application against the local prover, and renders an ordered,
 * color-coded suggestion list. Nothing is committed by the invocation itself:
 * only clicking a suggestion edits the source and advances the proof.
 */

import { CheckStatus, ServerError, SuggestClient, Suggestion } from "./protocol.js";
import { LineProtocolProver, ProverState } from "./prover.js";

export type RenderedStatus = Exclude<CheckStatus, "unchecked">;

/** Three visually distinct styles, one per status. */
export const STATUS_STYLES: Record<RenderedStatus, string> = {
  complete: "suggestion-complete",
  valid: "suggestion-valid",
  invalid: "suggestion-invalid",
};

const STATUS_RANK: Record<RenderedStatus, number> = {
  complete: 0,
  valid: 1,
  invalid: 2,
};

export interface RenderedSuggestion {
  tactic: string;
  status: RenderedStatus;
  style: string;
  score: number;
}

export type InfoPanel =
  | { kind: "suggestions"; items: RenderedSuggestion[] }
  | { kind: "empty"; message: string }
  | { kind: "error"; message: string };

const INVOCATION = /llmstep\s+"([^"]*)"/;

/** Plain-text proof source with one llmstep invocation site. */
export class ProofDocument {
  constructor(public text: string) {}

  /** The prefix argument of the llmstep invocation, or null if absent. */
  invocationPrefix(): string | null {
    const match = this.text.match(INVOCATION);
    return match ? (match[1] ?? "") : null;
  }

  /** Replace the llmstep invocation with exactly the given tactic text. */
  replaceInvocation(tactic: string): void {
    if (!INVOCATION.test(this.text)) {
      throw new Error("document has no llmstep invocation");
    }
    this.text = this.text.replace(INVOCATION, tactic);
  }
}

export interface SessionOptions {
  /** Theorem id for the prover handshake; "" for the table root. */
  theorem?: string;
  /** Suggestions to request per invocation. */
  suggestionCount?: number;
}

export class EditorSession {
  readonly document: ProofDocument;
  private state: ProverState | null = null;
  private readonly theorem: string;
  private readonly suggestionCount: number;

  constructor(
    source: string,
    private readonly client: SuggestClient,
    private readonly prover: LineProtocolProver,
    options: SessionOptions = {},
  ) {
    this.document = new ProofDocument(source);
    this.theorem = options.theorem ?? "";
    this.suggestionCount = options.suggestionCount ?? 5;
  }

  /** Handshake with the prover; the proof starts at the theorem's root. */
  async open(): Promise<void> {
    this.state = await this.prover.init(this.theorem);
  }

  get proofComplete(): boolean {
    return this.state !== null && this.state.goalCount === 0;
  }

  /** Pretty-printed main goal state, as sent to the server. */
  get goalState(): string {
    if (this.state === null) {
      throw new Error("session not opened");
    }
    return this.state.text;
  }

  /**
   * Run the llmstep invocation in the document. Never mutates the document
   * or the proof state; server failures come back as a diagnostic panel.
   */
  async invoke(): Promise<InfoPanel> {
    if (this.state === null) {
      throw new Error("session not opened");
    }
    if (this.proofComplete) {
      return { kind: "error", message: "no goals left to prove" };
    }
    const prefix = this.document.invocationPrefix();
    if (prefix === null) {
      return { kind: "error", message: "no llmstep invocation in the document" };
    }

    let suggestions: Suggestion[];
    try {
      const response = await this.client.suggest(this.state.text, prefix, this.suggestionCount);
      suggestions = response.suggestions;
    } catch (err) {
      if (err instanceof ServerError) {
        return { kind: "error", message: err.message };
      }
      throw err;
    }
    if (suggestions.length === 0) {
      return { kind: "empty", message: "no suggestions" };
    }

    // check locally by speculative application; server statuses are not trusted
    const items: RenderedSuggestion[] = [];
    for (const suggestion of suggestions) {
      const outcome = await this.prover.apply(this.state.token, suggestion.tactic);
      const status: RenderedStatus =
        outcome.kind === "completed" ? "complete" : outcome.kind === "progress" ? "valid" : "invalid";
      items.push({
        tactic: suggestion.tactic,
        status,
        style: STATUS_STYLES[status],
        score: suggestion.score,
      });
    }
    items.sort(
      (a, b) =>
        STATUS_RANK[a.status] - STATUS_RANK[b.status] ||
        b.score - a.score ||
        (a.tactic < b.tactic ? -1 : a.tactic > b.tactic ? 1 : 0),
    );
    return { kind: "suggestions", items };
  }

  /**
   * Click a suggestion: insert exactly its tactic text at the invocation
   * site and apply it to the proof. The proof either completes or moves to
   * the next state.
   */
  async click(item: RenderedSuggestion): Promise<void> {
    if (this.state === null) {
      throw new Error("session not opened");
    }
    this.document.replaceInvocation(item.tactic);
    const outcome = await this.prover.apply(this.state.token, item.tactic);
    if (outcome.kind === "completed") {
      this.state = { ...this.state, goalCount: 0 };
    } else if (outcome.kind === "progress" && outcome.token) {
      this.state = {
        token: outcome.token,
        text: outcome.nextState ?? "",
        goalCount: outcome.goalCount,
      };
    }
    // an invalid click edits the source but leaves the proof state alone,
    // mirroring an editor where the inserted text simply fails to elaborate
  }
}

/** Plain-text rendering of the info panel, suitable for scripted sessions. */
export function formatPanel(panel: InfoPanel): string {
  if (panel.kind !== "suggestions") {
    return panel.message;
  }
  const lines = ["Try this:"];
  for (const item of panel.items) {
    lines.push(`  * ${item.tactic}  [${item.status}]`);
  }
  return lines.join("\n");
}

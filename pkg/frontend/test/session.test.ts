import { afterAll, beforeAll, describe, expect, test } from "vitest";

import { EditorSession, ProofDocument, STATUS_STYLES, formatPanel } from "../src/editor.js";
import { SuggestClient } from "../src/protocol.js";
import { LineProtocolProver } from "../src/prover.js";
import { RunningServer, dataPath, proverArgs, startServer, writeTempJson } from "./harness.js";

const EXAMPLE_SOURCE = `example : R ⊆ S → S ⊆ T → R ⊆ T := by
  llmstep ""
`;

let server: RunningServer;
let exampleTable: string;

beforeAll(async () => {
  exampleTable = dataPath("example_table.json");
  server = await startServer(`mock:${dataPath("mock_rules.json")}`);
}, 60_000);

afterAll(() => {
  server.stop();
});

function newSession(source: string): { session: EditorSession; prover: LineProtocolProver } {
  const [cmd, args] = proverArgs(exampleTable);
  const prover = new LineProtocolProver(cmd, args);
  const client = new SuggestClient({ endpoint: server.url });
  return { session: new EditorSession(source, client, prover), prover };
}

describe("editor round trip", () => {
  test("worked example: five suggestions, three complete, click closes the proof", async () => {
    const { session, prover } = newSession(EXAMPLE_SOURCE);
    try {
      await session.open();
      expect(session.goalState).toBe("⊢ R ⊆ S → S ⊆ T → R ⊆ T");

      const panel = await session.invoke();
      expect(panel.kind).toBe("suggestions");
      if (panel.kind !== "suggestions") return;
      expect(panel.items).toHaveLength(5);
      expect(panel.items.filter((s) => s.status === "complete")).toHaveLength(3);
      expect(panel.items.filter((s) => s.status === "valid")).toHaveLength(2);
      expect(panel.items[0]?.tactic).toBe("exact subset_trans");

      await session.click(panel.items[0]!);
      expect(session.proofComplete).toBe(true);
      expect(session.document.text).toBe(
        `example : R ⊆ S → S ⊆ T → R ⊆ T := by
  exact subset_trans
`,
      );
    } finally {
      prover.close();
    }
  }, 30_000);

  test("invocation never mutates the document or the proof state", async () => {
    const { session, prover } = newSession(EXAMPLE_SOURCE);
    try {
      await session.open();
      const textBefore = session.document.text;
      const stateBefore = session.goalState;
      await session.invoke();
      await session.invoke();
      expect(session.document.text).toBe(textBefore);
      expect(session.goalState).toBe(stateBefore);
      expect(session.proofComplete).toBe(false);
    } finally {
      prover.close();
    }
  }, 30_000);

  test("prefixed invocation returns only matching suggestions", async () => {
    const { session, prover } = newSession(
      `example : R ⊆ S → S ⊆ T → R ⊆ T := by\n  llmstep "exact"\n`,
    );
    try {
      await session.open();
      const panel = await session.invoke();
      expect(panel.kind).toBe("suggestions");
      if (panel.kind !== "suggestions") return;
      expect(panel.items).toHaveLength(2);
      for (const item of panel.items) {
        expect(item.tactic.startsWith("exact")).toBe(true);
        expect(item.status).toBe("complete");
      }
    } finally {
      prover.close();
    }
  }, 30_000);

  test("clicking a valid suggestion advances the proof state", async () => {
    const { session, prover } = newSession(EXAMPLE_SOURCE);
    try {
      await session.open();
      const panel = await session.invoke();
      if (panel.kind !== "suggestions") throw new Error("expected suggestions");
      const valid = panel.items.find((s) => s.tactic === "intros h1 h2")!;
      await session.click(valid);
      expect(session.proofComplete).toBe(false);
      expect(session.goalState).toBe("h1 : R ⊆ S\nh2 : S ⊆ T\n⊢ R ⊆ T");
      expect(session.document.text).toContain("intros h1 h2");
    } finally {
      prover.close();
    }
  }, 30_000);

  test("statuses render in checking order with three distinct styles", async () => {
    const { session, prover } = newSession(EXAMPLE_SOURCE);
    try {
      await session.open();
      const panel = await session.invoke();
      if (panel.kind !== "suggestions") throw new Error("expected suggestions");
      const rank = { complete: 0, valid: 1, invalid: 2 } as const;
      const ranks = panel.items.map((s) => rank[s.status]);
      expect(ranks).toEqual([...ranks].sort((a, b) => a - b));
      for (const item of panel.items) {
        expect(item.style).toBe(STATUS_STYLES[item.status]);
      }
      expect(new Set(Object.values(STATUS_STYLES)).size).toBe(3);
      expect(formatPanel(panel)).toContain("* exact subset_trans  [complete]");
    } finally {
      prover.close();
    }
  }, 30_000);
});

describe("failure handling", () => {
  test("server down: diagnostic panel, proof untouched", async () => {
    const [cmd, args] = proverArgs(exampleTable);
    const prover = new LineProtocolProver(cmd, args);
    const client = new SuggestClient({ endpoint: "http://127.0.0.1:9", timeoutMs: 1000 });
    const session = new EditorSession(EXAMPLE_SOURCE, client, prover);
    try {
      await session.open();
      const panel = await session.invoke();
      expect(panel.kind).toBe("error");
      if (panel.kind === "error") {
        expect(panel.message).toContain("unreachable");
      }
      expect(session.document.text).toBe(EXAMPLE_SOURCE);
      expect(session.proofComplete).toBe(false);
    } finally {
      prover.close();
    }
  }, 30_000);

  test("empty suggestion list: 'no suggestions' notice", async () => {
    const emptyRules = writeTempJson("empty_rules.json", []);
    const emptyServer = await startServer(`mock:${emptyRules}`);
    const [cmd, args] = proverArgs(exampleTable);
    const prover = new LineProtocolProver(cmd, args);
    const session = new EditorSession(EXAMPLE_SOURCE, new SuggestClient({ endpoint: emptyServer.url }), prover);
    try {
      await session.open();
      const panel = await session.invoke();
      expect(panel).toEqual({ kind: "empty", message: "no suggestions" });
    } finally {
      prover.close();
      emptyServer.stop();
    }
  }, 60_000);

  test("document without an invocation reports a diagnostic", async () => {
    const { session, prover } = newSession("example : True := by\n  trivial\n");
    try {
      await session.open();
      const panel = await session.invoke();
      expect(panel.kind).toBe("error");
    } finally {
      prover.close();
    }
  }, 30_000);
});

describe("document model", () => {
  test("prefix extraction", () => {
    expect(new ProofDocument('by\n  llmstep "exa"\n').invocationPrefix()).toBe("exa");
    expect(new ProofDocument('by\n  llmstep ""\n').invocationPrefix()).toBe("");
    expect(new ProofDocument("by\n  rfl\n").invocationPrefix()).toBeNull();
  });

  test("replacement inserts exactly the tactic text at the invocation site", () => {
    const doc = new ProofDocument('theorem t : P := by\n    llmstep "ex"\n');
    doc.replaceInvocation("exact h");
    expect(doc.text).toBe("theorem t : P := by\n    exact h\n");
    expect(() => doc.replaceInvocation("again")).toThrow();
  });
});

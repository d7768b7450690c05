/** Test harness: spawn the real suggestion server and stdio prover. */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PYTHON = process.env["PYTHON"] ?? "python3";

export function dataPath(name: string): string {
  return execFileSync(PYTHON, ["-c", `import tacstep; print(tacstep.data_path(${JSON.stringify(name)}))`], {
    encoding: "utf-8",
  }).trim();
}

export interface RunningServer {
  url: string;
  stop(): void;
}

export async function startServer(backend: string, check?: string): Promise<RunningServer> {
  const port = 20000 + Math.floor(Math.random() * 20000);
  const args = ["-m", "tacstep", "serve", "--bind", `127.0.0.1:${port}`, "--backend", backend];
  if (check) {
    args.push("--check", check);
  }
  const proc: ChildProcess = spawn(PYTHON, args, { stdio: "ignore" });
  const url = `http://127.0.0.1:${port}`;
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${url}/health`, { signal: AbortSignal.timeout(500) });
      if (res.ok) {
        return { url, stop: () => proc.kill() };
      }
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  proc.kill();
  throw new Error(`suggestion server did not come up on ${url}`);
}

export function proverArgs(tablePath: string): [string, string[]] {
  return [PYTHON, ["-m", "tacstep", "sim-stdio", "--table", tablePath]];
}

export function writeTempJson(name: string, value: unknown): string {
  const dir = mkdtempSync(join(tmpdir(), "llmstep-client-"));
  const path = join(dir, name);
  writeFileSync(path, JSON.stringify(value), "utf-8");
  return path;
}

// Spawns the Python backend fixture and exposes its direct-engine escape
// hatch. Used only by the round-trip suite.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

const FIXTURE = join(dirname(fileURLToPath(import.meta.url)), "fixture_server.py");

export interface Fixture {
  base: string;
  checkpointHash: string;
  checkpointPath: string;
  proc: ChildProcess;
}

export async function startFixture(): Promise<Fixture> {
  const workdir = mkdtempSync(join(tmpdir(), "graphcb-ui-"));
  const proc = spawn("python3", [FIXTURE, "serve", "--workdir", workdir], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const stderr: string[] = [];
  proc.stderr!.on("data", (chunk: Buffer) => stderr.push(chunk.toString()));

  const line = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => {
      proc.kill("SIGKILL");
      reject(new Error(`fixture did not come up in time\n${stderr.join("")}`));
    }, 90_000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const nl = buffer.indexOf("\n");
      if (nl >= 0) {
        clearTimeout(timer);
        resolve(buffer.slice(0, nl));
      }
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`fixture exited early with code ${code}\n${stderr.join("")}`));
    });
  });

  const info = JSON.parse(line) as {
    port: number;
    checkpoint_hash: string;
    checkpoint_path: string;
  };
  return {
    base: `http://127.0.0.1:${info.port}`,
    checkpointHash: info.checkpoint_hash,
    checkpointPath: info.checkpoint_path,
    proc,
  };
}

export function stopFixture(fixture: Fixture): void {
  fixture.proc.kill("SIGTERM");
}

export interface DirectWhatIf {
  logits: number[];
  probabilities: number[];
  predicted_class: number;
}

/** Same edit computed in-process by the engine, no HTTP involved. */
export function directWhatIf(
  fixture: Fixture,
  graphId: number,
  edits: [number, number][],
): DirectWhatIf {
  const out = execFileSync("python3", [
    FIXTURE,
    "what-if",
    "--checkpoint",
    fixture.checkpointPath,
    "--graph-id",
    String(graphId),
    "--edits",
    JSON.stringify(edits),
  ]);
  return JSON.parse(out.toString()) as DirectWhatIf;
}

// Test harness: spawn the real backend process on a free port with a fresh
// store, and tear it down afterwards. The UI consumes only the public API, so
// the tests exercise exactly what a browser session would.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const ADMIN_TOKEN = "ui-test-admin-token";

export interface TestServer {
  url: string;
  process: ChildProcess;
  stop(): Promise<void>;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      const port = address.port;
      probe.close(() => resolve(port));
    });
  });
}

export async function startServer(): Promise<TestServer> {
  const port = await freePort();
  const dir = mkdtempSync(join(tmpdir(), "govsheet-ui-"));
  const configPath = join(dir, "govsheet.conf");
  writeFileSync(
    configPath,
    [
      `listen_addr = 127.0.0.1:${port}`,
      `store_path = ${join(dir, "store.db")}`,
      `admin_token = ${ADMIN_TOKEN}`,
      "log_level = warning",
      "",
    ].join("\n"),
  );
  const python = process.env.GOVSHEET_PYTHON ?? "python3";
  const child = spawn(python, ["-m", "govsheet.cli", "serve", "--config", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  let stderr = "";
  child.stderr?.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });

  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`server exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const response = await fetch(`${url}/api/v1/audit/verify`, {
        headers: { Authorization: `Bearer ${ADMIN_TOKEN}` },
      });
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`server did not become ready: ${stderr}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  return {
    url,
    process: child,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => resolve());
        child.kill();
      }),
  };
}

/** Spawns the Python service when no URL is supplied; used by the CLI and tests. */

import { spawn, type ChildProcess } from "node:child_process";
import { createServer } from "node:net";

import { GfcClient } from "../client.js";

export interface ManagedService {
  url: string;
  client: GfcClient;
  stop(): Promise<void>;
}

export async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr && typeof addr === "object") {
        const port = addr.port;
        srv.close(() => resolve(port));
      } else {
        srv.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

export async function startService(command = "gfc", timeoutMs = 30000):
    Promise<ManagedService> {
  const port = await freePort();
  const url = `http://127.0.0.1:${port}`;
  const child: ChildProcess = spawn(command, ["serve", "--port", String(port)], {
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  child.stderr?.on("data", (d) => {
    stderr += String(d);
  });
  const client = new GfcClient(url);
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`service exited with ${child.exitCode}: ${stderr}`);
    }
    if (await client.health()) {
      return {
        url,
        client,
        stop: () =>
          new Promise((resolve) => {
            child.once("exit", () => resolve());
            child.kill("SIGTERM");
            setTimeout(() => {
              if (child.exitCode === null) child.kill("SIGKILL");
              resolve();
            }, 2000).unref();
          }),
      };
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  child.kill("SIGKILL");
  throw new Error(`service did not come up within ${timeoutMs}ms: ${stderr}`);
}

/** Use an existing service when given, else spawn one. */
export async function connectService(serviceUrl: string | null):
    Promise<ManagedService> {
  if (serviceUrl) {
    const client = new GfcClient(serviceUrl);
    if (!(await client.health())) {
      throw new Error(`no healthy service at ${serviceUrl}`);
    }
    return { url: serviceUrl, client, stop: async () => {} };
  }
  return startService();
}

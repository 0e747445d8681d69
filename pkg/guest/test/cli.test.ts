import { spawn } from "node:child_process";
import * as fs from "node:fs";
import * as net from "node:net";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { FrameDecoder, encodeFrame, fail } from "../src/frames";

const MAIN = path.join(__dirname, "..", "dist", "main.js");

function run(args: string[]): Promise<number | null> {
  return new Promise((resolve) => {
    const proc = spawn("node", [MAIN, ...args], {
      stdio: ["ignore", "ignore", "ignore"],
    });
    proc.on("close", (code) => resolve(code));
  });
}

describe.skipIf(!fs.existsSync(MAIN))("command line entry point", () => {
  it("rejects unusable argument lists with exit 2", async () => {
    expect(await run([])).toBe(2);
    expect(await run(["waffle"])).toBe(2);
    expect(await run(["embedded", "extra"])).toBe(2);
    expect(await run(["socket", "--host"])).toBe(2);
    expect(await run(["socket", "--port", "0"])).toBe(2);
    expect(await run(["socket", "--port", "banana"])).toBe(2);
  }, 60_000);

  it("exits 2 when the host is unreachable", async () => {
    expect(await run(["socket", "--port", "1"])).toBe(2);
  }, 60_000);

  it("exits 3 when the host rejects the protocol version", async () => {
    const server = net.createServer((sock) => {
      const decoder = new FrameDecoder();
      sock.on("data", (chunk) => {
        for (const msg of decoder.push(chunk)) {
          sock.write(encodeFrame(
            fail(msg.id, 5, "unsupported protocol version")));
        }
      });
    });
    await new Promise<void>((resolve) =>
      server.listen(0, "127.0.0.1", () => resolve()));
    const port = (server.address() as net.AddressInfo).port;
    try {
      expect(await run(["socket", "--port", String(port)])).toBe(3);
    } finally {
      server.close();
    }
  }, 60_000);
});

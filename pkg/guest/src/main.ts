/**
 * Guest process entry.
 *
 *   main.js socket [--host HOST] [--port PORT]   attach over TCP
 *   main.js embedded                             serve stdio, engine in-process
 */

import { runEmbeddedGuest } from "./embedded_main";
import { runSocketGuest } from "./socket";

const DEFAULT_HOST = "127.0.0.1";
const DEFAULT_PORT = 25333;

function usage(): number {
  process.stderr.write(
    "usage: main.js socket [--host HOST] [--port PORT] | main.js embedded\n");
  return 2;
}

async function main(): Promise<number> {
  const args = process.argv.slice(2);
  if (args[0] === "embedded") {
    return args.length === 1 ? runEmbeddedGuest() : usage();
  }
  if (args[0] !== "socket") {
    return usage();
  }
  let host = DEFAULT_HOST;
  let port = DEFAULT_PORT;
  for (let i = 1; i < args.length; i += 2) {
    const value = args[i + 1];
    if (value === undefined) {
      return usage();
    }
    if (args[i] === "--host") {
      host = value;
    } else if (args[i] === "--port") {
      port = Number(value);
    } else {
      return usage();
    }
  }
  if (!Number.isInteger(port) || port < 1 || port > 65535) {
    return usage();
  }
  return runSocketGuest(host, port);
}

main().then(
  (code) => {
    process.exitCode = code;
  },
  (exc) => {
    process.stderr.write(`guest failed: ${exc}\n`);
    process.exitCode = 2;
  },
);

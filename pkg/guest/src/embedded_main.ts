/**
 * Embedded-transport entry: the control conversation arrives over
 * stdio frames while the engine itself runs inside this process via
 * the native addon.  select_move runs the guest agents against the
 * in-process engine; every other method maps onto the addon directly,
 * with the same error codes the socket service uses.
 *
 * Exit codes: 0 after shutdown, 2 on a broken conversation, 3 on a
 * protocol version mismatch.
 */

import {
  BridgeMessage, FrameDecoder, FrameError, PROTOCOL_VERSION, Params,
  encodeFrame, fail, ok, seedFromWire,
} from "./frames";
import { GuestError, runSelectMove } from "./agents";
import {
  BridgeAddon, EmbeddedEngine, asEngineCallError, loadAddon, statsToWire,
} from "./embedded";
import { GuestProtocolError } from "./socket";

function writeOut(msg: BridgeMessage): Promise<void> {
  return new Promise((resolve, reject) => {
    process.stdout.write(encodeFrame(msg), (exc) =>
      exc ? reject(exc) : resolve());
  });
}

/** Everything that is not hello/shutdown/select_move, service-style. */
function dispatchEngine(addon: BridgeAddon, req: BridgeMessage): BridgeMessage {
  const params = req.params as Params;
  try {
    switch (req.method) {
      case "new_trial":
        return ok(req.id, { handle: addon.newTrial(params.game) });
      case "copy":
        return ok(req.id, { handle: addon.copy(params.handle) });
      case "apply":
        addon.apply(params.handle, params.move);
        return ok(req.id, {});
      case "legal_moves":
        return ok(req.id, { count: addon.legalMoves(params.handle) });
      case "is_terminal":
        return ok(req.id, { terminal: addon.isTerminal(params.handle) });
      case "returns":
        return ok(req.id, { utilities: addon.returnsU(params.handle) });
      case "current_player":
        return ok(req.id, { player: addon.currentPlayer(params.handle) });
      case "playout": {
        const seed = seedFromWire(params.seed);
        const raw = addon.playout(
          params.handle, Number(seed >> 32n), Number(seed & 0xffffffffn));
        return ok(req.id, { utilities: [raw[0], raw[1]], plies: raw[2] });
      }
      case "release":
        addon.release(params.handle);
        return ok(req.id, {});
      case "engine_stats":
        return ok(req.id, statsToWire(addon));
      default:
        return fail(
          req.id, 1, `unknown method ${JSON.stringify(req.method)}`);
    }
  } catch (exc) {
    const mapped = asEngineCallError(exc);
    if (mapped !== null) {
      return fail(req.id, mapped.code, mapped.detail);
    }
    if (exc instanceof FrameError) {
      return fail(req.id, 5, exc.message);
    }
    const err = exc as Error;
    return fail(req.id, 6, `${err.constructor.name}: ${err.message}`);
  }
}

export async function runEmbeddedGuest(): Promise<number> {
  let addon: BridgeAddon;
  try {
    addon = loadAddon();
    addon.init();
  } catch (exc) {
    process.stderr.write(`${(exc as Error).message}\n`);
    return 2;
  }
  const engine = new EmbeddedEngine(addon);
  const decoder = new FrameDecoder();
  const queue: BridgeMessage[] = [];
  let resume: (() => void) | null = null;
  let eof = false;

  process.stdin.on("data", (chunk: Buffer) => {
    let messages: BridgeMessage[];
    try {
      messages = decoder.push(chunk);
    } catch {
      eof = true;
      resume?.();
      return;
    }
    queue.push(...messages);
    resume?.();
  });
  process.stdin.on("end", () => {
    eof = true;
    resume?.();
  });
  process.stdin.on("error", () => {
    eof = true;
    resume?.();
  });

  const nextMessage = async (): Promise<BridgeMessage | null> => {
    for (;;) {
      const msg = queue.shift();
      if (msg !== undefined) {
        return msg;
      }
      if (eof) {
        return null;
      }
      await new Promise<void>((res) => {
        resume = res;
      });
      resume = null;
    }
  };

  try {
    for (;;) {
      const req = await nextMessage();
      if (req === null) {
        return 2;
      }
      if (req.method === undefined) {
        await writeOut(fail(req.id, 5, "expected a request frame"));
        continue;
      }
      if (req.method === "hello") {
        const params = req.params as Params;
        if (params.protocol !== PROTOCOL_VERSION) {
          await writeOut(fail(req.id, 5, "unsupported protocol"));
          return 3;
        }
        await writeOut(ok(req.id, { ok: true, protocol: PROTOCOL_VERSION }));
        continue;
      }
      if (req.method === "shutdown") {
        await writeOut(ok(req.id, {}));
        return 0;
      }
      if (req.method === "select_move") {
        try {
          const result = await runSelectMove(engine, req.params as Params);
          await writeOut(ok(req.id, result as unknown as Params));
        } catch (exc) {
          if (exc instanceof GuestError || exc instanceof GuestProtocolError) {
            await writeOut(fail(req.id, 5, exc.message));
          } else {
            throw exc;
          }
        }
        continue;
      }
      await writeOut(dispatchEngine(addon, req));
    }
  } finally {
    process.stdin.pause();
  }
}

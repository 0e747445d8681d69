/**
 * Socket transport: two loopback TCP connections to the host, the
 * engine channel for this side's requests and the control channel the
 * host drives.  Handshake is hello{role, protocol} on each; a version
 * refusal turns into exit code 3, any broken conversation into 2.
 */

import * as net from "node:net";

import {
  BridgeMessage, FrameDecoder, FrameError, PROTOCOL_VERSION, Params,
  encodeFrame, fail, ok, request, seedToWire,
} from "./frames";
import { Engine, GuestError, runSelectMove } from "./agents";

export class GuestProtocolError extends Error {}

export class ProtocolMismatch extends Error {}

const HELLO_TIMEOUT_MS = 10_000;

/** Frame-granular reader/writer over one socket. */
export class Channel {
  private decoder = new FrameDecoder();
  private queue: BridgeMessage[] = [];
  private waiters: Array<(msg: BridgeMessage | null) => void> = [];
  private closed = false;

  constructor(readonly sock: net.Socket) {
    sock.on("data", (chunk: Buffer) => {
      let messages: BridgeMessage[];
      try {
        messages = this.decoder.push(chunk);
      } catch {
        // undecodable peer; treated like a hangup
        this.shutdown();
        sock.destroy();
        return;
      }
      for (const msg of messages) {
        const waiter = this.waiters.shift();
        if (waiter !== undefined) {
          waiter(msg);
        } else {
          this.queue.push(msg);
        }
      }
    });
    sock.on("error", () => this.shutdown());
    sock.on("close", () => this.shutdown());
    sock.on("end", () => this.shutdown());
  }

  private shutdown(): void {
    this.closed = true;
    while (this.waiters.length > 0) {
      (this.waiters.shift() as (msg: BridgeMessage | null) => void)(null);
    }
  }

  /** Next message, or null once the peer is gone. */
  read(): Promise<BridgeMessage | null> {
    const queued = this.queue.shift();
    if (queued !== undefined) {
      return Promise.resolve(queued);
    }
    if (this.closed) {
      return Promise.resolve(null);
    }
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  /** Resolves once the frame reaches the kernel, so close cannot drop it. */
  write(msg: BridgeMessage): Promise<void> {
    if (this.closed) {
      return Promise.reject(new GuestProtocolError("channel closed"));
    }
    return new Promise((resolve, reject) => {
      this.sock.write(encodeFrame(msg), (exc) =>
        exc ? reject(exc) : resolve());
    });
  }

  close(): void {
    this.shutdown();
    this.sock.destroy();
  }
}

function connectSocket(host: string, port: number): Promise<net.Socket> {
  return new Promise((resolve, reject) => {
    const sock = net.createConnection({ host, port, noDelay: true });
    const timer = setTimeout(() => {
      sock.destroy();
      reject(new GuestProtocolError("connect timed out"));
    }, HELLO_TIMEOUT_MS);
    sock.once("connect", () => {
      clearTimeout(timer);
      resolve(sock);
    });
    sock.once("error", (exc) => {
      clearTimeout(timer);
      reject(exc);
    });
  });
}

function withTimeout<T>(p: Promise<T>, ms: number, what: string): Promise<T> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new GuestProtocolError(`${what} timed out`)), ms);
    p.then(
      (v) => { clearTimeout(timer); resolve(v); },
      (e) => { clearTimeout(timer); reject(e); });
  });
}

/**
 * Connect and shake hands.  The timeout only guards connect and hello;
 * an attached guest waits as long as the host keeps the session open.
 */
export async function attach(
  host: string, port: number, role: string,
): Promise<Channel> {
  const sock = await connectSocket(host, port);
  const channel = new Channel(sock);
  await channel.write(
    request(0, "hello", { role, protocol: PROTOCOL_VERSION }));
  const resp = await withTimeout(channel.read(), HELLO_TIMEOUT_MS, "hello");
  if (resp === null) {
    channel.close();
    throw new GuestProtocolError("host closed during hello");
  }
  if (resp.error !== undefined) {
    channel.close();
    if (resp.error.message.includes("protocol")) {
      throw new ProtocolMismatch(resp.error.message);
    }
    throw new GuestProtocolError(resp.error.message);
  }
  return channel;
}

/** Engine-channel client: one request in flight, responses in order. */
export class WireEngine implements Engine {
  private nextId = 0;

  constructor(private channel: Channel) {}

  async request(method: string, params: Params): Promise<Params> {
    this.nextId += 1;
    await this.channel.write(request(this.nextId, method, params));
    const resp = await this.channel.read();
    if (resp === null) {
      throw new GuestProtocolError("engine channel closed mid-call");
    }
    if (resp.id !== this.nextId) {
      throw new GuestProtocolError("engine response out of order");
    }
    if (resp.error !== undefined) {
      throw new GuestProtocolError(
        `engine error [${resp.error.code}] ${resp.error.message}`);
    }
    return resp.result as Params;
  }

  async copy(handle: number): Promise<number> {
    return (await this.request("copy", { handle })).handle as number;
  }

  async apply(handle: number, move: number): Promise<void> {
    await this.request("apply", { handle, move });
  }

  async legalMoves(handle: number): Promise<number> {
    return (await this.request("legal_moves", { handle })).count as number;
  }

  async returnsU0(handle: number): Promise<number> {
    const result = await this.request("returns", { handle });
    return (result.utilities as number[])[0];
  }

  async currentPlayer(handle: number): Promise<number> {
    return (await this.request("current_player", { handle })).player as number;
  }

  async playoutU0(handle: number, seed: bigint): Promise<number> {
    const result = await this.request(
      "playout", { handle, seed: seedToWire(seed) });
    return (result.utilities as number[])[0];
  }

  async release(handle: number): Promise<void> {
    await this.request("release", { handle });
  }
}

/**
 * Attach to a host and serve control requests until shutdown.
 *
 * Exit codes: 0 after a clean shutdown, 2 when the host is unreachable
 * or the conversation breaks, 3 on a protocol version mismatch.
 */
export async function runSocketGuest(host: string, port: number): Promise<number> {
  let engineChannel: Channel;
  let controlChannel: Channel;
  try {
    engineChannel = await attach(host, port, "engine");
  } catch (exc) {
    return exc instanceof ProtocolMismatch ? 3 : 2;
  }
  try {
    controlChannel = await attach(host, port, "control");
  } catch (exc) {
    engineChannel.close();
    return exc instanceof ProtocolMismatch ? 3 : 2;
  }
  const engine = new WireEngine(engineChannel);
  try {
    for (;;) {
      const req = await controlChannel.read();
      if (req === null) {
        return 2;
      }
      if (req.method === undefined) {
        continue;
      }
      if (req.method === "shutdown") {
        await controlChannel.write(ok(req.id, {}));
        return 0;
      }
      if (req.method === "select_move") {
        try {
          const result = await runSelectMove(engine, req.params as Params);
          await controlChannel.write(ok(req.id, result as unknown as Params));
        } catch (exc) {
          if (exc instanceof GuestError || exc instanceof GuestProtocolError) {
            await controlChannel.write(fail(req.id, 5, exc.message));
          } else {
            throw exc;
          }
        }
      } else {
        await controlChannel.write(fail(
          req.id, 1, `unknown control method ${JSON.stringify(req.method)}`));
      }
    }
  } catch (exc) {
    if (exc instanceof FrameError || exc instanceof GuestProtocolError
        || (exc as NodeJS.ErrnoException).code !== undefined) {
      return 2;
    }
    throw exc;
  } finally {
    engineChannel.close();
    controlChannel.close();
  }
}

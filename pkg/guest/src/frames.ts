/**
 * Length-prefixed JSON frames, byte-exact against the host codec.
 *
 * A frame is a 4-byte big-endian body length followed by UTF-8 JSON with
 * no whitespace and a fixed key order:
 *
 *   request:  {"id":N,"method":"...","params":{...}}
 *   success:  {"id":N,"result":{...}}
 *   failure:  {"id":N,"error":{"code":C,"message":"..."}}
 *
 * Seeds travel as decimal strings (u64 does not survive a JSON number);
 * handles are plain numbers.  Bodies above 16 MiB are refused.
 */

export const MAX_BODY = 16 * 1024 * 1024;
export const PROTOCOL_VERSION = 1;

export const ERR_UNKNOWN_METHOD = 1;
export const ERR_BAD_HANDLE = 2;
export const ERR_NOT_TERMINAL = 3;
export const ERR_ILLEGAL_MOVE = 4;
export const ERR_BAD_PARAMS = 5;
export const ERR_INTERNAL = 6;

export type Params = Record<string, unknown>;

export interface BridgeMessage {
  id: number;
  method?: string;
  params?: Params;
  result?: Params;
  error?: { code: number; message: string };
}

export class FrameError extends Error {}

export function request(id: number, method: string, params: Params): BridgeMessage {
  return { id, method, params };
}

export function ok(id: number, result: Params): BridgeMessage {
  return { id, result };
}

export function fail(id: number, code: number, message: string): BridgeMessage {
  return { id, error: { code, message } };
}

export function isRequest(msg: BridgeMessage): boolean {
  return msg.method !== undefined;
}

export function encodeFrame(msg: BridgeMessage): Buffer {
  let body: unknown;
  if (msg.method !== undefined) {
    if (msg.params === undefined || msg.result !== undefined || msg.error !== undefined) {
      throw new FrameError("request must carry params and nothing else");
    }
    body = { id: msg.id, method: msg.method, params: msg.params };
  } else if (msg.error !== undefined) {
    if (msg.result !== undefined) {
      throw new FrameError("response cannot carry both result and error");
    }
    body = { id: msg.id, error: { code: msg.error.code, message: msg.error.message } };
  } else if (msg.result !== undefined) {
    body = { id: msg.id, result: msg.result };
  } else {
    throw new FrameError("message is neither request nor response");
  }
  const encoded = Buffer.from(JSON.stringify(body), "utf-8");
  if (encoded.length > MAX_BODY) {
    throw new FrameError(`body of ${encoded.length} bytes exceeds the 16 MiB cap`);
  }
  const frame = Buffer.allocUnsafe(4 + encoded.length);
  frame.writeUInt32BE(encoded.length, 0);
  encoded.copy(frame, 4);
  return frame;
}

function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

function isObj(v: unknown): v is Params {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

export function parseBody(body: Buffer): BridgeMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(body.toString("utf-8"));
  } catch (exc) {
    throw new FrameError(`body is not UTF-8 JSON: ${exc}`);
  }
  if (!isObj(obj)) {
    throw new FrameError("body must be a JSON object");
  }
  if (!isInt(obj.id)) {
    throw new FrameError("missing or non-integer id");
  }
  const id = obj.id;
  const keys = Object.keys(obj).sort().join(",");
  if (keys === "id,method,params") {
    if (typeof obj.method !== "string" || !isObj(obj.params)) {
      throw new FrameError("request needs a string method and object params");
    }
    return request(id, obj.method, obj.params);
  }
  if (keys === "id,result") {
    if (!isObj(obj.result)) {
      throw new FrameError("result must be an object");
    }
    return ok(id, obj.result);
  }
  if (keys === "error,id") {
    const err = obj.error;
    if (!isObj(err) || Object.keys(err).sort().join(",") !== "code,message"
        || !isInt(err.code) || typeof err.message !== "string") {
      throw new FrameError("error must be {code, message}");
    }
    return fail(id, err.code, err.message);
  }
  throw new FrameError(`unrecognized envelope keys [${Object.keys(obj).sort()}]`);
}

/** Inverse of encodeFrame over one complete frame, prefix included. */
export function decodeFrame(frame: Buffer): BridgeMessage {
  if (frame.length < 4) {
    throw new FrameError("frame shorter than its length prefix");
  }
  const length = frame.readUInt32BE(0);
  if (length > MAX_BODY) {
    throw new FrameError(`declared body of ${length} bytes exceeds the 16 MiB cap`);
  }
  const body = frame.subarray(4);
  if (body.length !== length) {
    throw new FrameError(`declared ${length} body bytes, found ${body.length}`);
  }
  return parseBody(body);
}

/**
 * Incremental decoder for a byte stream: feed chunks, collect messages.
 * Holds at most one partial frame of buffered input.
 */
export class FrameDecoder {
  private buffered: Buffer = Buffer.alloc(0);

  push(chunk: Buffer): BridgeMessage[] {
    this.buffered = this.buffered.length === 0 ? chunk : Buffer.concat([this.buffered, chunk]);
    const out: BridgeMessage[] = [];
    for (;;) {
      if (this.buffered.length < 4) break;
      const length = this.buffered.readUInt32BE(0);
      if (length > MAX_BODY) {
        throw new FrameError(`declared body of ${length} bytes exceeds the 16 MiB cap`);
      }
      if (this.buffered.length < 4 + length) break;
      const body = this.buffered.subarray(4, 4 + length);
      this.buffered = Buffer.from(this.buffered.subarray(4 + length));
      out.push(parseBody(body));
    }
    return out;
  }

  /** Bytes of partial frame still waiting; nonzero at EOF means a cut-off peer. */
  pending(): number {
    return this.buffered.length;
  }
}

export function seedToWire(seed: bigint): string {
  return (seed & ((1n << 64n) - 1n)).toString(10);
}

export function seedFromWire(value: unknown): bigint {
  let seed: bigint;
  if (typeof value === "string") {
    if (!/^[0-9]+$/.test(value)) {
      throw new FrameError(`seed string must be decimal digits, got ${JSON.stringify(value)}`);
    }
    seed = BigInt(value);
  } else if (isInt(value)) {
    seed = BigInt(value);
  } else {
    throw new FrameError("seed must be a decimal string or integer");
  }
  if (seed < 0n || seed >= 1n << 64n) {
    throw new FrameError("seed out of 64-bit range");
  }
  return seed;
}

/**
 * Wrapper over the native addon that embeds the engine runtime in this
 * process.  Calls cross as plain numbers and small double arrays; the
 * addon reports failures as errors carrying "bridge:<code>:<detail>".
 */

import * as path from "node:path";

import { Engine } from "./agents";
import { Params } from "./frames";
import { GuestProtocolError } from "./socket";

export interface BridgeAddon {
  init(): void;
  newTrial(game: unknown): number;
  copy(handle: unknown): number;
  apply(handle: unknown, move: unknown): void;
  legalMoves(handle: unknown): number;
  isTerminal(handle: unknown): boolean;
  returnsU(handle: unknown): number[];
  currentPlayer(handle: unknown): number;
  playout(handle: unknown, seedHi: number, seedLo: number): number[];
  release(handle: unknown): void;
  stats(): number[];
}

/** Method order of the stats() array tail; index 0 is live_handles. */
export const STAT_METHODS = [
  "new_trial", "copy", "apply", "legal_moves", "is_terminal", "returns",
  "current_player", "playout", "release", "engine_stats",
] as const;

export const ADDON_PATH = path.join(
  __dirname, "..", "build", "bridge_embed.node");

export function loadAddon(): BridgeAddon {
  try {
    // eslint-disable-next-line @typescript-eslint/no-var-requires
    return require(ADDON_PATH) as BridgeAddon;
  } catch (exc) {
    throw new Error(
      `cannot load the embedded engine addon at ${ADDON_PATH}; `
      + `run the native build first (${(exc as Error).message})`);
  }
}

export class EngineCallError extends Error {
  constructor(readonly code: number, readonly detail: string) {
    super(detail);
  }
}

/** Recognize an addon failure; null for anything else. */
export function asEngineCallError(exc: unknown): EngineCallError | null {
  if (exc instanceof Error) {
    const m = /^bridge:(\d+):([\s\S]*)$/.exec(exc.message);
    if (m !== null) {
      return new EngineCallError(Number(m[1]), m[2]);
    }
  }
  return null;
}

export function statsToWire(addon: BridgeAddon): Params {
  const raw = addon.stats();
  const calls: Record<string, number> = {};
  for (let i = 0; i < STAT_METHODS.length; i++) {
    const n = raw[1 + i];
    if (n > 0) {
      calls[STAT_METHODS[i]] = n;
    }
  }
  return { live_handles: raw[0], calls };
}

/** Engine view for the guest agents, backed by in-process calls. */
export class EmbeddedEngine implements Engine {
  constructor(private addon: BridgeAddon) {}

  private run<T>(op: () => T): Promise<T> {
    try {
      return Promise.resolve(op());
    } catch (exc) {
      const mapped = asEngineCallError(exc);
      if (mapped !== null) {
        return Promise.reject(new GuestProtocolError(
          `engine error [${mapped.code}] ${mapped.detail}`));
      }
      return Promise.reject(exc);
    }
  }

  copy(handle: number): Promise<number> {
    return this.run(() => this.addon.copy(handle));
  }

  apply(handle: number, move: number): Promise<void> {
    return this.run(() => {
      this.addon.apply(handle, move);
    });
  }

  legalMoves(handle: number): Promise<number> {
    return this.run(() => this.addon.legalMoves(handle));
  }

  returnsU0(handle: number): Promise<number> {
    return this.run(() => this.addon.returnsU(handle)[0]);
  }

  currentPlayer(handle: number): Promise<number> {
    return this.run(() => this.addon.currentPlayer(handle));
  }

  playoutU0(handle: number, seed: bigint): Promise<number> {
    const hi = Number(seed >> 32n);
    const lo = Number(seed & 0xffffffffn);
    return this.run(() => this.addon.playout(handle, hi, lo)[0]);
  }

  release(handle: number): Promise<void> {
    return this.run(() => {
      this.addon.release(handle);
    });
  }
}

/**
 * Guest-side UCT and anytime alpha-beta over a remote engine handle.
 *
 * This is an operation-for-operation port of the host's agents: same
 * UCB1 form, same strict-greater tie-breaks, same SplitMix64 seeding
 * discipline (one draw per iteration, before descent), same draw
 * default when the deadline truncates a subtree.  Under an iteration
 * budget no clock is read, so move index and effort counter must come
 * out bit-identical to the native implementation on every transport.
 *
 * Per UCT iteration the guest makes exactly one playout call; expanding
 * a node costs one copy, one apply and one legal_moves.  Alpha-beta
 * probes legal_moves first (count zero doubles as the terminal test)
 * and releases every handle it created before returning.
 */

import { performance } from "node:perf_hooks";

import { seedFromWire } from "./frames";
import { lnInt } from "./ilog";
import { Rng } from "./rng";

export const DEFAULT_EXPLORATION = Math.sqrt(2);

/** Search-level failure; the control loop reports it as error code 5. */
export class GuestError extends Error {}

export interface Engine {
  copy(handle: number): Promise<number>;
  apply(handle: number, move: number): Promise<void>;
  legalMoves(handle: number): Promise<number>;
  returnsU0(handle: number): Promise<number>;
  currentPlayer(handle: number): Promise<number>;
  playoutU0(handle: number, seed: bigint): Promise<number>;
  release(handle: number): Promise<void>;
}

export interface Budget {
  wallMs: number | null;
  maxIterations: number | null;
}

export function makeBudget(wallMs: unknown, maxIterations: unknown): Budget {
  const fields = [wallMs, maxIterations].filter(
    (f) => f !== null && f !== undefined);
  if (fields.length !== 1) {
    throw new GuestError("budget needs exactly one of wall_ms or max_iterations");
  }
  const bound = fields[0];
  if (typeof bound !== "number" || !Number.isFinite(bound) || bound <= 0) {
    throw new GuestError("budget must be positive");
  }
  if (maxIterations !== null && maxIterations !== undefined
      && !Number.isInteger(maxIterations)) {
    throw new GuestError("max_iterations must be an integer");
  }
  return {
    wallMs: wallMs === undefined || wallMs === null ? null : (wallMs as number),
    maxIterations: maxIterations === undefined || maxIterations === null
      ? null : (maxIterations as number),
  };
}

export interface SelectOutcome {
  move_index: number;
  playouts?: number;
  expansions?: number;
  elapsed: number;
}

function now(): number {
  return performance.now() / 1000;
}

class RemoteNode {
  handle: number;
  k: number;
  mover: number;
  children: RemoteNode[] = [];
  visits = 0;
  rewardSum = 0;

  constructor(handle: number, k: number, mover: number) {
    this.handle = handle;
    this.k = k;
    this.mover = mover;
  }
}

async function expand(engine: Engine, parent: RemoteNode): Promise<RemoteNode> {
  const handle = await engine.copy(parent.handle);
  await engine.apply(handle, parent.children.length);
  const child = new RemoteNode(
    handle, await engine.legalMoves(handle), 1 - parent.mover);
  parent.children.push(child);
  return child;
}

function selectChild(node: RemoteNode, c: number): RemoteNode {
  let best: RemoteNode | null = null;
  let bestScore = -Infinity;
  let logN: number | null = null;
  for (const child of node.children) {
    const v = child.visits;
    if (v === 0) {
      return child; // infinite score, first such child wins the tie
    }
    if (logN === null) {
      logN = lnInt(node.visits);
    }
    const score = child.rewardSum / v + c * Math.sqrt(logN / v);
    if (score > bestScore) {
      bestScore = score;
      best = child;
    }
  }
  return best as RemoteNode;
}

export async function guestUct(
  engine: Engine, rootHandle: number, budget: Budget, seed: bigint,
  c: number = DEFAULT_EXPLORATION,
): Promise<SelectOutcome> {
  const start = now();
  const root = new RemoteNode(
    rootHandle, await engine.legalMoves(rootHandle),
    await engine.currentPlayer(rootHandle));
  if (root.k === 0) {
    throw new GuestError("cannot search a terminal state");
  }
  const created: number[] = [];
  for (let i = 0; i < root.k; i++) {
    created.push((await expand(engine, root)).handle);
  }
  const stream = new Rng(seed);

  const oneIteration = async (): Promise<void> => {
    const seedI = stream.nextU64();
    let node = root;
    const path = [root];
    for (;;) {
      if (node.k === 0) {
        break;
      }
      if (node.children.length === node.k) {
        node = selectChild(node, c);
        path.push(node);
        continue;
      }
      node = await expand(engine, node);
      created.push(node.handle);
      path.push(node);
      break;
    }
    const u0 = await engine.playoutU0(node.handle, seedI);
    const u1 = -u0;
    for (const visited of path) {
      visited.visits += 1;
      visited.rewardSum += visited.mover === 1 ? (u0 + 1) * 0.5 : (u1 + 1) * 0.5;
    }
  };

  if (budget.maxIterations !== null) {
    for (let r = 0; r < budget.maxIterations; r++) {
      await oneIteration();
    }
  } else {
    const deadline = start + (budget.wallMs as number) / 1000;
    while (now() < deadline) {
      await oneIteration();
    }
  }

  let bestI = 0;
  let bestVisits = -1;
  for (let i = 0; i < root.children.length; i++) {
    if (root.children[i].visits > bestVisits) {
      bestI = i;
      bestVisits = root.children[i].visits;
    }
  }
  for (const handle of created) {
    await engine.release(handle);
  }
  return { move_index: bestI, playouts: root.visits, elapsed: now() - start };
}

class GuestDeadline {
  until: number | null;
  cap: number | null;

  constructor(budget: Budget, start: number) {
    this.until = budget.wallMs === null ? null : start + budget.wallMs / 1000;
    this.cap = budget.maxIterations;
  }

  expired(expansions: number): boolean {
    if (this.cap !== null && expansions >= this.cap) {
      return true;
    }
    if (this.until !== null && now() >= this.until) {
      return true;
    }
    return false;
  }
}

interface Counter {
  expansions: number;
}

async function guestAb(
  engine: Engine, handle: number, mover: number, alpha: number, beta: number,
  deadline: GuestDeadline, counter: Counter,
): Promise<number> {
  const k = await engine.legalMoves(handle);
  if (k === 0) {
    const u0 = await engine.returnsU0(handle);
    return mover === 0 ? u0 : -u0;
  }
  if (deadline.expired(counter.expansions)) {
    return 0.0;
  }
  counter.expansions += 1;
  let best = -Infinity;
  for (let i = 0; i < k; i++) {
    const child = await engine.copy(handle);
    await engine.apply(child, i);
    const v = -(await guestAb(
      engine, child, 1 - mover, -beta, -alpha, deadline, counter));
    await engine.release(child);
    if (v > best) {
      best = v;
    }
    if (v > alpha) {
      alpha = v;
    }
    if (alpha >= beta) {
      break;
    }
  }
  return best;
}

export async function guestMinimax(
  engine: Engine, rootHandle: number, budget: Budget,
): Promise<SelectOutcome> {
  const start = now();
  const mover = await engine.currentPlayer(rootHandle);
  const k = await engine.legalMoves(rootHandle);
  if (k === 0) {
    throw new GuestError("cannot search a terminal state");
  }
  const deadline = new GuestDeadline(budget, start);
  const counter: Counter = { expansions: 1 };
  let bestI = 0;
  let bestV = -Infinity;
  let alpha = -Infinity;
  for (let i = 0; i < k; i++) {
    let v: number;
    if (deadline.expired(counter.expansions)) {
      v = 0.0;
    } else {
      const child = await engine.copy(rootHandle);
      await engine.apply(child, i);
      v = -(await guestAb(
        engine, child, 1 - mover, -Infinity, -alpha, deadline, counter));
      await engine.release(child);
    }
    if (v > bestV) {
      bestV = v;
      bestI = i;
    }
    if (v > alpha) {
      alpha = v;
    }
  }
  return {
    move_index: bestI, expansions: counter.expansions, elapsed: now() - start,
  };
}

/** Dispatch one select_move control request against an attached engine. */
export async function runSelectMove(
  engine: Engine, params: Record<string, unknown>,
): Promise<SelectOutcome> {
  const budgetSpec = (params.budget ?? {}) as Record<string, unknown>;
  const budget = makeBudget(budgetSpec.wall_ms, budgetSpec.max_iterations);
  const handle = params.handle;
  if (typeof handle !== "number" || !Number.isInteger(handle)) {
    throw new GuestError("handle must be an integer");
  }
  const algorithm = params.algorithm;
  if (algorithm === "uct") {
    const seed = seedFromWire(params.seed ?? "0");
    const c = params.c === undefined ? DEFAULT_EXPLORATION : Number(params.c);
    if (!Number.isFinite(c)) {
      throw new GuestError("exploration constant must be a finite number");
    }
    return guestUct(engine, handle, budget, seed, c);
  }
  if (algorithm === "minimax") {
    return guestMinimax(engine, handle, budget);
  }
  throw new GuestError(`unknown algorithm ${JSON.stringify(algorithm)}`);
}

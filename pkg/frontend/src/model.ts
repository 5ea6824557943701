/**
 * Pure client-side view model.
 *
 * Holds only what the server has already confirmed (revealed values, scores)
 * plus the local path draft the participant is stepping through. All
 * mutations go through small pure functions so the logic is testable
 * without a DOM or a server.
 */

import type { ClickResult, MoveResult, ServerState, SessionStart, TopologyJson } from "./api.js";

export interface Tree {
  root: number;
  nodes: number[];
  children: Map<number, number[]>;
  parent: Map<number, number>;
  depth: Map<number, number>;
  leaves: number[];
}

export function buildTree(topology: TopologyJson): Tree {
  const children = new Map<number, number[]>();
  const parent = new Map<number, number>();
  const nodes = new Set<number>([topology.root]);
  for (const [p, kids] of Object.entries(topology.edges)) {
    const pid = Number(p);
    nodes.add(pid);
    children.set(pid, [...kids]);
    for (const c of kids) {
      nodes.add(c);
      parent.set(c, pid);
    }
  }
  for (const n of nodes) {
    if (!children.has(n)) children.set(n, []);
  }
  const depth = new Map<number, number>([[topology.root, 0]]);
  const queue = [topology.root];
  while (queue.length) {
    const n = queue.shift()!;
    for (const c of children.get(n) ?? []) {
      depth.set(c, (depth.get(n) ?? 0) + 1);
      queue.push(c);
    }
  }
  const sorted = [...nodes].sort((a, b) => a - b);
  return {
    root: topology.root,
    nodes: sorted,
    children,
    parent,
    depth,
    leaves: sorted.filter((n) => (children.get(n) ?? []).length === 0),
  };
}

export interface ViewModel {
  sessionId: string;
  participantId: string;
  condition: string;
  rewardSet: number[];
  clickCost: number;
  tree: Tree;
  trialIndex: number;
  nTrials: number;
  revealed: Map<number, number>;
  clicks: number[];
  trialCost: number;
  totalScore: number;
  pathDraft: number[];
  lastPathValues: Map<number, number>;
  done: boolean;
  finished: boolean;
  toast: string | null;
}

export function fromSessionStart(start: SessionStart): ViewModel {
  return {
    sessionId: start.session_id,
    participantId: start.participant_id,
    condition: start.condition,
    rewardSet: start.reward_set,
    clickCost: start.click_cost,
    tree: buildTree(start.topology),
    trialIndex: start.trial.trial_index,
    nTrials: start.trial.n_trials,
    revealed: new Map(),
    clicks: [],
    trialCost: 0,
    totalScore: 0,
    pathDraft: [],
    lastPathValues: new Map(),
    done: false,
    finished: false,
    toast: null,
  };
}

export function fromServerState(state: ServerState): ViewModel {
  return {
    sessionId: state.session_id,
    participantId: state.participant_id,
    condition: state.condition,
    rewardSet: state.reward_set,
    clickCost: state.click_cost,
    tree: buildTree(state.topology),
    trialIndex: state.trial_index,
    nTrials: state.n_trials,
    revealed: new Map(Object.entries(state.revealed).map(([n, v]) => [Number(n), v])),
    clicks: [...state.clicks],
    trialCost: state.trial_cost,
    totalScore: state.total_score,
    pathDraft: [],
    lastPathValues: new Map(),
    done: state.done_with_trials,
    finished: state.finished,
    toast: null,
  };
}

/** Client-side guard: only unrevealed non-root nodes are clickable. */
export function canClick(vm: ViewModel, node: number): boolean {
  return !vm.done && node !== vm.tree.root && vm.tree.nodes.includes(node) && !vm.revealed.has(node);
}

export function applyClick(vm: ViewModel, result: ClickResult): ViewModel {
  const revealed = new Map(vm.revealed);
  revealed.set(result.node, result.value);
  return {
    ...vm,
    revealed,
    clicks: [...vm.clicks, result.node],
    trialCost: result.running_cost,
    toast: null,
  };
}

/** The node the draft currently stands on (root when empty). */
export function draftTip(vm: ViewModel): number {
  return vm.pathDraft.length ? vm.pathDraft[vm.pathDraft.length - 1] : vm.tree.root;
}

export function draftOptions(vm: ViewModel): number[] {
  return vm.tree.children.get(draftTip(vm)) ?? [];
}

export function draftComplete(vm: ViewModel): boolean {
  return vm.pathDraft.length > 0 && draftOptions(vm).length === 0;
}

export function draftAdvance(vm: ViewModel, childIndex: number): ViewModel {
  const options = draftOptions(vm);
  if (childIndex < 0 || childIndex >= options.length) return vm;
  return { ...vm, pathDraft: [...vm.pathDraft, options[childIndex]] };
}

export function draftBack(vm: ViewModel): ViewModel {
  return { ...vm, pathDraft: vm.pathDraft.slice(0, -1) };
}

/** Step toward a node by mouse: allowed only onto a child of the tip. */
export function draftToward(vm: ViewModel, node: number): ViewModel {
  const index = draftOptions(vm).indexOf(node);
  return index >= 0 ? draftAdvance(vm, index) : vm;
}

/**
 * Arrow-key stepping: with one option any arrow advances; with two,
 * left/right; with three, left/up/right.
 */
export function draftByArrow(vm: ViewModel, key: "ArrowLeft" | "ArrowUp" | "ArrowRight"): ViewModel {
  const count = draftOptions(vm).length;
  if (count === 0) return vm;
  if (count === 1) return draftAdvance(vm, 0);
  const mapping: Record<string, number> =
    count === 2 ? { ArrowLeft: 0, ArrowRight: 1 } : { ArrowLeft: 0, ArrowUp: 1, ArrowRight: 2 };
  const index = mapping[key];
  return index === undefined ? vm : draftAdvance(vm, index);
}

export function applyMove(vm: ViewModel, result: MoveResult): ViewModel {
  const lastPathValues = new Map(
    Object.entries(result.node_values_on_path).map(([n, v]) => [Number(n), v]),
  );
  const next: ViewModel = {
    ...vm,
    totalScore: result.total_score,
    lastPathValues,
    pathDraft: [],
    revealed: new Map(),
    clicks: [],
    trialCost: 0,
    toast: null,
  };
  if (result.next_trial) {
    next.trialIndex = result.next_trial.trial_index;
  } else {
    next.done = true;
  }
  return next;
}

export function withToast(vm: ViewModel, message: string): ViewModel {
  return { ...vm, toast: message };
}

export function bonusDollars(totalScore: number): number {
  return Math.max(0, totalScore) * 0.002;
}
